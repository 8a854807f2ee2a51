//! Atomic file writes and the machine-readable summary line.

use std::fs;
use std::io::Write;
use std::path::Path;

use traceseq::Result;

/// Writes bytes atomically: temp file in the target directory, then rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = match dir {
        Some(dir) => tempfile::NamedTempFile::new_in(dir)?,
        None => tempfile::NamedTempFile::new_in(".")?,
    };
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Builds a file via a writer callback and writes it atomically.
pub fn atomic_write_with(
    path: &Path,
    build: impl FnOnce(&mut Vec<u8>) -> Result<()>,
) -> Result<()> {
    let mut buf = Vec::new();
    build(&mut buf)?;
    atomic_write(path, &buf)
}

/// Prints the one-line JSON run summary to standard output.
pub fn print_summary(command: &str, outputs: &[&Path], extra: serde_json::Value) {
    let mut summary = serde_json::json!({
        "command": command,
        "status": "ok",
        "outputs": outputs
            .iter()
            .map(|p| p.display().to_string())
            .collect::<Vec<_>>(),
    });
    if let (Some(obj), Some(extra_obj)) = (summary.as_object_mut(), extra.as_object()) {
        for (k, v) in extra_obj {
            obj.insert(k.clone(), v.clone());
        }
    }
    println!("{summary}");
}
