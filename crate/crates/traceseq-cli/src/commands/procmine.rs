//! Process-mining subcommand: DFG, transition times and daily-path
//! variants.

use std::path::Path;

use traceseq::procmine;
use traceseq::Result;

use crate::config::ProcmineConfig;
use crate::output::{atomic_write_with, print_summary};

use super::{read_corpus, sessionize, Level};

pub fn run_procmine(
    input: &Path,
    format: Option<&str>,
    out_dir: &Path,
    cfg: &ProcmineConfig,
) -> Result<()> {
    let (sequences, _) = read_corpus(input, format)?;
    let sessions = sessionize(&sequences, cfg.window_minutes, Level::Activity)?;
    let cases = procmine::daily_cases(&sessions);

    let dfg = procmine::build_dfg(&cases)?;
    let variants = procmine::top_variants(&cases, cfg.top_k)?;
    let matrix = procmine::transition_time_matrix(&cases)?;

    // Second DOT restricted to the top-k variants, mirroring a
    // top-paths-only process map.
    let top_cases = procmine::filter_to_variants(&cases, &variants);
    let top_dfg = procmine::build_dfg(&top_cases)?;

    let dfg_path = out_dir.join("dfg.dot");
    atomic_write_with(&dfg_path, |buf| {
        buf.extend_from_slice(dfg.to_dot().as_bytes());
        Ok(())
    })?;
    let top_path = out_dir.join("dfg_top.dot");
    atomic_write_with(&top_path, |buf| {
        buf.extend_from_slice(top_dfg.to_dot().as_bytes());
        Ok(())
    })?;
    let variants_path = out_dir.join("variants.csv");
    atomic_write_with(&variants_path, |buf| variants.write_csv(buf))?;
    let matrix_path = out_dir.join("transition_times.csv");
    atomic_write_with(&matrix_path, |buf| matrix.write_csv(buf))?;

    print_summary(
        "procmine",
        &[&dfg_path, &top_path, &variants_path, &matrix_path],
        serde_json::json!({
            "cases": dfg.cases,
            "activities": dfg.nodes.len(),
            "variants_reported": variants.rows.len(),
            "top_k": cfg.top_k,
        }),
    );
    Ok(())
}
