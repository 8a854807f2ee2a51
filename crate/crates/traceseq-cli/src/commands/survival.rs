//! Event-history subcommand: Kaplan-Meier curves per platform plus the Cox
//! hazard table.

use std::path::Path;

use traceseq::survival::{self, SinglePlatformPolicy};
use traceseq::{Error, Platform, Result};

use crate::config::SurvivalConfig;
use crate::output::{atomic_write_with, print_summary};

use super::{read_corpus, sessionize, Level};

pub fn run_survival(
    input: &Path,
    format: Option<&str>,
    out_dir: &Path,
    cfg: &SurvivalConfig,
) -> Result<()> {
    let (sequences, _) = read_corpus(input, format)?;
    let sessions = sessionize(&sequences, cfg.window_minutes, Level::Platform)?;
    let policy = match cfg.single_platform.as_str() {
        "include" => SinglePlatformPolicy::Include,
        "exclude" => SinglePlatformPolicy::Exclude,
        other => {
            return Err(Error::config(format!(
                "unknown single_platform policy {other:?}"
            )))
        }
    };
    let build = survival::build_durations(&sessions, policy);

    let curves = survival::kaplan_meier(&build.records);
    let mut outputs = Vec::new();
    for curve in &curves {
        let path = out_dir.join(format!("km_{}.csv", curve.platform.to_lowercase()));
        atomic_write_with(&path, |buf| curve.write_csv(buf))?;
        outputs.push(path);
    }

    let baseline: Platform = cfg.baseline.parse().expect("infallible");
    let cox = survival::cox_fit(&build.records, &baseline)?;
    let cox_path = out_dir.join("cox.csv");
    atomic_write_with(&cox_path, |buf| cox.write_csv(buf))?;
    outputs.push(cox_path);

    let refs: Vec<&Path> = outputs.iter().map(|p| p.as_path()).collect();
    print_summary(
        "survival",
        &refs,
        serde_json::json!({
            "records": build.records.len(),
            "zero_adjusted": build.zero_adjusted,
            "platforms": curves.iter().map(|c| c.platform.clone()).collect::<Vec<_>>(),
            "cox_converged": cox.converged,
            "baseline": cfg.baseline,
        }),
    );
    Ok(())
}
