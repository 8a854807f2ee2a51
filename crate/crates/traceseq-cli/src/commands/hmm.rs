//! Hidden-Markov subcommand: daily symbol sequences, state selection and
//! the chosen model as JSON.

use std::path::Path;

use traceseq::hmm::{self, FitOptions};
use traceseq::preprocess;
use traceseq::{Error, Result};

use crate::config::HmmConfig;
use crate::output::{atomic_write_with, print_summary};

use super::{read_corpus, sessionize, Level};

pub fn run_hmm(
    input: &Path,
    format: Option<&str>,
    out_dir: &Path,
    cfg: &HmmConfig,
) -> Result<()> {
    if cfg.k_min == 0 || cfg.k_min > cfg.k_max {
        return Err(Error::config("need 1 <= k_min <= k_max"));
    }
    let (sequences, _) = read_corpus(input, format)?;
    let sessions = sessionize(&sequences, cfg.window_minutes, Level::Activity)?;

    // Daily session streams, filtered to the configured length band.
    let mut daily: Vec<Vec<traceseq::Session>> = Vec::new();
    for user in &sessions {
        for (_, group) in preprocess::split_sessions_daily(user) {
            daily.push(group);
        }
    }
    let daily =
        preprocess::percentile_filter_by(daily, cfg.lo, cfg.hi, |d: &Vec<_>| d.len())?;

    let mut lexicon = traceseq::Lexicon::new(traceseq::LexiconMode::PlatformActivity);
    let encoded: Vec<Vec<u32>> = daily
        .iter()
        .map(|day| day.iter().map(|s| lexicon.intern(&s.symbol)).collect())
        .collect();

    let ks: Vec<usize> = (cfg.k_min..=cfg.k_max).collect();
    let opts = FitOptions {
        restarts: cfg.restarts,
        max_iterations: cfg.max_iterations,
        ..FitOptions::default()
    };
    let (table, models) = hmm::select_states(&encoded, lexicon.len(), &ks, cfg.seed, &opts)?;

    let selection_path = out_dir.join("selection.csv");
    atomic_write_with(&selection_path, |buf| table.write_csv(buf))?;

    let chosen = models
        .iter()
        .find(|m| m.k == table.chosen_k)
        .expect("chosen K was fitted");
    let model_path = out_dir.join("model.json");
    atomic_write_with(&model_path, |buf| {
        let doc = serde_json::json!({
            "k": chosen.k,
            "alphabet": lexicon.descriptors(),
            "initial": chosen.initial,
            "transition": chosen.transition,
            "emission": chosen.emission,
            "log_likelihood": chosen.log_likelihood,
            "converged": chosen.converged,
        });
        buf.extend_from_slice(&serde_json::to_vec_pretty(&doc).expect("serializes"));
        Ok(())
    })?;

    print_summary(
        "hmm",
        &[&selection_path, &model_path],
        serde_json::json!({
            "daily_sequences": encoded.len(),
            "alphabet": lexicon.len(),
            "chosen_k": table.chosen_k,
            "aic_k": table.aic_k,
            "criteria_agree": table.criteria_agree,
        }),
    );
    Ok(())
}
