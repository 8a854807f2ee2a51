//! Corpus-level subcommands: synth, ingest, report, sessions.

use std::path::Path;

use traceseq::ingest::{self, Format};
use traceseq::model::format_timestamp;
use traceseq::synth::{self, SynthConfig};
use traceseq::{Error, Result};

use crate::config::SynthCliConfig;
use crate::output::{atomic_write_with, print_summary};

use super::{corpus_format, read_corpus, sessionize, Level};

fn parse_date(s: &str) -> Result<i64> {
    let date = chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map_err(|e| Error::config(format!("bad date {s:?}: {e}")))?;
    Ok(date
        .and_hms_opt(0, 0, 0)
        .expect("midnight exists")
        .and_utc()
        .timestamp())
}

pub fn synth_config(cfg: &SynthCliConfig) -> Result<SynthConfig> {
    if cfg.multiplicity.len() != 4 {
        return Err(Error::config(
            "multiplicity needs exactly four counts (1..4 platforms)",
        ));
    }
    if cfg.median_length <= 0.0 {
        return Err(Error::config("median_length must be positive"));
    }
    Ok(SynthConfig {
        seed: cfg.seed,
        n_users: cfg.users,
        multiplicity: [
            cfg.multiplicity[0],
            cfg.multiplicity[1],
            cfg.multiplicity[2],
            cfg.multiplicity[3],
        ],
        length_mu: cfg.median_length.ln(),
        length_sigma: cfg.sigma,
        start_ts: parse_date(&cfg.start_date)?,
        end_ts: parse_date(&cfg.end_date)?,
        p_stay: cfg.p_stay,
        ..SynthConfig::paper_shape(cfg.seed)
    })
}

pub fn run_synth(cfg: &SynthCliConfig, out: &Path, format: Option<&str>) -> Result<()> {
    let config = synth_config(cfg)?;
    let corpus = synth::generate(&config)?;
    let format = corpus_format(out, format)?;
    atomic_write_with(out, |buf| match format {
        Format::Csv => ingest::write_events_csv(buf, &corpus),
        Format::Jsonl => ingest::write_events_jsonl(buf, &corpus),
    })?;
    let report = ingest::summarize(&corpus);
    print_summary(
        "synth",
        &[out],
        serde_json::json!({
            "seed": config.seed,
            "users": report.users,
            "events": report.rows_read,
            "multiplicity": report.platform_multiplicity,
        }),
    );
    Ok(())
}

pub fn run_ingest(input: &Path, format: Option<&str>, out: Option<&Path>) -> Result<()> {
    let (_, report) = read_corpus(input, format)?;
    let json = serde_json::to_vec_pretty(&report).expect("report serializes");
    let mut outputs: Vec<&Path> = Vec::new();
    if let Some(out) = out {
        atomic_write_with(out, |buf| {
            buf.extend_from_slice(&json);
            Ok(())
        })?;
        outputs.push(out);
    }
    print_summary(
        "ingest",
        &outputs,
        serde_json::json!({
            "rows_read": report.rows_read,
            "rows_accepted": report.rows_accepted,
            "rows_rejected": report.rows_rejected,
            "users": report.users,
        }),
    );
    Ok(())
}

pub fn run_report(input: &Path, format: Option<&str>, out: Option<&Path>) -> Result<()> {
    let (sequences, _) = read_corpus(input, format)?;
    let report = ingest::summarize(&sequences);
    let json = serde_json::to_vec_pretty(&report).expect("report serializes");
    let mut outputs: Vec<&Path> = Vec::new();
    if let Some(out) = out {
        atomic_write_with(out, |buf| {
            buf.extend_from_slice(&json);
            Ok(())
        })?;
        outputs.push(out);
    }
    print_summary(
        "report",
        &outputs,
        serde_json::json!({
            "users": report.users,
            "events": report.rows_read,
            "length_median": report.length_median,
            "length_mean": report.length_mean,
            "multiplicity": report.platform_multiplicity,
        }),
    );
    Ok(())
}

pub fn run_sessions(
    input: &Path,
    format: Option<&str>,
    out: &Path,
    window_minutes: u32,
    level: Level,
) -> Result<()> {
    let (sequences, _) = read_corpus(input, format)?;
    let sessions = sessionize(&sequences, window_minutes, level)?;
    let total: usize = sessions.iter().map(Vec::len).sum();
    atomic_write_with(out, |buf| {
        let mut wtr = csv::Writer::from_writer(buf);
        wtr.write_record(["user_id", "symbol", "platform", "start", "end", "count"])
            .map_err(|e| Error::invalid(format!("csv: {e}")))?;
        for user in &sessions {
            for s in user {
                wtr.write_record([
                    s.user_id.as_str(),
                    s.symbol.as_str(),
                    s.platform.name(),
                    &format_timestamp(s.start),
                    &format_timestamp(s.end),
                    &s.count.to_string(),
                ])
                .map_err(|e| Error::invalid(format!("csv: {e}")))?;
            }
        }
        wtr.flush()?;
        Ok(())
    })?;
    print_summary(
        "sessions",
        &[out],
        serde_json::json!({
            "users": sessions.len(),
            "sessions": total,
            "window_minutes": window_minutes,
        }),
    );
    Ok(())
}
