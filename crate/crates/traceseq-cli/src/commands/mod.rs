//! Subcommand implementations.

pub mod data;
pub mod embedding;
pub mod hmm;
pub mod network;
pub mod procmine;
pub mod seqa;
pub mod survival;

use std::path::Path;

use traceseq::ingest::{self, Format, IngestReport};
use traceseq::model::Session;
use traceseq::preprocess;
use traceseq::{Error, Result, UserSequence};

/// Session granularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Activity,
    Platform,
}

impl Level {
    pub fn parse(s: &str) -> Result<Level> {
        match s {
            "activity" => Ok(Level::Activity),
            "platform" => Ok(Level::Platform),
            other => Err(Error::config(format!(
                "unknown level {other:?}; expected activity or platform"
            ))),
        }
    }
}

/// Infers the corpus format from the file extension unless overridden.
pub fn corpus_format(path: &Path, explicit: Option<&str>) -> Result<Format> {
    match explicit {
        Some("csv") => Ok(Format::Csv),
        Some("jsonl") => Ok(Format::Jsonl),
        Some(other) => Err(Error::config(format!(
            "unknown format {other:?}; expected csv or jsonl"
        ))),
        None => Ok(
            match path.extension().and_then(|e| e.to_str()) {
                Some("jsonl") | Some("ndjson") => Format::Jsonl,
                _ => Format::Csv,
            },
        ),
    }
}

pub fn read_corpus(
    path: &Path,
    explicit_format: Option<&str>,
) -> Result<(Vec<UserSequence>, IngestReport)> {
    let format = corpus_format(path, explicit_format)?;
    ingest::read_events(path, format)
}

/// Collapses every user's events into sessions at the given level.
pub fn sessionize(
    sequences: &[UserSequence],
    window_minutes: u32,
    level: Level,
) -> Result<Vec<Vec<Session>>> {
    sequences
        .iter()
        .map(|seq| match level {
            Level::Activity => preprocess::collapse_sessions(seq, window_minutes),
            Level::Platform => preprocess::collapse_platform_sessions(seq, window_minutes),
        })
        .collect()
}

/// Shared lexicon over per-user session symbol streams.
pub fn encode_sessions(
    sessions_per_user: &[Vec<Session>],
) -> (Vec<Vec<u32>>, traceseq::Lexicon) {
    let mut lexicon = traceseq::Lexicon::new(traceseq::LexiconMode::PlatformActivity);
    let encoded = sessions_per_user
        .iter()
        .map(|sessions| {
            sessions
                .iter()
                .map(|s| lexicon.intern(&s.symbol))
                .collect()
        })
        .collect();
    (encoded, lexicon)
}
