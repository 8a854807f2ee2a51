//! Parsing event-log files into user-sequences, plus corpus summaries.
//!
//! Two formats are supported: RFC 4180 CSV with a
//! `user_id,timestamp,platform,activity,content` header, and JSONL with one
//! event object per line using the same field names. Timestamps may be
//! ISO-8601 or integer epoch seconds; everything is normalized to epoch
//! seconds internally. Malformed rows are rejected and counted, never fatal.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{format_timestamp, Event, Platform, UserSequence};
use crate::stats::{mean, percentile};

/// Input/output serialization of a corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Format {
    Csv,
    Jsonl,
}

/// Ingest and corpus summary statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub rows_read: u64,
    pub rows_accepted: u64,
    pub rows_rejected: u64,
    pub users: usize,
    /// Accepted event count per platform.
    pub per_platform: BTreeMap<String, u64>,
    pub min_timestamp: Option<i64>,
    pub max_timestamp: Option<i64>,
    /// Sequence-length percentiles under linear interpolation.
    pub length_p25: f64,
    pub length_median: f64,
    pub length_p75: f64,
    pub length_p90: f64,
    pub length_mean: f64,
    pub length_max: u64,
    /// Users per number of distinct platforms donated.
    pub platform_multiplicity: BTreeMap<usize, usize>,
}

impl IngestReport {
    fn empty() -> Self {
        IngestReport {
            rows_read: 0,
            rows_accepted: 0,
            rows_rejected: 0,
            users: 0,
            per_platform: BTreeMap::new(),
            min_timestamp: None,
            max_timestamp: None,
            length_p25: 0.0,
            length_median: 0.0,
            length_p75: 0.0,
            length_p90: 0.0,
            length_mean: 0.0,
            length_max: 0,
            platform_multiplicity: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Deserialize)]
struct RawCsvRow {
    user_id: String,
    timestamp: String,
    platform: String,
    activity: String,
    #[serde(default)]
    content: Option<String>,
}

#[derive(Debug, Deserialize)]
struct RawJsonRow {
    user_id: String,
    timestamp: TimestampField,
    platform: String,
    activity: String,
    #[serde(default)]
    content: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum TimestampField {
    Epoch(i64),
    Text(String),
}

/// Parses an ISO-8601 or epoch-second timestamp to epoch seconds.
pub fn parse_timestamp(s: &str) -> Option<i64> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if let Ok(epoch) = s.parse::<i64>() {
        return Some(epoch);
    }
    if let Ok(dt) = chrono::DateTime::parse_from_rfc3339(s) {
        return Some(dt.timestamp());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"] {
        if let Ok(naive) = chrono::NaiveDateTime::parse_from_str(s, fmt) {
            return Some(naive.and_utc().timestamp());
        }
    }
    None
}

fn event_from_parts(
    user_id: String,
    timestamp: i64,
    platform: &str,
    activity: String,
    content: Option<String>,
) -> Option<Event> {
    if user_id.is_empty() || activity.is_empty() || platform.is_empty() {
        return None;
    }
    let platform: Platform = platform.parse().unwrap();
    let content = content.filter(|c| !c.is_empty());
    Some(Event {
        user_id,
        timestamp,
        platform,
        activity,
        content,
    })
}

/// Reads a corpus file into user-sequences.
///
/// Rejected rows (bad timestamp, missing fields) are counted in the report;
/// only an unreadable file aborts. Sequences come back sorted by user id,
/// events stably sorted by timestamp.
pub fn read_events(path: &Path, format: Format) -> Result<(Vec<UserSequence>, IngestReport)> {
    let file = File::open(path)?;
    read_events_from(file, format)
}

/// Same as [`read_events`] over any reader.
pub fn read_events_from<R: Read>(
    reader: R,
    format: Format,
) -> Result<(Vec<UserSequence>, IngestReport)> {
    let mut rows_read = 0u64;
    let mut rejected = 0u64;
    let mut by_user: HashMap<String, Vec<Event>> = HashMap::new();

    let mut accept = |event: Option<Event>| match event {
        Some(e) => by_user.entry(e.user_id.clone()).or_default().push(e),
        None => rejected += 1,
    };

    match format {
        Format::Csv => {
            let mut rdr = csv::ReaderBuilder::new()
                .has_headers(true)
                .flexible(false)
                .from_reader(reader);
            for row in rdr.deserialize::<RawCsvRow>() {
                rows_read += 1;
                match row {
                    Ok(raw) => match parse_timestamp(&raw.timestamp) {
                        Some(ts) => accept(event_from_parts(
                            raw.user_id,
                            ts,
                            &raw.platform,
                            raw.activity,
                            raw.content,
                        )),
                        None => accept(None),
                    },
                    Err(_) => accept(None),
                }
            }
        }
        Format::Jsonl => {
            for line in BufReader::new(reader).lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                rows_read += 1;
                match serde_json::from_str::<RawJsonRow>(&line) {
                    Ok(raw) => {
                        let ts = match raw.timestamp {
                            TimestampField::Epoch(t) => Some(t),
                            TimestampField::Text(s) => parse_timestamp(&s),
                        };
                        match ts {
                            Some(ts) => accept(event_from_parts(
                                raw.user_id,
                                ts,
                                &raw.platform,
                                raw.activity,
                                raw.content,
                            )),
                            None => accept(None),
                        }
                    }
                    Err(_) => accept(None),
                }
            }
        }
    }

    let mut users: Vec<String> = by_user.keys().cloned().collect();
    users.sort();
    let sequences: Vec<UserSequence> = users
        .into_iter()
        .map(|u| {
            let events = by_user.remove(&u).unwrap();
            UserSequence::new(u, events).expect("events grouped by user")
        })
        .collect();

    let mut report = summarize(&sequences);
    report.rows_read = rows_read;
    report.rows_rejected = rejected;
    debug_assert_eq!(report.rows_read, report.rows_accepted + report.rows_rejected);
    Ok((sequences, report))
}

/// Descriptive statistics over a corpus: length percentiles, per-platform
/// counts, platform-multiplicity histogram.
pub fn summarize(sequences: &[UserSequence]) -> IngestReport {
    let mut report = IngestReport::empty();
    if sequences.is_empty() {
        return report;
    }
    let mut lengths: Vec<f64> = Vec::with_capacity(sequences.len());
    for seq in sequences {
        let mut platforms: Vec<&Platform> = Vec::new();
        for e in &seq.events {
            *report.per_platform.entry(e.platform.name().to_string()).or_insert(0) += 1;
            report.min_timestamp = Some(match report.min_timestamp {
                Some(m) => m.min(e.timestamp),
                None => e.timestamp,
            });
            report.max_timestamp = Some(match report.max_timestamp {
                Some(m) => m.max(e.timestamp),
                None => e.timestamp,
            });
            if !platforms.contains(&&e.platform) {
                platforms.push(&e.platform);
            }
        }
        if !seq.is_empty() {
            *report
                .platform_multiplicity
                .entry(platforms.len())
                .or_insert(0) += 1;
        }
        lengths.push(seq.len() as f64);
    }
    report.users = sequences.len();
    report.rows_read = lengths.iter().sum::<f64>() as u64;
    report.rows_accepted = report.rows_read;
    lengths.sort_by(|a, b| a.partial_cmp(b).unwrap());
    report.length_p25 = percentile(&lengths, 25.0);
    report.length_median = percentile(&lengths, 50.0);
    report.length_p75 = percentile(&lengths, 75.0);
    report.length_p90 = percentile(&lengths, 90.0);
    report.length_mean = mean(&lengths);
    report.length_max = lengths.last().copied().unwrap_or(0.0) as u64;
    report
}

/// Writes a corpus in the same CSV schema `read_events` accepts.
pub fn write_events_csv<W: Write>(w: W, sequences: &[UserSequence]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["user_id", "timestamp", "platform", "activity", "content"])
        .map_err(io_of_csv)?;
    for seq in sequences {
        for e in &seq.events {
            wtr.write_record([
                e.user_id.as_str(),
                &format_timestamp(e.timestamp),
                e.platform.name(),
                e.activity.as_str(),
                e.content.as_deref().unwrap_or(""),
            ])
            .map_err(io_of_csv)?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Writes a corpus as JSONL, one event object per line.
pub fn write_events_jsonl<W: Write>(mut w: W, sequences: &[UserSequence]) -> Result<()> {
    for seq in sequences {
        for e in &seq.events {
            let line = serde_json::to_string(e).expect("event serializes");
            writeln!(w, "{line}")?;
        }
    }
    Ok(())
}

pub(crate) fn io_of_csv(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::invalid(format!("csv: {other:?}")),
    }
}
