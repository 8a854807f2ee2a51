//! Shared data model: events, user-sequences, sessions, lexicons.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum number of content characters carried into a synthetic word.
pub const MAX_CONTENT_CHARS: usize = 120;

/// Social media platform an event originated from.
///
/// Unknown platform names map to `Other` instead of erroring, so a corpus
/// survives platforms changing what they export.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Platform {
    Facebook,
    Instagram,
    TikTok,
    YouTube,
    Other(String),
}

impl Platform {
    pub const KNOWN: [Platform; 4] = [
        Platform::Facebook,
        Platform::Instagram,
        Platform::TikTok,
        Platform::YouTube,
    ];

    pub fn name(&self) -> &str {
        match self {
            Platform::Facebook => "Facebook",
            Platform::Instagram => "Instagram",
            Platform::TikTok => "TikTok",
            Platform::YouTube => "YouTube",
            Platform::Other(name) => name,
        }
    }
}

impl fmt::Display for Platform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Platform {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "Facebook" => Platform::Facebook,
            "Instagram" => Platform::Instagram,
            "TikTok" => Platform::TikTok,
            "YouTube" => Platform::YouTube,
            other => Platform::Other(other.to_string()),
        })
    }
}

impl Serialize for Platform {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Platform {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(s.parse().unwrap())
    }
}

/// One timestamped digital trace.
///
/// Timestamps are UTC epoch seconds; sub-second precision is not carried.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub user_id: String,
    /// UTC instant, epoch seconds.
    pub timestamp: i64,
    pub platform: Platform,
    pub activity: String,
    pub content: Option<String>,
}

impl Event {
    pub fn new(
        user_id: impl Into<String>,
        timestamp: i64,
        platform: Platform,
        activity: impl Into<String>,
    ) -> Self {
        Event {
            user_id: user_id.into(),
            timestamp,
            platform,
            activity: activity.into(),
            content: None,
        }
    }

    pub fn with_content(mut self, content: impl Into<String>) -> Self {
        self.content = Some(content.into());
        self
    }
}

/// Chronologically ordered events of one user; the unit of analysis.
///
/// Events are sorted non-decreasing by timestamp; ties keep input order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserSequence {
    pub user_id: String,
    pub events: Vec<Event>,
}

impl UserSequence {
    /// Builds a sequence from events of a single user, sorting stably by
    /// timestamp.
    pub fn new(user_id: impl Into<String>, mut events: Vec<Event>) -> Result<Self> {
        let user_id = user_id.into();
        if let Some(e) = events.iter().find(|e| e.user_id != user_id) {
            return Err(Error::invalid(format!(
                "event user_id {:?} does not match sequence user {:?}",
                e.user_id, user_id
            )));
        }
        events.sort_by_key(|e| e.timestamp);
        Ok(UserSequence { user_id, events })
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// A run of identical consecutive activities collapsed under a time window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub user_id: String,
    /// Lexicon descriptor the run was merged on (`Instagram_likes` at
    /// activity level, `Instagram` at platform level).
    pub symbol: String,
    pub platform: Platform,
    /// Timestamp of the first merged event.
    pub start: i64,
    /// Timestamp of the last merged event; equals `start` when `count == 1`.
    pub end: i64,
    /// Number of collapsed events, at least 1.
    pub count: u32,
}

/// Granularity of the event lexicon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LexiconMode {
    /// Platform name only (`Instagram`).
    Platform,
    /// Platform and activity type (`Instagram_likes`).
    PlatformActivity,
    /// Platform, activity and content, concatenated verbatim with content
    /// truncated to [`MAX_CONTENT_CHARS`] characters.
    SyntheticWord,
}

impl LexiconMode {
    /// Descriptor string of an event at this granularity.
    pub fn descriptor(&self, event: &Event) -> String {
        match self {
            LexiconMode::Platform => event.platform.name().to_string(),
            LexiconMode::PlatformActivity => {
                format!("{}_{}", event.platform.name(), event.activity)
            }
            LexiconMode::SyntheticWord => match &event.content {
                Some(content) => {
                    let truncated: String = content.chars().take(MAX_CONTENT_CHARS).collect();
                    format!("{}_{}_{}", event.platform.name(), event.activity, truncated)
                }
                None => format!("{}_{}", event.platform.name(), event.activity),
            },
        }
    }
}

/// Bijective mapping between event descriptors and dense integer symbols.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lexicon {
    pub mode: LexiconMode,
    forward: HashMap<String, u32>,
    reverse: Vec<String>,
}

impl Lexicon {
    pub fn new(mode: LexiconMode) -> Self {
        Lexicon {
            mode,
            forward: HashMap::new(),
            reverse: Vec::new(),
        }
    }

    /// Symbol for a descriptor, assigning the next dense integer on first
    /// sight.
    pub fn intern(&mut self, descriptor: &str) -> u32 {
        if let Some(&sym) = self.forward.get(descriptor) {
            return sym;
        }
        let sym = self.reverse.len() as u32;
        self.forward.insert(descriptor.to_string(), sym);
        self.reverse.push(descriptor.to_string());
        sym
    }

    pub fn symbol(&self, descriptor: &str) -> Option<u32> {
        self.forward.get(descriptor).copied()
    }

    pub fn decode(&self, symbol: u32) -> Option<&str> {
        self.reverse.get(symbol as usize).map(String::as_str)
    }

    /// Number of distinct symbols `M`; symbols are `0..M`.
    pub fn len(&self) -> usize {
        self.reverse.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reverse.is_empty()
    }

    pub fn descriptors(&self) -> &[String] {
        &self.reverse
    }

    /// Encodes a slice of descriptor strings, interning unseen ones.
    pub fn encode_descriptors(&mut self, descriptors: &[String]) -> Vec<u32> {
        descriptors.iter().map(|d| self.intern(d)).collect()
    }
}

/// Encodes one sequence into symbols under a fresh lexicon.
pub fn encode(seq: &UserSequence, mode: LexiconMode) -> Result<(Vec<u32>, Lexicon)> {
    if seq.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut lexicon = Lexicon::new(mode);
    let symbols = seq
        .events
        .iter()
        .map(|e| lexicon.intern(&mode.descriptor(e)))
        .collect();
    Ok((symbols, lexicon))
}

/// Encodes a corpus under one shared lexicon (first-seen dense numbering
/// across users in order).
pub fn encode_corpus(
    seqs: &[UserSequence],
    mode: LexiconMode,
) -> Result<(Vec<Vec<u32>>, Lexicon)> {
    if seqs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut lexicon = Lexicon::new(mode);
    let encoded = seqs
        .iter()
        .map(|seq| {
            seq.events
                .iter()
                .map(|e| lexicon.intern(&mode.descriptor(e)))
                .collect()
        })
        .collect();
    Ok((encoded, lexicon))
}

/// Decodes a symbol sequence back to descriptor strings.
pub fn decode(symbols: &[u32], lexicon: &Lexicon) -> Result<Vec<String>> {
    symbols
        .iter()
        .map(|&s| {
            lexicon
                .decode(s)
                .map(String::from)
                .ok_or_else(|| Error::invalid(format!("symbol {s} not in lexicon")))
        })
        .collect()
}

/// Analytical time window over a corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeWindow {
    /// The whole observation period as one unit.
    WholePeriod,
    /// Partition into UTC days (cut at UTC midnight).
    Daily,
}

/// UTC day index of an epoch-second timestamp (days since 1970-01-01).
pub fn utc_day(timestamp: i64) -> i64 {
    timestamp.div_euclid(86_400)
}

/// `YYYY-MM-DD` label of a UTC day index.
pub fn day_label(day: i64) -> String {
    let ts = day * 86_400;
    match chrono::DateTime::from_timestamp(ts, 0) {
        Some(dt) => dt.format("%Y-%m-%d").to_string(),
        None => format!("day{day}"),
    }
}

/// Formats an epoch-second timestamp as ISO-8601 UTC.
pub fn format_timestamp(ts: i64) -> String {
    match chrono::DateTime::from_timestamp(ts, 0) {
        Some(dt) => dt.format("%Y-%m-%dT%H:%M:%SZ").to_string(),
        None => ts.to_string(),
    }
}
