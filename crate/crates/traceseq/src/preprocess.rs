//! Sessionization, length filtering and daily windowing.
//!
//! The collapse window constrains the gap between *consecutive* events, not
//! the total session span: a run of identical activities each within
//! `window` of the previous event merges into one session even when the
//! whole run spans longer than the window.

use crate::error::{Error, Result};
use crate::model::{utc_day, LexiconMode, Session, UserSequence};
use crate::stats::percentile;

fn collapse_by(
    seq: &UserSequence,
    window_minutes: u32,
    mode: LexiconMode,
) -> Result<Vec<Session>> {
    if window_minutes == 0 {
        return Err(Error::config("session window must be positive"));
    }
    let window_secs = i64::from(window_minutes) * 60;
    let mut sessions: Vec<Session> = Vec::new();
    for event in &seq.events {
        let symbol = mode.descriptor(event);
        match sessions.last_mut() {
            Some(open)
                if open.symbol == symbol && event.timestamp - open.end <= window_secs =>
            {
                open.end = event.timestamp;
                open.count += 1;
            }
            _ => sessions.push(Session {
                user_id: seq.user_id.clone(),
                symbol,
                platform: event.platform.clone(),
                start: event.timestamp,
                end: event.timestamp,
                count: 1,
            }),
        }
    }
    Ok(sessions)
}

/// Collapses identical consecutive activities (platform + activity type)
/// within the window into activity sessions.
pub fn collapse_sessions(seq: &UserSequence, window_minutes: u32) -> Result<Vec<Session>> {
    collapse_by(seq, window_minutes, LexiconMode::PlatformActivity)
}

/// Collapses consecutive activities on the same platform within the window
/// into platform sessions.
pub fn collapse_platform_sessions(
    seq: &UserSequence,
    window_minutes: u32,
) -> Result<Vec<Session>> {
    collapse_by(seq, window_minutes, LexiconMode::Platform)
}

/// Retains items whose length lies within `[P_lo, P_hi]` of the length
/// distribution, bounds inclusive.
pub fn percentile_filter_by<T>(
    items: Vec<T>,
    lo: f64,
    hi: f64,
    len_of: impl Fn(&T) -> usize,
) -> Result<Vec<T>> {
    if items.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(0.0..=100.0).contains(&lo) || !(0.0..=100.0).contains(&hi) || lo >= hi {
        return Err(Error::config("percentile bounds must satisfy 0 <= lo < hi <= 100"));
    }
    let mut lengths: Vec<f64> = items.iter().map(|s| len_of(s) as f64).collect();
    lengths.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let p_lo = percentile(&lengths, lo);
    let p_hi = percentile(&lengths, hi);
    Ok(items
        .into_iter()
        .filter(|s| {
            let l = len_of(s) as f64;
            l >= p_lo && l <= p_hi
        })
        .collect())
}

/// [`percentile_filter_by`] over user-sequences.
pub fn percentile_filter(
    sequences: Vec<UserSequence>,
    lo: f64,
    hi: f64,
) -> Result<Vec<UserSequence>> {
    percentile_filter_by(sequences, lo, hi, UserSequence::len)
}

/// Splits a sequence into per-UTC-day sub-sequences, in date order.
///
/// Concatenating the sub-sequences in order reproduces the input.
pub fn split_daily(seq: &UserSequence) -> Vec<(i64, UserSequence)> {
    let mut out: Vec<(i64, UserSequence)> = Vec::new();
    for event in &seq.events {
        let day = utc_day(event.timestamp);
        match out.last_mut() {
            Some((d, sub)) if *d == day => sub.events.push(event.clone()),
            _ => out.push((
                day,
                UserSequence {
                    user_id: seq.user_id.clone(),
                    events: vec![event.clone()],
                },
            )),
        }
    }
    out
}

/// Splits sessions into per-UTC-day groups keyed by the session start.
pub fn split_sessions_daily(sessions: &[Session]) -> Vec<(i64, Vec<Session>)> {
    let mut out: Vec<(i64, Vec<Session>)> = Vec::new();
    for s in sessions {
        let day = utc_day(s.start);
        match out.last_mut() {
            Some((d, group)) if *d == day => group.push(s.clone()),
            _ => out.push((day, vec![s.clone()])),
        }
    }
    out
}
