//! Process discovery over daily event logs: directly-follows graphs with
//! artificial START/END/PLATFORM_SWITCH nodes, platform transition-time
//! matrices and top-k daily-path variants.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{day_label, utc_day, Platform, Session};

pub const START: &str = "START";
pub const END: &str = "END";
pub const PLATFORM_SWITCH: &str = "platform_switch";

/// One case: the sessions of one user on one UTC day.
#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    pub user_id: String,
    pub day: i64,
    pub sessions: Vec<Session>,
}

impl Case {
    pub fn label(&self) -> String {
        format!("{}@{}", self.user_id, day_label(self.day))
    }
}

/// Splits per-user session lists into user-day cases, keyed by session
/// start.
pub fn daily_cases(sessions_per_user: &[Vec<Session>]) -> Vec<Case> {
    let mut cases = Vec::new();
    for sessions in sessions_per_user {
        for session in sessions {
            let day = utc_day(session.start);
            match cases.last_mut() {
                Some(Case {
                    user_id,
                    day: d,
                    sessions: group,
                }) if user_id == &session.user_id && *d == day => group.push(session.clone()),
                _ => cases.push(Case {
                    user_id: session.user_id.clone(),
                    day,
                    sessions: vec![session.clone()],
                }),
            }
        }
    }
    cases
}

/// Whole-period cases: one case per user.
pub fn whole_period_cases(sessions_per_user: &[Vec<Session>]) -> Vec<Case> {
    sessions_per_user
        .iter()
        .filter(|s| !s.is_empty())
        .map(|sessions| Case {
            user_id: sessions[0].user_id.clone(),
            day: utc_day(sessions[0].start),
            sessions: sessions.clone(),
        })
        .collect()
}

/// Directed edge statistics: traversal count and accumulated transition
/// seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeStats {
    pub frequency: u64,
    total_secs: f64,
    timed: u64,
}

impl EdgeStats {
    /// Mean transition seconds; absent for untimed edges (START/END and
    /// switch outlets).
    pub fn mean_secs(&self) -> Option<f64> {
        (self.timed > 0).then(|| self.total_secs / self.timed as f64)
    }
}

/// Directly-follows graph over activity sessions.
#[derive(Debug, Clone, PartialEq)]
pub struct Dfg {
    /// Activity frequencies (artificial nodes included).
    pub nodes: BTreeMap<String, u64>,
    pub edges: BTreeMap<(String, String), EdgeStats>,
    pub cases: u64,
}

impl Dfg {
    pub fn start_out_frequency(&self) -> u64 {
        self.edges
            .iter()
            .filter(|((src, _), _)| src == START)
            .map(|(_, e)| e.frequency)
            .sum()
    }

    pub fn end_in_frequency(&self) -> u64 {
        self.edges
            .iter()
            .filter(|((_, dst), _)| dst == END)
            .map(|(_, e)| e.frequency)
            .sum()
    }

    /// GraphViz DOT: nodes labelled `activity (freq)`, edges
    /// `freq / mean-time`.
    pub fn to_dot(&self) -> String {
        let ids: BTreeMap<&str, usize> = self
            .nodes
            .keys()
            .enumerate()
            .map(|(i, name)| (name.as_str(), i))
            .collect();
        let mut out = String::from("digraph dfg {\n  rankdir=TB;\n");
        for (name, freq) in &self.nodes {
            let shape = if name == START || name == END {
                "circle"
            } else if name == PLATFORM_SWITCH {
                "diamond"
            } else {
                "box"
            };
            out.push_str(&format!(
                "  n{} [label=\"{} ({})\", shape={}];\n",
                ids[name.as_str()],
                name,
                freq,
                shape
            ));
        }
        for ((src, dst), stats) in &self.edges {
            let label = match stats.mean_secs() {
                Some(mean) => format!("{} / {:.0}s", stats.frequency, mean),
                None => format!("{}", stats.frequency),
            };
            out.push_str(&format!(
                "  n{} -> n{} [label=\"{}\"];\n",
                ids[src.as_str()],
                ids[dst.as_str()],
                label
            ));
        }
        out.push_str("}\n");
        out
    }
}

/// Builds the directly-follows graph from cases.
///
/// Every case contributes `START -> first`, each consecutive session pair
/// and `last -> END`. A `platform_switch` node is interposed where
/// consecutive sessions change platform; the switch node carries no dwell
/// time, the full gap stays on the outgoing edge of the source activity.
pub fn build_dfg(cases: &[Case]) -> Result<Dfg> {
    if cases.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut nodes: BTreeMap<String, u64> = BTreeMap::new();
    let mut edges: BTreeMap<(String, String), EdgeStats> = BTreeMap::new();
    fn bump(
        edges: &mut BTreeMap<(String, String), EdgeStats>,
        src: &str,
        dst: &str,
        gap: Option<f64>,
    ) {
        let entry = edges
            .entry((src.to_string(), dst.to_string()))
            .or_insert(EdgeStats {
                frequency: 0,
                total_secs: 0.0,
                timed: 0,
            });
        entry.frequency += 1;
        if let Some(gap) = gap {
            entry.total_secs += gap;
            entry.timed += 1;
        }
    }
    for case in cases {
        if case.sessions.is_empty() {
            continue;
        }
        *nodes.entry(START.to_string()).or_insert(0) += 1;
        *nodes.entry(END.to_string()).or_insert(0) += 1;
        bump(&mut edges, START, &case.sessions[0].symbol, None);
        for session in &case.sessions {
            *nodes.entry(session.symbol.clone()).or_insert(0) += 1;
        }
        for pair in case.sessions.windows(2) {
            let gap = (pair[1].start - pair[0].end).max(0) as f64;
            if pair[0].platform != pair[1].platform {
                *nodes.entry(PLATFORM_SWITCH.to_string()).or_insert(0) += 1;
                bump(&mut edges, &pair[0].symbol, PLATFORM_SWITCH, Some(gap));
                bump(&mut edges, PLATFORM_SWITCH, &pair[1].symbol, None);
            } else {
                bump(&mut edges, &pair[0].symbol, &pair[1].symbol, Some(gap));
            }
        }
        bump(
            &mut edges,
            &case.sessions[case.sessions.len() - 1].symbol,
            END,
            None,
        );
    }
    Ok(Dfg {
        nodes,
        edges,
        cases: cases.len() as u64,
    })
}

/// Platform-to-platform mean transition seconds within cases.
#[derive(Debug, Clone, Serialize)]
pub struct TransitionMatrix {
    pub platforms: Vec<String>,
    /// `mean_secs[i][j]`: mean gap from a session on platform `i` to the
    /// next session on platform `j`; `None` where never observed.
    pub mean_secs: Vec<Vec<Option<f64>>>,
}

impl TransitionMatrix {
    pub fn get(&self, from: &Platform, to: &Platform) -> Option<f64> {
        let i = self.platforms.iter().position(|p| p == from.name())?;
        let j = self.platforms.iter().position(|p| p == to.name())?;
        self.mean_secs[i][j]
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec!["from".to_string()];
        header.extend(self.platforms.iter().cloned());
        wtr.write_record(&header).map_err(crate::ingest::io_of_csv)?;
        for (i, from) in self.platforms.iter().enumerate() {
            let mut row = vec![from.clone()];
            for j in 0..self.platforms.len() {
                row.push(match self.mean_secs[i][j] {
                    Some(mean) => mean.to_string(),
                    None => String::new(),
                });
            }
            wtr.write_record(&row).map_err(crate::ingest::io_of_csv)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Mean gap between consecutive sessions grouped by platform pair; empty
/// cells stay absent rather than zero.
pub fn transition_time_matrix(cases: &[Case]) -> Result<TransitionMatrix> {
    let mut totals: BTreeMap<(String, String), (f64, u64)> = BTreeMap::new();
    let mut platforms: Vec<String> = Vec::new();
    for case in cases {
        for session in &case.sessions {
            let name = session.platform.name().to_string();
            if !platforms.contains(&name) {
                platforms.push(name);
            }
        }
        for pair in case.sessions.windows(2) {
            let gap = (pair[1].start - pair[0].end).max(0) as f64;
            let key = (
                pair[0].platform.name().to_string(),
                pair[1].platform.name().to_string(),
            );
            let entry = totals.entry(key).or_insert((0.0, 0));
            entry.0 += gap;
            entry.1 += 1;
        }
    }
    if totals.is_empty() {
        return Err(Error::EmptyInput);
    }
    platforms.sort();
    let mean_secs = platforms
        .iter()
        .map(|from| {
            platforms
                .iter()
                .map(|to| {
                    totals
                        .get(&(from.clone(), to.clone()))
                        .map(|(total, n)| total / *n as f64)
                })
                .collect()
        })
        .collect();
    Ok(TransitionMatrix {
        platforms,
        mean_secs,
    })
}

/// Variant table: distinct activity paths with case counts, sorted by count
/// descending then path ascending.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariantTable {
    pub rows: Vec<(Vec<String>, u64)>,
    pub total_cases: u64,
}

impl VariantTable {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["path", "cases"])
            .map_err(crate::ingest::io_of_csv)?;
        for (path, count) in &self.rows {
            wtr.write_record([path.join(">"), count.to_string()])
                .map_err(crate::ingest::io_of_csv)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// The `k` most frequent end-to-end activity paths.
pub fn top_variants(cases: &[Case], k: usize) -> Result<VariantTable> {
    if k == 0 {
        return Err(Error::config("variant count must be positive"));
    }
    let mut counts: BTreeMap<Vec<String>, u64> = BTreeMap::new();
    for case in cases {
        let path: Vec<String> = case.sessions.iter().map(|s| s.symbol.clone()).collect();
        *counts.entry(path).or_insert(0) += 1;
    }
    let mut rows: Vec<(Vec<String>, u64)> = counts.into_iter().collect();
    rows.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    rows.truncate(k);
    Ok(VariantTable {
        rows,
        total_cases: cases.len() as u64,
    })
}

/// Keeps only cases whose activity path is in the variant table.
pub fn filter_to_variants(cases: &[Case], variants: &VariantTable) -> Vec<Case> {
    cases
        .iter()
        .filter(|case| {
            let path: Vec<String> = case.sessions.iter().map(|s| s.symbol.clone()).collect();
            variants.rows.iter().any(|(p, _)| p == &path)
        })
        .cloned()
        .collect()
}
