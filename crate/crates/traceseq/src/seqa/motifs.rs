//! Significant n-gram motifs over sessionized symbol sequences.
//!
//! Observed counts of contiguous within-user n-grams are tested against the
//! independence null (product of symbol marginals) with a one-sided exact
//! binomial, Bonferroni-corrected per order over the distinct n-grams
//! actually observed.

use std::collections::HashMap;

use statrs::distribution::{Binomial, DiscreteCDF};

use crate::error::{Error, Result};
use crate::model::Lexicon;

/// One tested n-gram.
#[derive(Debug, Clone, PartialEq)]
pub struct MotifRow {
    pub ngram: Vec<String>,
    pub order: usize,
    pub observed: u64,
    pub expected: f64,
    pub p_value: f64,
    pub p_adjusted: f64,
    pub significant: bool,
}

/// Motif rows sorted by observed count descending.
#[derive(Debug, Clone, PartialEq)]
pub struct MotifTable {
    pub alpha: f64,
    pub rows: Vec<MotifRow>,
}

impl MotifTable {
    /// Rows of one order, in table order.
    pub fn of_order(&self, order: usize) -> impl Iterator<Item = &MotifRow> {
        self.rows.iter().filter(move |r| r.order == order)
    }

    pub fn significant(&self) -> impl Iterator<Item = &MotifRow> {
        self.rows.iter().filter(|r| r.significant)
    }

    /// CSV with one row per tested n-gram; the n-gram joins its symbols
    /// with `>`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record([
            "ngram",
            "order",
            "observed",
            "expected",
            "p_value",
            "p_adjusted",
            "significant",
        ])
        .map_err(crate::ingest::io_of_csv)?;
        for row in &self.rows {
            wtr.write_record([
                row.ngram.join(">"),
                row.order.to_string(),
                row.observed.to_string(),
                row.expected.to_string(),
                format!("{:e}", row.p_value),
                format!("{:e}", row.p_adjusted),
                row.significant.to_string(),
            ])
            .map_err(crate::ingest::io_of_csv)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Mines motifs of the given orders from sessionized symbol sequences.
///
/// Input should already have identical consecutive activities collapsed, so
/// self-transitions only appear across window splits.
pub fn mine_motifs(
    seqs: &[Vec<u32>],
    lexicon: &Lexicon,
    orders: &[usize],
    alpha: f64,
) -> Result<MotifTable> {
    if seqs.is_empty() {
        return Err(Error::EmptyInput);
    }
    if orders.is_empty() || orders.iter().any(|&n| n < 2) {
        return Err(Error::config("motif orders must all be at least 2"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::config("alpha must lie in (0, 1)"));
    }

    // Symbol marginals over the whole corpus.
    let total_symbols: u64 = seqs.iter().map(|s| s.len() as u64).sum();
    if total_symbols == 0 {
        return Err(Error::EmptyInput);
    }
    let mut symbol_counts: HashMap<u32, u64> = HashMap::new();
    for seq in seqs {
        for &s in seq {
            *symbol_counts.entry(s).or_insert(0) += 1;
        }
    }
    let marginal =
        |s: u32| -> f64 { symbol_counts[&s] as f64 / total_symbols as f64 };

    let mut rows: Vec<MotifRow> = Vec::new();
    for &order in orders {
        let mut counts: HashMap<&[u32], u64> = HashMap::new();
        let mut slots: u64 = 0;
        for seq in seqs {
            if seq.len() >= order {
                slots += (seq.len() - order + 1) as u64;
                for window in seq.windows(order) {
                    *counts.entry(window).or_insert(0) += 1;
                }
            }
        }
        if slots == 0 {
            continue;
        }
        let tests = counts.len() as f64;
        for (window, observed) in counts {
            let p0: f64 = window.iter().map(|&s| marginal(s)).product();
            let expected = slots as f64 * p0;
            let p_value = binomial_upper_tail(slots, p0, observed);
            let p_adjusted = (p_value * tests).min(1.0);
            rows.push(MotifRow {
                ngram: window
                    .iter()
                    .map(|&s| lexicon.decode(s).unwrap_or("?").to_string())
                    .collect(),
                order,
                observed,
                expected,
                p_value,
                p_adjusted,
                significant: p_adjusted < alpha,
            });
        }
    }

    rows.sort_by(|a, b| {
        b.observed
            .cmp(&a.observed)
            .then(a.order.cmp(&b.order))
            .then(a.ngram.cmp(&b.ngram))
    });
    Ok(MotifTable { alpha, rows })
}

/// One-sided exact binomial tail `P(X >= observed)` for `X ~ Bin(n, p)`.
fn binomial_upper_tail(n: u64, p: f64, observed: u64) -> f64 {
    if observed == 0 {
        return 1.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let dist = Binomial::new(p, n).expect("p in [0,1]");
    // sf(k) = P(X > k), so P(X >= observed) = sf(observed - 1).
    dist.sf(observed - 1).clamp(0.0, 1.0)
}
