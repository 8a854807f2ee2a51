//! Sequence analysis: optimal-matching distances, hierarchical clustering
//! and significant n-gram motifs.

mod cluster;
mod motifs;

pub use cluster::{cluster_users, linkage_average, Dendrogram, Merge};
pub use motifs::{mine_motifs, MotifRow, MotifTable};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Length normalization applied to an optimal-matching distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalization {
    None,
    /// Divide by `indel * max(len a, len b)`.
    ByLongerLength,
}

/// Edit costs for optimal matching.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostScheme {
    pub substitution: f64,
    pub indel: f64,
    pub normalization: Normalization,
}

impl Default for CostScheme {
    fn default() -> Self {
        CostScheme {
            substitution: 2.0,
            indel: 1.0,
            normalization: Normalization::ByLongerLength,
        }
    }
}

impl CostScheme {
    /// Constant-cost scheme without normalization; yields a true metric.
    pub fn unnormalized() -> Self {
        CostScheme {
            normalization: Normalization::None,
            ..CostScheme::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.substitution > 0.0) || !(self.indel > 0.0) {
            return Err(Error::config("edit costs must be positive"));
        }
        if self.substitution > 2.0 * self.indel {
            return Err(Error::config(
                "substitution cost must not exceed twice the indel cost",
            ));
        }
        Ok(())
    }
}

/// Optimal-matching distance between two symbol sequences.
///
/// Minimal total cost of inserts, deletes and substitutions turning `a`
/// into `b`, by dynamic programming. Symmetric; zero iff the sequences are
/// equal (before normalization).
pub fn om_distance(a: &[u32], b: &[u32], scheme: &CostScheme) -> Result<f64> {
    scheme.validate()?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput);
    }
    let raw = om_raw(a, b, scheme);
    Ok(match scheme.normalization {
        Normalization::None => raw,
        Normalization::ByLongerLength => raw / (scheme.indel * a.len().max(b.len()) as f64),
    })
}

fn om_raw(a: &[u32], b: &[u32], scheme: &CostScheme) -> f64 {
    // Two-row DP over the edit lattice.
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let n = short.len();
    let mut prev: Vec<f64> = (0..=n).map(|j| j as f64 * scheme.indel).collect();
    let mut cur = vec![0.0f64; n + 1];
    for (i, &sym_l) in long.iter().enumerate() {
        cur[0] = (i + 1) as f64 * scheme.indel;
        for (j, &sym_s) in short.iter().enumerate() {
            let sub = if sym_l == sym_s { 0.0 } else { scheme.substitution };
            let best = (prev[j] + sub)
                .min(prev[j + 1] + scheme.indel)
                .min(cur[j] + scheme.indel);
            cur[j + 1] = best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[n]
}

/// Full pairwise distance matrix; cells are independent, so the parallel
/// path is position-deterministic.
pub fn distance_matrix(seqs: &[Vec<u32>], scheme: &CostScheme) -> Result<Vec<Vec<f64>>> {
    scheme.validate()?;
    if seqs.is_empty() {
        return Err(Error::EmptyInput);
    }
    if seqs.iter().any(|s| s.is_empty()) {
        return Err(Error::EmptyInput);
    }
    let n = seqs.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    #[cfg(feature = "parallel")]
    let dists: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| om_distance(&seqs[i], &seqs[j], scheme).expect("validated"))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let dists: Vec<f64> = pairs
        .iter()
        .map(|&(i, j)| om_distance(&seqs[i], &seqs[j], scheme).expect("validated"))
        .collect();
    Ok(square_from_pairs(n, &pairs, &dists))
}

/// Sequential variant of [`distance_matrix`] for benchmarking.
pub fn distance_matrix_seq(seqs: &[Vec<u32>], scheme: &CostScheme) -> Result<Vec<Vec<f64>>> {
    scheme.validate()?;
    if seqs.is_empty() || seqs.iter().any(|s| s.is_empty()) {
        return Err(Error::EmptyInput);
    }
    let n = seqs.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let dists: Vec<f64> = pairs
        .iter()
        .map(|&(i, j)| om_distance(&seqs[i], &seqs[j], scheme).expect("validated"))
        .collect();
    Ok(square_from_pairs(n, &pairs, &dists))
}

fn square_from_pairs(n: usize, pairs: &[(usize, usize)], dists: &[f64]) -> Vec<Vec<f64>> {
    let mut matrix = vec![vec![0.0; n]; n];
    for (&(i, j), &d) in pairs.iter().zip(dists) {
        matrix[i][j] = d;
        matrix[j][i] = d;
    }
    matrix
}

/// Writes a distance matrix as square CSV with ids as header and row labels.
pub fn write_distance_matrix_csv<W: std::io::Write>(
    w: W,
    ids: &[String],
    matrix: &[Vec<f64>],
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["user_id".to_string()];
    header.extend(ids.iter().cloned());
    wtr.write_record(&header).map_err(crate::ingest::io_of_csv)?;
    for (id, row) in ids.iter().zip(matrix) {
        let mut record = vec![id.clone()];
        record.extend(row.iter().map(|d| d.to_string()));
        wtr.write_record(&record).map_err(crate::ingest::io_of_csv)?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    /// Exhaustive edit-script search: plain recursion over the edit lattice
    /// with no memoization, independent of the DP.
    fn brute_force(a: &[u32], b: &[u32], scheme: &CostScheme) -> f64 {
        if a.is_empty() {
            return b.len() as f64 * scheme.indel;
        }
        if b.is_empty() {
            return a.len() as f64 * scheme.indel;
        }
        let sub = if a[0] == b[0] { 0.0 } else { scheme.substitution };
        let via_sub = brute_force(&a[1..], &b[1..], scheme) + sub;
        let via_del = brute_force(&a[1..], b, scheme) + scheme.indel;
        let via_ins = brute_force(a, &b[1..], scheme) + scheme.indel;
        via_sub.min(via_del).min(via_ins)
    }

    #[test]
    fn identical_sequences_have_zero_distance() {
        let s = vec![1, 2, 3, 2];
        let d = om_distance(&s, &s, &CostScheme::default()).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn single_substitution_costs_two() {
        // "AB" vs "AC" with sub 2, indel 1, no normalization.
        let d = om_distance(&[0, 1], &[0, 2], &CostScheme::unnormalized()).unwrap();
        assert_eq!(d, 2.0);
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(
            om_distance(&[], &[1], &CostScheme::default()),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn dp_matches_exhaustive_search_on_short_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let scheme = CostScheme::unnormalized();
        for _ in 0..100 {
            let la = rng.gen_range(1..=8);
            let lb = rng.gen_range(1..=8);
            let a: Vec<u32> = (0..la).map(|_| rng.gen_range(0..4)).collect();
            let b: Vec<u32> = (0..lb).map(|_| rng.gen_range(0..4)).collect();
            let dp = om_distance(&a, &b, &scheme).unwrap();
            let brute = brute_force(&a, &b, &scheme);
            assert_eq!(dp, brute, "a={a:?} b={b:?}");
        }
    }

    #[test]
    fn unnormalized_distance_is_a_metric_on_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let scheme = CostScheme::unnormalized();
        let gen = |rng: &mut ChaCha8Rng| -> Vec<u32> {
            let l = rng.gen_range(1..=10);
            (0..l).map(|_| rng.gen_range(0..3)).collect()
        };
        for _ in 0..200 {
            let a = gen(&mut rng);
            let b = gen(&mut rng);
            let c = gen(&mut rng);
            let dab = om_distance(&a, &b, &scheme).unwrap();
            let dba = om_distance(&b, &a, &scheme).unwrap();
            let dac = om_distance(&a, &c, &scheme).unwrap();
            let dcb = om_distance(&c, &b, &scheme).unwrap();
            assert!(dab >= 0.0);
            assert_eq!(dab, dba);
            assert_eq!(dab == 0.0, a == b);
            assert!(dab <= dac + dcb + 1e-12, "triangle violated");
        }
    }

    #[test]
    fn normalized_distance_is_symmetric_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let scheme = CostScheme::default();
        for _ in 0..100 {
            let la = rng.gen_range(1..=12);
            let lb = rng.gen_range(1..=12);
            let a: Vec<u32> = (0..la).map(|_| rng.gen_range(0..3)).collect();
            let b: Vec<u32> = (0..lb).map(|_| rng.gen_range(0..3)).collect();
            let dab = om_distance(&a, &b, &scheme).unwrap();
            let dba = om_distance(&b, &a, &scheme).unwrap();
            assert_eq!(dab, dba);
            assert!((0.0..=2.0).contains(&dab));
        }
    }

    #[test]
    fn matrix_parallel_and_sequential_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let seqs: Vec<Vec<u32>> = (0..12)
            .map(|_| {
                let l = rng.gen_range(3..20);
                (0..l).map(|_| rng.gen_range(0..5)).collect()
            })
            .collect();
        let scheme = CostScheme::default();
        let par = distance_matrix(&seqs, &scheme).unwrap();
        let seq = distance_matrix_seq(&seqs, &scheme).unwrap();
        assert_eq!(par, seq);
        for i in 0..seqs.len() {
            assert_eq!(par[i][i], 0.0);
        }
    }

    #[test]
    fn invalid_scheme_rejected() {
        let bad = CostScheme {
            substitution: 5.0,
            indel: 1.0,
            normalization: Normalization::None,
        };
        assert!(om_distance(&[1], &[2], &bad).is_err());
    }
}
