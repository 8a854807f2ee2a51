//! Agglomerative average-linkage clustering over a precomputed distance
//! matrix.
//!
//! Deterministic: clusters carry scipy-style ids (originals `0..n`, merges
//! `n, n+1, ...`) and distance ties resolve to the lexicographically lowest
//! id pair.

use crate::error::{Error, Result};

/// One agglomeration step.
#[derive(Debug, Clone, PartialEq)]
pub struct Merge {
    /// Lower cluster id merged.
    pub a: usize,
    /// Higher cluster id merged.
    pub b: usize,
    /// Average-linkage distance at the merge.
    pub distance: f64,
    /// Size of the new cluster.
    pub size: usize,
}

/// Stepwise dendrogram: `n - 1` merges over `n` observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    pub n: usize,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    /// Cluster labels after cutting at `k` clusters. Labels are dense
    /// `0..k`, ordered by each cluster's smallest member index.
    pub fn cut(&self, k: usize) -> Result<Vec<usize>> {
        if k == 0 || k > self.n {
            return Err(Error::invalid(format!(
                "cannot cut {} observations into {} clusters",
                self.n, k
            )));
        }
        // Union of the first n - k merges.
        let mut members: Vec<Option<Vec<usize>>> =
            (0..self.n).map(|i| Some(vec![i])).collect();
        for merge in self.merges.iter().take(self.n - k) {
            let left = members[merge.a].take().expect("active cluster");
            let right = members[merge.b].take().expect("active cluster");
            let mut joined = left;
            joined.extend(right);
            members.push(Some(joined));
        }
        let mut clusters: Vec<Vec<usize>> = members.into_iter().flatten().collect();
        clusters.sort_by_key(|c| *c.iter().min().expect("non-empty cluster"));
        let mut labels = vec![0usize; self.n];
        for (label, cluster) in clusters.iter().enumerate() {
            for &i in cluster {
                labels[i] = label;
            }
        }
        Ok(labels)
    }
}

fn validate_matrix(dist: &[Vec<f64>]) -> Result<usize> {
    let n = dist.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    for (i, row) in dist.iter().enumerate() {
        if row.len() != n {
            return Err(Error::invalid("distance matrix is not square"));
        }
        if row[i] != 0.0 {
            return Err(Error::invalid("distance matrix diagonal must be zero"));
        }
        for (j, &d) in row.iter().enumerate() {
            if d < 0.0 || !d.is_finite() {
                return Err(Error::invalid("distances must be finite and non-negative"));
            }
            if (d - dist[j][i]).abs() > 1e-9 {
                return Err(Error::invalid("distance matrix is not symmetric"));
            }
        }
    }
    Ok(n)
}

/// Builds the full average-linkage dendrogram (UPGMA).
///
/// Cluster-to-cluster distances follow the Lance-Williams update for
/// unweighted averages, which keeps them exact arithmetic means over all
/// cross pairs.
pub fn linkage_average(dist: &[Vec<f64>]) -> Result<Dendrogram> {
    let n = validate_matrix(dist)?;
    // Active clusters: (id, size); `d` holds distances between active
    // clusters indexed by their position in `active`.
    let mut active: Vec<(usize, usize)> = (0..n).map(|i| (i, 1)).collect();
    let mut d: Vec<Vec<f64>> = dist.to_vec();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    let mut next_id = n;

    while active.len() > 1 {
        // Lowest distance; ties -> lowest (id_a, id_b). Positions are in
        // ascending id order by construction.
        let mut best = (0usize, 1usize);
        let mut best_d = f64::INFINITY;
        for i in 0..active.len() {
            for j in (i + 1)..active.len() {
                if d[i][j] < best_d {
                    best_d = d[i][j];
                    best = (i, j);
                }
            }
        }
        let (pi, pj) = best;
        let (id_i, size_i) = active[pi];
        let (id_j, size_j) = active[pj];
        let new_size = size_i + size_j;
        merges.push(Merge {
            a: id_i.min(id_j),
            b: id_i.max(id_j),
            distance: best_d,
            size: new_size,
        });

        // Lance-Williams (UPGMA): d(k, i+j) = (|i| d(k,i) + |j| d(k,j)) / (|i|+|j|)
        let merged_row: Vec<f64> = (0..active.len())
            .filter(|&k| k != pi && k != pj)
            .map(|k| {
                (size_i as f64 * d[pi][k] + size_j as f64 * d[pj][k]) / new_size as f64
            })
            .collect();

        // Remove pj first (higher index), then pi.
        for row in d.iter_mut() {
            row.remove(pj);
            row.remove(pi);
        }
        d.remove(pj);
        d.remove(pi);
        active.remove(pj);
        active.remove(pi);

        let m = active.len();
        for (k, row) in d.iter_mut().enumerate() {
            row.push(merged_row[k]);
        }
        let mut new_row = merged_row;
        new_row.push(0.0);
        debug_assert_eq!(new_row.len(), m + 1);
        d.push(new_row);
        active.push((next_id, new_size));
        next_id += 1;
    }

    Ok(Dendrogram { n, merges })
}

/// Cuts the average-linkage dendrogram at `k` clusters.
pub fn cluster_users(dist: &[Vec<f64>], k: usize) -> Result<Vec<usize>> {
    let dendrogram = linkage_average(dist)?;
    dendrogram.cut(k)
}
