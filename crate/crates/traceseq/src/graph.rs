//! Transition networks of sequentially adjacent symbols: weighted directed
//! graphs, strength/closeness centralities and greedy modularity
//! communities.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Lexicon;

/// Weighted directed graph of adjacent symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionGraph {
    /// Node labels, indexed by symbol.
    pub labels: Vec<String>,
    /// Optional platform annotation per node (for coloring exports).
    pub annotations: Vec<Option<String>>,
    /// Directed edge weights keyed by (source, target) symbol.
    pub edges: BTreeMap<(u32, u32), u64>,
}

impl TransitionGraph {
    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.values().sum()
    }

    /// Symmetrized adjacency: `W[i][j] = w(i->j) + w(j->i)` for `i != j`,
    /// self-loop weight carried over once.
    pub fn symmetrized(&self) -> Vec<Vec<f64>> {
        let n = self.node_count();
        let mut w = vec![vec![0.0f64; n]; n];
        for (&(src, dst), &weight) in &self.edges {
            let (i, j) = (src as usize, dst as usize);
            if i == j {
                w[i][i] += weight as f64;
            } else {
                w[i][j] += weight as f64;
                w[j][i] += weight as f64;
            }
        }
        w
    }

    /// GraphViz DOT with weight-labelled edges.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph transitions {\n");
        for (i, label) in self.labels.iter().enumerate() {
            match &self.annotations[i] {
                Some(platform) => out.push_str(&format!(
                    "  n{i} [label=\"{label}\", group=\"{platform}\"];\n"
                )),
                None => out.push_str(&format!("  n{i} [label=\"{label}\"];\n")),
            }
        }
        for (&(src, dst), &w) in &self.edges {
            out.push_str(&format!("  n{src} -> n{dst} [label=\"{w}\", weight={w}];\n"));
        }
        out.push_str("}\n");
        out
    }

    /// Edge-list CSV `(src, dst, weight)`.
    pub fn write_edge_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["src", "dst", "weight"])
            .map_err(crate::ingest::io_of_csv)?;
        for (&(src, dst), &weight) in &self.edges {
            wtr.write_record([
                self.labels[src as usize].clone(),
                self.labels[dst as usize].clone(),
                weight.to_string(),
            ])
            .map_err(crate::ingest::io_of_csv)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Builds the transition graph: every consecutive within-user pair
/// `(s_t, s_{t+1})` increments the directed edge. No cross-user pairs.
pub fn build_graph(seqs: &[Vec<u32>], lexicon: &Lexicon) -> TransitionGraph {
    let mut edges: BTreeMap<(u32, u32), u64> = BTreeMap::new();
    for seq in seqs {
        for pair in seq.windows(2) {
            *edges.entry((pair[0], pair[1])).or_insert(0) += 1;
        }
    }
    TransitionGraph {
        labels: lexicon.descriptors().to_vec(),
        annotations: vec![None; lexicon.len()],
        edges,
    }
}

/// Per-node centrality metrics.
#[derive(Debug, Clone, Serialize)]
pub struct Centrality {
    pub label: String,
    /// Weighted in-degree.
    pub in_strength: f64,
    /// Weighted out-degree.
    pub out_strength: f64,
    /// `(r - 1) / sum of directed shortest-path distances` to the `r`
    /// reachable nodes, edge length `1 / weight`; 0 when nothing is
    /// reachable.
    pub closeness: f64,
    /// Harmonic fallback `mean of 1 / d(u, v)`, reported because
    /// unreachable nodes are excluded from closeness.
    pub harmonic: f64,
}

/// Strength and closeness centralities on the directed graph.
pub fn centralities(graph: &TransitionGraph) -> Result<Vec<Centrality>> {
    let n = graph.node_count();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    let mut in_strength = vec![0.0f64; n];
    let mut out_strength = vec![0.0f64; n];
    let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (&(src, dst), &w) in &graph.edges {
        out_strength[src as usize] += w as f64;
        in_strength[dst as usize] += w as f64;
        adjacency[src as usize].push((dst as usize, 1.0 / w as f64));
    }

    let mut out = Vec::with_capacity(n);
    for u in 0..n {
        let dist = dijkstra(&adjacency, u, n);
        let mut sum = 0.0;
        let mut harmonic = 0.0;
        let mut reachable = 0usize;
        for (v, d) in dist.iter().enumerate() {
            if v != u && d.is_finite() {
                sum += d;
                harmonic += 1.0 / d;
                reachable += 1;
            }
        }
        let closeness = if reachable > 0 && sum > 0.0 {
            reachable as f64 / sum
        } else {
            0.0
        };
        out.push(Centrality {
            label: graph.labels[u].clone(),
            in_strength: in_strength[u],
            out_strength: out_strength[u],
            closeness,
            harmonic: if n > 1 { harmonic / (n - 1) as f64 } else { 0.0 },
        });
    }
    Ok(out)
}

fn dijkstra(adjacency: &[Vec<(usize, f64)>], source: usize, n: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; n];
    dist[source] = 0.0;
    let mut visited = vec![false; n];
    // Small graphs: linear extraction beats a heap and is fully
    // deterministic.
    loop {
        let mut u = usize::MAX;
        let mut best = f64::INFINITY;
        for v in 0..n {
            if !visited[v] && dist[v] < best {
                best = dist[v];
                u = v;
            }
        }
        if u == usize::MAX {
            break;
        }
        visited[u] = true;
        for &(v, len) in &adjacency[u] {
            let candidate = dist[u] + len;
            if candidate < dist[v] {
                dist[v] = candidate;
            }
        }
    }
    dist
}

/// Community partition with its Newman modularity.
#[derive(Debug, Clone, Serialize)]
pub struct Communities {
    /// Community index per node, dense `0..n_communities`, numbered by each
    /// community's smallest member.
    pub assignment: Vec<usize>,
    pub n_communities: usize,
    pub modularity: f64,
}

/// Clauset-Newman-Moore greedy modularity maximization.
///
/// The directed graph is symmetrized by summing reciprocal edge weights;
/// agglomeration merges the pair with the largest modularity gain until no
/// positive gain remains. Merge ties resolve to the lowest community-index
/// pair.
pub fn communities(graph: &TransitionGraph) -> Result<Communities> {
    if graph.edges.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let w = graph.symmetrized();
    let n = graph.node_count();

    // m: total undirected edge weight (loops once); k: strengths (loops
    // twice).
    let mut m = 0.0f64;
    let mut strength = vec![0.0f64; n];
    for i in 0..n {
        for j in 0..n {
            if i < j {
                m += w[i][j];
            }
            strength[i] += w[i][j];
        }
        m += w[i][i];
        strength[i] += w[i][i];
    }

    // Community membership; communities indexed by their creation slot.
    let mut member_of: Vec<usize> = (0..n).collect();
    let mut alive: Vec<bool> = vec![true; n];
    // e[c][d]: total weight between communities (ordered-pair convention,
    // diagonal counts loops twice); a[c]: strength share.
    let mut e: Vec<Vec<f64>> = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                e[i][i] += 2.0 * w[i][i];
            } else {
                e[i][j] += w[i][j];
            }
        }
    }
    let mut a: Vec<f64> = strength.clone();

    loop {
        // Best positive-gain merge: dQ = e_cd / m - a_c a_d / (2 m^2).
        let mut best_gain = 0.0f64;
        let mut best_pair: Option<(usize, usize)> = None;
        for c in 0..n {
            if !alive[c] {
                continue;
            }
            for d in (c + 1)..n {
                if !alive[d] || e[c][d] == 0.0 {
                    continue;
                }
                let gain = e[c][d] / m - a[c] * a[d] / (2.0 * m * m);
                if gain > best_gain + 1e-15 {
                    best_gain = gain;
                    best_pair = Some((c, d));
                }
            }
        }
        let Some((c, d)) = best_pair else { break };
        // Merge d into c.
        for x in 0..n {
            if x != c && x != d {
                e[c][x] += e[d][x];
                e[x][c] += e[x][d];
            }
        }
        e[c][c] += e[d][d] + 2.0 * e[c][d];
        for x in 0..n {
            e[d][x] = 0.0;
            e[x][d] = 0.0;
        }
        a[c] += a[d];
        a[d] = 0.0;
        alive[d] = false;
        for mem in member_of.iter_mut() {
            if *mem == d {
                *mem = c;
            }
        }
    }

    // Dense labels ordered by smallest member node.
    let mut seen: Vec<usize> = Vec::new();
    let mut assignment = vec![0usize; n];
    for (node, &community) in member_of.iter().enumerate() {
        let label = match seen.iter().position(|&s| s == community) {
            Some(pos) => pos,
            None => {
                seen.push(community);
                seen.len() - 1
            }
        };
        assignment[node] = label;
    }
    let n_communities = seen.len();
    let q = modularity_of(graph, &assignment);
    debug_assert!((-0.5..=1.0).contains(&(q + 1e-12)));
    Ok(Communities {
        assignment,
        n_communities,
        modularity: q,
    })
}

/// Newman modularity of a partition on the symmetrized graph:
/// `Q = sum_c ( L_c / m - (d_c / 2m)^2 )` with within-community weight
/// `L_c` (loops once) and community strength `d_c` (loops twice).
///
/// Independent of the accumulator arithmetic inside [`communities`]; used
/// to cross-check reported scores.
pub fn modularity_of(graph: &TransitionGraph, assignment: &[usize]) -> f64 {
    let w = graph.symmetrized();
    let n = graph.node_count();
    assert_eq!(assignment.len(), n, "assignment covers every node");
    let mut m = 0.0f64;
    let mut strength = vec![0.0f64; n];
    for i in 0..n {
        for j in 0..n {
            if i < j {
                m += w[i][j];
            }
            strength[i] += w[i][j];
        }
        m += w[i][i];
        strength[i] += w[i][i];
    }
    if m == 0.0 {
        return 0.0;
    }
    let n_comm = assignment.iter().max().map_or(0, |&c| c + 1);
    let mut within = vec![0.0f64; n_comm];
    let mut degree = vec![0.0f64; n_comm];
    for i in 0..n {
        degree[assignment[i]] += strength[i];
        within[assignment[i]] += w[i][i];
        for j in (i + 1)..n {
            if assignment[i] == assignment[j] {
                within[assignment[i]] += w[i][j];
            }
        }
    }
    (0..n_comm)
        .map(|c| within[c] / m - (degree[c] / (2.0 * m)).powi(2))
        .sum()
}
