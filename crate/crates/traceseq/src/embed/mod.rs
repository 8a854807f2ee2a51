//! Skip-gram-with-negative-sampling embeddings of synthetic event words,
//! nearest neighbors, 2-d projection and trajectory metrics.

pub mod pca;
pub mod sgns;
pub mod tsne;

pub use tsne::TsneConfig;

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{LexiconMode, UserSequence};

/// Synthetic-word token streams per user, in corpus order.
pub fn token_corpus(sequences: &[UserSequence]) -> Vec<Vec<String>> {
    sequences
        .iter()
        .map(|seq| {
            seq.events
                .iter()
                .map(|e| LexiconMode::SyntheticWord.descriptor(e))
                .collect()
        })
        .collect()
}

/// SGNS training settings.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrainConfig {
    pub dimensions: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub min_count: u64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dimensions: 100,
            window: 5,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            min_count: 5,
            seed: 0,
        }
    }
}

/// Trained embedding space: vocabulary plus input and output vectors.
#[derive(Debug, Clone)]
pub struct EmbeddingSpace {
    /// Vocabulary sorted by frequency descending, then token.
    pub tokens: Vec<String>,
    pub counts: Vec<u64>,
    /// Input (word) vectors, one row per token.
    pub input: Vec<Vec<f64>>,
    /// Output (context) vectors.
    pub output: Vec<Vec<f64>>,
    pub dimensions: usize,
    index: HashMap<String, usize>,
}

impl EmbeddingSpace {
    pub fn vocab_size(&self) -> usize {
        self.tokens.len()
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn vector(&self, token: &str) -> Option<&[f64]> {
        self.index_of(token).map(|i| self.input[i].as_slice())
    }

    /// Cosine similarity between two stored vectors.
    pub fn cosine(&self, a: usize, b: usize) -> f64 {
        cosine(&self.input[a], &self.input[b])
    }

    /// Text export: first line `V d`, then one token and `d` floats per
    /// line. Tokens may contain spaces; fields after the token are exactly
    /// the last `d` space-separated values.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {}", self.vocab_size(), self.dimensions)?;
        for (token, vector) in self.tokens.iter().zip(&self.input) {
            write!(w, "{token}")?;
            for v in vector {
                write!(w, " {v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Reads the text export back; counts are not stored in the format and
    /// come back as zero.
    pub fn read_text<R: Read>(r: R) -> Result<Self> {
        let mut lines = BufReader::new(r).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::invalid("empty embedding file"))??;
        let mut parts = header.split_whitespace();
        let v: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::invalid("bad embedding header"))?;
        let d: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::invalid("bad embedding header"))?;
        let mut tokens = Vec::with_capacity(v);
        let mut input = Vec::with_capacity(v);
        for line in lines {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(' ').collect();
            if fields.len() < d + 1 {
                return Err(Error::invalid("embedding row too short"));
            }
            let token = fields[..fields.len() - d].join(" ");
            let vector = fields[fields.len() - d..]
                .iter()
                .map(|s| s.parse::<f64>().map_err(|_| Error::invalid("bad float")))
                .collect::<Result<Vec<f64>>>()?;
            tokens.push(token);
            input.push(vector);
        }
        if tokens.len() != v {
            return Err(Error::invalid(format!(
                "expected {v} rows, found {}",
                tokens.len()
            )));
        }
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Ok(EmbeddingSpace {
            counts: vec![0; tokens.len()],
            output: input.clone(),
            dimensions: d,
            index,
            tokens,
            input,
        })
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Unigram^0.75 noise table: cumulative weights sampled by binary search.
struct NoiseTable {
    cumulative: Vec<f64>,
    total: f64,
}

impl NoiseTable {
    fn new(counts: &[u64]) -> Self {
        let mut cumulative = Vec::with_capacity(counts.len());
        let mut total = 0.0f64;
        for &c in counts {
            total += (c as f64).powf(0.75);
            cumulative.push(total);
        }
        NoiseTable { cumulative, total }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        let u = rng.gen::<f64>() * self.total;
        self.cumulative.partition_point(|&c| c <= u)
    }
}

/// Trains SGNS embeddings over token streams.
///
/// Single-threaded and deterministic for a fixed seed: users, positions and
/// negative draws all follow one seeded stream, and the learning rate
/// decays linearly over the planned updates.
pub fn train(corpus: &[Vec<String>], config: &TrainConfig) -> Result<EmbeddingSpace> {
    if config.dimensions == 0 || config.window == 0 || config.epochs == 0 {
        return Err(Error::config("dimensions, window and epochs must be positive"));
    }
    // Vocabulary over the min-count threshold.
    let mut freq: HashMap<&str, u64> = HashMap::new();
    for seq in corpus {
        for token in seq {
            *freq.entry(token).or_insert(0) += 1;
        }
    }
    let mut vocab: Vec<(&str, u64)> = freq
        .into_iter()
        .filter(|(_, c)| *c >= config.min_count)
        .collect();
    vocab.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    if vocab.is_empty() {
        return Err(Error::config(
            "vocabulary is empty after min-count filtering",
        ));
    }
    let tokens: Vec<String> = vocab.iter().map(|(t, _)| t.to_string()).collect();
    let counts: Vec<u64> = vocab.iter().map(|(_, c)| *c).collect();
    let index: HashMap<String, usize> = tokens
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i))
        .collect();

    // Streams with out-of-vocabulary tokens removed.
    let streams: Vec<Vec<usize>> = corpus
        .iter()
        .map(|seq| seq.iter().filter_map(|t| index.get(t).copied()).collect())
        .collect();
    let positions: usize = streams.iter().map(Vec::len).sum();
    let planned_updates = (positions * config.epochs).max(1);

    let d = config.dimensions;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut input: Vec<Vec<f64>> = (0..tokens.len())
        .map(|_| (0..d).map(|_| (rng.gen::<f64>() - 0.5) / d as f64).collect())
        .collect();
    let mut output: Vec<Vec<f64>> = vec![vec![0.0; d]; tokens.len()];
    let noise = NoiseTable::new(&counts);

    let mut processed = 0usize;
    for _ in 0..config.epochs {
        for stream in &streams {
            for center_pos in 0..stream.len() {
                let progress = processed as f64 / planned_updates as f64;
                let lr = config.learning_rate * (1.0 - progress).max(1e-4);
                processed += 1;

                let center = stream[center_pos];
                let reach = rng.gen_range(1..=config.window);
                let lo = center_pos.saturating_sub(reach);
                let hi = (center_pos + reach).min(stream.len() - 1);
                for context_pos in lo..=hi {
                    if context_pos == center_pos {
                        continue;
                    }
                    let context = stream[context_pos];
                    let negatives: Vec<usize> = (0..config.negatives)
                        .map(|_| noise.sample(&mut rng))
                        .filter(|&n| n != context)
                        .collect();
                    let neg_vecs: Vec<Vec<f64>> =
                        negatives.iter().map(|&n| output[n].clone()).collect();
                    let (g_center, g_context, g_negs) =
                        sgns::gradients(&input[center], &output[context], &neg_vecs);
                    for i in 0..d {
                        input[center][i] -= lr * g_center[i];
                        output[context][i] -= lr * g_context[i];
                    }
                    for (&n, g) in negatives.iter().zip(&g_negs) {
                        for i in 0..d {
                            output[n][i] -= lr * g[i];
                        }
                    }
                }
            }
        }
    }

    Ok(EmbeddingSpace {
        tokens,
        counts,
        input,
        output,
        dimensions: d,
        index,
    })
}

/// Mean SGNS loss over a probe batch of (center, context, negatives)
/// index triples; used to watch training progress.
pub fn average_loss(space: &EmbeddingSpace, batch: &[(usize, usize, Vec<usize>)]) -> f64 {
    if batch.is_empty() {
        return 0.0;
    }
    let total: f64 = batch
        .iter()
        .map(|(center, context, negatives)| {
            let negs: Vec<Vec<f64>> = negatives
                .iter()
                .map(|&n| space.output[n].clone())
                .collect();
            sgns::loss(&space.input[*center], &space.output[*context], &negs)
        })
        .sum();
    total / batch.len() as f64
}

/// `k` nearest tokens by cosine, descending, ties broken lexicographically;
/// the query token itself is excluded.
pub fn neighbors(space: &EmbeddingSpace, token: &str, k: usize) -> Result<Vec<(String, f64)>> {
    let query = space
        .index_of(token)
        .ok_or_else(|| Error::NotInVocabulary(token.to_string()))?;
    let mut scored: Vec<(usize, f64)> = (0..space.vocab_size())
        .filter(|&i| i != query)
        .map(|i| (i, space.cosine(query, i)))
        .collect();
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap()
            .then_with(|| space.tokens[a.0].cmp(&space.tokens[b.0]))
    });
    Ok(scored
        .into_iter()
        .take(k)
        .map(|(i, c)| (space.tokens[i].clone(), c))
        .collect())
}

/// Per-user trajectory summary in embedding space.
#[derive(Debug, Clone, Serialize)]
pub struct TrajectorySummary {
    pub user_id: String,
    /// Shannon entropy (bits) of the user's token frequency distribution.
    pub entropy_bits: f64,
    /// Root-mean-square embedding distance from the trajectory centroid.
    pub radius_of_gyration: f64,
    /// In-vocabulary token occurrences.
    pub token_count: usize,
    /// Out-of-vocabulary occurrences dropped.
    pub oov_dropped: usize,
}

/// Entropy and radius of gyration of one user's token stream.
pub fn trajectory_metrics(
    space: &EmbeddingSpace,
    user_id: &str,
    tokens: &[String],
) -> Result<TrajectorySummary> {
    let mut counts: HashMap<usize, usize> = HashMap::new();
    let mut kept = 0usize;
    let mut dropped = 0usize;
    for token in tokens {
        match space.index_of(token) {
            Some(i) => {
                *counts.entry(i).or_insert(0) += 1;
                kept += 1;
            }
            None => dropped += 1,
        }
    }
    if kept == 0 {
        return Err(Error::EmptyTrajectory);
    }

    let n = kept as f64;
    let entropy_bits = -counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            p * p.log2()
        })
        .sum::<f64>();

    let d = space.dimensions;
    let mut mean = vec![0.0f64; d];
    for (&i, &c) in &counts {
        for (m, v) in mean.iter_mut().zip(&space.input[i]) {
            *m += c as f64 * v;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut msd = 0.0f64;
    for (&i, &c) in &counts {
        let sq: f64 = space.input[i]
            .iter()
            .zip(&mean)
            .map(|(v, m)| (v - m) * (v - m))
            .sum();
        msd += c as f64 * sq;
    }
    let radius_of_gyration = (msd / n).sqrt();

    Ok(TrajectorySummary {
        user_id: user_id.to_string(),
        entropy_bits: entropy_bits.max(0.0),
        radius_of_gyration,
        token_count: kept,
        oov_dropped: dropped,
    })
}

/// Projection method for the 2-d map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProjectionMethod {
    Pca,
    Tsne,
}

/// 2-d projection result.
#[derive(Debug, Clone)]
pub struct Projection {
    pub coords: Vec<[f64; 2]>,
    pub method_used: ProjectionMethod,
    /// Set when t-SNE was infeasible and PCA was used instead.
    pub warning: Option<String>,
}

/// Projects vectors to 2-d; t-SNE falls back to PCA (with a warning) when
/// fewer than 4 points make the perplexity infeasible.
pub fn project_2d(
    vectors: &[Vec<f64>],
    method: ProjectionMethod,
    config: &TsneConfig,
) -> Result<Projection> {
    if vectors.len() < 3 {
        return Err(Error::invalid("projection needs at least 3 points"));
    }
    match method {
        ProjectionMethod::Pca => Ok(Projection {
            coords: pca::pca_2d(vectors),
            method_used: ProjectionMethod::Pca,
            warning: None,
        }),
        ProjectionMethod::Tsne => {
            if vectors.len() < 4 {
                return Ok(Projection {
                    coords: pca::pca_2d(vectors),
                    method_used: ProjectionMethod::Pca,
                    warning: Some(
                        "fewer than 4 points: perplexity infeasible, fell back to PCA"
                            .to_string(),
                    ),
                });
            }
            Ok(Projection {
                coords: tsne::tsne_2d(vectors, config)?,
                method_used: ProjectionMethod::Tsne,
                warning: None,
            })
        }
    }
}
