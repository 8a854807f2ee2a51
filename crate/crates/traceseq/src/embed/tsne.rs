//! Exact t-SNE (no tree approximation) with perplexity calibration by
//! binary search, early exaggeration, adaptive gains and PCA
//! initialization.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embed::pca::pca_2d;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub early_exaggeration: f64,
    pub exaggeration_iterations: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            perplexity: 30.0,
            iterations: 1000,
            early_exaggeration: 12.0,
            exaggeration_iterations: 250,
            learning_rate: 200.0,
            seed: 0,
        }
    }
}

/// Embeds row vectors into 2-d. Needs at least 4 points so a positive
/// perplexity is feasible; callers fall back to PCA below that.
pub fn tsne_2d(vectors: &[Vec<f64>], config: &TsneConfig) -> Result<Vec<[f64; 2]>> {
    let n = vectors.len();
    if n < 4 {
        return Err(Error::invalid(
            "t-SNE needs at least 4 points for a feasible perplexity",
        ));
    }
    // Shrink the target perplexity on small inputs.
    let perplexity = config.perplexity.min((n as f64 - 1.0) / 3.0).max(1.0);

    let sq = squared_distances(vectors);
    let p = joint_probabilities(&sq, perplexity);

    // PCA init scaled to 1e-4 std, plus seeded jitter to split duplicates.
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut y = pca_2d(vectors);
    let mut std = 0.0f64;
    for c in &y {
        std += c[0] * c[0] + c[1] * c[1];
    }
    std = (std / (2.0 * n as f64)).sqrt();
    let scale = if std > 0.0 { 1e-4 / std } else { 1.0 };
    for c in &mut y {
        c[0] = c[0] * scale + 1e-6 * (rng.gen::<f64>() - 0.5);
        c[1] = c[1] * scale + 1e-6 * (rng.gen::<f64>() - 0.5);
    }

    let mut velocity = vec![[0.0f64; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let mut q_num = vec![0.0f64; n * n];

    for iter in 0..config.iterations {
        let exaggeration = if iter < config.exaggeration_iterations {
            config.early_exaggeration
        } else {
            1.0
        };
        let momentum = if iter < config.exaggeration_iterations {
            0.5
        } else {
            0.8
        };

        // Student-t numerators and their total.
        let mut q_total = 0.0f64;
        for i in 0..n {
            q_num[i * n + i] = 0.0;
            for j in (i + 1)..n {
                let dx = y[i][0] - y[j][0];
                let dy = y[i][1] - y[j][1];
                let num = 1.0 / (1.0 + dx * dx + dy * dy);
                q_num[i * n + j] = num;
                q_num[j * n + i] = num;
                q_total += 2.0 * num;
            }
        }
        let q_total = q_total.max(f64::MIN_POSITIVE);

        // Full gradient from a consistent snapshot, then one joint update.
        let mut grads = vec![[0.0f64; 2]; n];
        for i in 0..n {
            let mut grad = [0.0f64; 2];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let num = q_num[i * n + j];
                let q = (num / q_total).max(f64::MIN_POSITIVE);
                let mult = (exaggeration * p[i * n + j] - q) * num;
                grad[0] += 4.0 * mult * (y[i][0] - y[j][0]);
                grad[1] += 4.0 * mult * (y[i][1] - y[j][1]);
            }
            grads[i] = grad;
        }
        for i in 0..n {
            for d in 0..2 {
                // Adaptive gains as in the reference implementation.
                gains[i][d] = if grads[i][d].signum() != velocity[i][d].signum() {
                    gains[i][d] + 0.2
                } else {
                    (gains[i][d] * 0.8).max(0.01)
                };
                velocity[i][d] = momentum * velocity[i][d]
                    - config.learning_rate * gains[i][d] * grads[i][d];
                y[i][d] += velocity[i][d];
            }
        }

        // Re-center.
        let mut mean = [0.0f64; 2];
        for c in &y {
            mean[0] += c[0];
            mean[1] += c[1];
        }
        mean[0] /= n as f64;
        mean[1] /= n as f64;
        for c in &mut y {
            c[0] -= mean[0];
            c[1] -= mean[1];
        }
    }

    if y.iter().any(|c| !c[0].is_finite() || !c[1].is_finite()) {
        return Err(Error::Numerical(
            "t-SNE diverged to non-finite coordinates".to_string(),
        ));
    }
    Ok(y)
}

fn squared_distances(vectors: &[Vec<f64>]) -> Vec<f64> {
    let n = vectors.len();
    let mut sq = vec![0.0f64; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d: f64 = vectors[i]
                .iter()
                .zip(&vectors[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            sq[i * n + j] = d;
            sq[j * n + i] = d;
        }
    }
    sq
}

/// Symmetrized joint probabilities; per-row precision found by binary
/// search so the conditional distribution hits the target perplexity.
fn joint_probabilities(sq: &[f64], perplexity: f64) -> Vec<f64> {
    let n = (sq.len() as f64).sqrt() as usize;
    let target_entropy = perplexity.ln();
    let mut cond = vec![0.0f64; n * n];
    for i in 0..n {
        let mut beta = 1.0f64;
        let mut beta_min = f64::NEG_INFINITY;
        let mut beta_max = f64::INFINITY;
        let mut row = vec![0.0f64; n];
        for _ in 0..50 {
            let mut sum = 0.0f64;
            for j in 0..n {
                row[j] = if j == i {
                    0.0
                } else {
                    (-beta * sq[i * n + j]).exp()
                };
                sum += row[j];
            }
            let sum = sum.max(f64::MIN_POSITIVE);
            // Shannon entropy of the conditional distribution.
            let mut entropy = 0.0f64;
            for (j, &v) in row.iter().enumerate() {
                if j != i && v > 0.0 {
                    let pj = v / sum;
                    entropy -= pj * pj.ln();
                }
            }
            let diff = entropy - target_entropy;
            if diff.abs() < 1e-5 {
                break;
            }
            if diff > 0.0 {
                beta_min = beta;
                beta = if beta_max.is_finite() {
                    (beta + beta_max) / 2.0
                } else {
                    beta * 2.0
                };
            } else {
                beta_max = beta;
                beta = if beta_min.is_finite() {
                    (beta + beta_min) / 2.0
                } else {
                    beta / 2.0
                };
            }
        }
        let sum: f64 = row.iter().sum::<f64>().max(f64::MIN_POSITIVE);
        for j in 0..n {
            cond[i * n + j] = row[j] / sum;
        }
    }
    // Symmetrize and floor.
    let mut joint = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..n {
            joint[i * n + j] =
                ((cond[i * n + j] + cond[j * n + i]) / (2.0 * n as f64)).max(1e-12);
        }
        joint[i * n + i] = 1e-12;
    }
    joint
}
