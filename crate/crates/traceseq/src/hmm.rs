//! Multinomial-emission hidden Markov models: Baum-Welch training with
//! per-step scaling over multiple sequences, AIC/BIC state selection and
//! Viterbi decoding.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::stats::sub_seed;

/// Fitted model; all rows of `transition` and `emission` are stochastic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HmmModel {
    /// Hidden state count K.
    pub k: usize,
    /// Alphabet size M.
    pub m: usize,
    pub initial: Vec<f64>,
    pub transition: Vec<Vec<f64>>,
    pub emission: Vec<Vec<f64>>,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Log-likelihood after each EM iteration of the winning restart.
    pub loglik_trace: Vec<f64>,
}

/// Baum-Welch settings.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FitOptions {
    pub restarts: usize,
    pub max_iterations: usize,
    /// Stop when the log-likelihood gain falls below this.
    pub tolerance: f64,
    /// Additive smoothing on emission counts.
    pub smoothing: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            restarts: 5,
            max_iterations: 500,
            tolerance: 1e-6,
            smoothing: 1e-10,
        }
    }
}

/// One row of the state-selection table.
#[derive(Debug, Clone, Serialize)]
pub struct SelectionRow {
    pub k: usize,
    pub log_likelihood: f64,
    /// Free parameters: K(K-1) + K(M-1) + (K-1).
    pub parameters: usize,
    pub aic: f64,
    pub bic: f64,
}

/// AIC/BIC over a range of K.
#[derive(Debug, Clone, Serialize)]
pub struct SelectionTable {
    pub rows: Vec<SelectionRow>,
    /// K minimizing BIC (primary selector).
    pub chosen_k: usize,
    /// K minimizing AIC, reported alongside.
    pub aic_k: usize,
    /// Set when AIC and BIC agree.
    pub criteria_agree: bool,
}

impl SelectionTable {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["k", "log_likelihood", "parameters", "aic", "bic"])
            .map_err(crate::ingest::io_of_csv)?;
        for row in &self.rows {
            wtr.write_record([
                row.k.to_string(),
                row.log_likelihood.to_string(),
                row.parameters.to_string(),
                row.aic.to_string(),
                row.bic.to_string(),
            ])
            .map_err(crate::ingest::io_of_csv)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Free-parameter count of a K-state model over M symbols.
pub fn parameter_count(k: usize, m: usize) -> usize {
    k * (k - 1) + k * (m - 1) + (k - 1)
}

fn validate(seqs: &[Vec<u32>], m: usize, k: usize) -> Result<usize> {
    if seqs.is_empty() || seqs.iter().any(|s| s.is_empty()) {
        return Err(Error::EmptyInput);
    }
    if k == 0 {
        return Err(Error::config("state count must be positive"));
    }
    if m == 0 {
        return Err(Error::config("alphabet must be non-empty"));
    }
    let total: usize = seqs.iter().map(Vec::len).sum();
    if k > total {
        return Err(Error::config(format!(
            "{k} states exceed the {total} total observations"
        )));
    }
    for seq in seqs {
        if let Some(&bad) = seq.iter().find(|&&s| s as usize >= m) {
            return Err(Error::invalid(format!(
                "symbol {bad} outside alphabet of size {m}"
            )));
        }
    }
    Ok(total)
}

/// Dirichlet(1) row: normalized i.i.d. exponentials.
fn random_row(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut row: Vec<f64> = (0..n)
        .map(|_| {
            let exp_sample = -(1.0 - rng.gen::<f64>()).ln();
            exp_sample.max(1e-12)
        })
        .collect();
    let sum: f64 = row.iter().sum();
    for v in &mut row {
        *v /= sum;
    }
    row
}

struct EmAccumulators {
    initial: Vec<f64>,
    transition: Vec<Vec<f64>>,
    emission: Vec<Vec<f64>>,
    state_total: Vec<f64>,
    log_likelihood: f64,
}

/// One scaled forward-backward pass accumulating sufficient statistics.
fn e_step(model: &HmmModel, seqs: &[Vec<u32>]) -> EmAccumulators {
    let k = model.k;
    let mut acc = EmAccumulators {
        initial: vec![0.0; k],
        transition: vec![vec![0.0; k]; k],
        emission: vec![vec![0.0; model.m]; k],
        state_total: vec![0.0; k],
        log_likelihood: 0.0,
    };
    for seq in seqs {
        let t_len = seq.len();
        let mut alpha = vec![vec![0.0f64; k]; t_len];
        let mut scale = vec![0.0f64; t_len];

        for i in 0..k {
            alpha[0][i] = model.initial[i] * model.emission[i][seq[0] as usize];
        }
        scale[0] = alpha[0].iter().sum::<f64>().max(f64::MIN_POSITIVE);
        for v in alpha[0].iter_mut() {
            *v /= scale[0];
        }
        for t in 1..t_len {
            let obs = seq[t] as usize;
            for j in 0..k {
                let mut sum = 0.0;
                for i in 0..k {
                    sum += alpha[t - 1][i] * model.transition[i][j];
                }
                alpha[t][j] = sum * model.emission[j][obs];
            }
            scale[t] = alpha[t].iter().sum::<f64>().max(f64::MIN_POSITIVE);
            for v in alpha[t].iter_mut() {
                *v /= scale[t];
            }
        }
        acc.log_likelihood += scale.iter().map(|c| c.ln()).sum::<f64>();

        // Backward with the same scaling factors.
        let mut beta_next = vec![1.0f64 / scale[t_len - 1]; k];
        // gamma at the final step.
        let gamma_last_norm: f64 = (0..k).map(|i| alpha[t_len - 1][i] * beta_next[i]).sum();
        for i in 0..k {
            let g = alpha[t_len - 1][i] * beta_next[i] / gamma_last_norm.max(f64::MIN_POSITIVE);
            acc.emission[i][seq[t_len - 1] as usize] += g;
            acc.state_total[i] += g;
        }
        for t in (0..t_len - 1).rev() {
            let obs_next = seq[t + 1] as usize;
            let mut beta_t = vec![0.0f64; k];
            for i in 0..k {
                let mut sum = 0.0;
                for j in 0..k {
                    sum += model.transition[i][j] * model.emission[j][obs_next] * beta_next[j];
                }
                beta_t[i] = sum / scale[t];
            }
            // xi over the (t, t+1) edge; normalizer is the sequence
            // likelihood, which the scaled quantities already absorb.
            let mut xi_norm = 0.0;
            let mut xi = vec![vec![0.0f64; k]; k];
            for i in 0..k {
                for j in 0..k {
                    let v = alpha[t][i]
                        * model.transition[i][j]
                        * model.emission[j][obs_next]
                        * beta_next[j];
                    xi[i][j] = v;
                    xi_norm += v;
                }
            }
            let xi_norm = xi_norm.max(f64::MIN_POSITIVE);
            let mut gamma_t = vec![0.0f64; k];
            for i in 0..k {
                for j in 0..k {
                    let v = xi[i][j] / xi_norm;
                    acc.transition[i][j] += v;
                    gamma_t[i] += v;
                }
            }
            let obs_t = seq[t] as usize;
            for i in 0..k {
                acc.emission[i][obs_t] += gamma_t[i];
                acc.state_total[i] += gamma_t[i];
                if t == 0 {
                    acc.initial[i] += gamma_t[i];
                }
            }
            beta_next = beta_t;
        }
        if t_len == 1 {
            for i in 0..k {
                let g = alpha[0][i] / alpha[0].iter().sum::<f64>().max(f64::MIN_POSITIVE);
                acc.initial[i] += g;
            }
        }
    }
    acc
}

fn m_step(model: &mut HmmModel, acc: &EmAccumulators, seqs_count: usize, smoothing: f64) {
    let k = model.k;
    for i in 0..k {
        model.initial[i] = acc.initial[i] / seqs_count as f64;
        let row_sum: f64 = acc.transition[i].iter().sum();
        if row_sum > 0.0 {
            for j in 0..k {
                model.transition[i][j] = acc.transition[i][j] / row_sum;
            }
        }
        let emit_total: f64 = acc.emission[i].iter().sum::<f64>() + smoothing * model.m as f64;
        for s in 0..model.m {
            model.emission[i][s] = (acc.emission[i][s] + smoothing) / emit_total;
        }
    }
    // Renormalize the initial distribution against accumulated rounding.
    let pi_sum: f64 = model.initial.iter().sum();
    if pi_sum > 0.0 {
        for v in &mut model.initial {
            *v /= pi_sum;
        }
    }
}

fn fit_single(seqs: &[Vec<u32>], m: usize, k: usize, seed: u64, opts: &FitOptions) -> HmmModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = HmmModel {
        k,
        m,
        initial: random_row(&mut rng, k),
        transition: (0..k).map(|_| random_row(&mut rng, k)).collect(),
        emission: (0..k).map(|_| random_row(&mut rng, m)).collect(),
        log_likelihood: f64::NEG_INFINITY,
        iterations: 0,
        converged: false,
        loglik_trace: Vec::new(),
    };
    let mut prev_ll = f64::NEG_INFINITY;
    for iter in 1..=opts.max_iterations {
        let acc = e_step(&model, seqs);
        model.loglik_trace.push(acc.log_likelihood);
        model.iterations = iter;
        if acc.log_likelihood - prev_ll < opts.tolerance && iter > 1 {
            model.log_likelihood = acc.log_likelihood;
            model.converged = true;
            return model;
        }
        prev_ll = acc.log_likelihood;
        m_step(&mut model, &acc, seqs.len(), opts.smoothing);
        model.log_likelihood = acc.log_likelihood;
    }
    // Final evaluation so the reported likelihood matches the returned
    // parameters.
    let acc = e_step(&model, seqs);
    model.log_likelihood = acc.log_likelihood;
    model.loglik_trace.push(acc.log_likelihood);
    model
}

/// Baum-Welch fit: best of `opts.restarts` seeded random initializations.
///
/// Deterministic for a fixed seed; restarts run in parallel and the winner
/// is the highest likelihood with ties broken by lowest restart index.
pub fn fit(
    seqs: &[Vec<u32>],
    m: usize,
    k: usize,
    seed: u64,
    opts: &FitOptions,
) -> Result<HmmModel> {
    validate(seqs, m, k)?;
    let restarts = opts.restarts.max(1);
    let seeds: Vec<u64> = (0..restarts)
        .map(|r| sub_seed(seed, r as u64))
        .collect();
    #[cfg(feature = "parallel")]
    let candidates: Vec<HmmModel> = seeds
        .par_iter()
        .map(|&s| fit_single(seqs, m, k, s, opts))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let candidates: Vec<HmmModel> = seeds
        .iter()
        .map(|&s| fit_single(seqs, m, k, s, opts))
        .collect();
    let mut best = 0;
    for (i, c) in candidates.iter().enumerate() {
        if c.log_likelihood > candidates[best].log_likelihood {
            best = i;
        }
    }
    Ok(candidates.into_iter().nth(best).expect("non-empty restarts"))
}

/// Fits every K in `ks` and selects by BIC (AIC reported alongside).
pub fn select_states(
    seqs: &[Vec<u32>],
    m: usize,
    ks: &[usize],
    seed: u64,
    opts: &FitOptions,
) -> Result<(SelectionTable, Vec<HmmModel>)> {
    if ks.is_empty() {
        return Err(Error::config("state range must be non-empty"));
    }
    let total: usize = seqs.iter().map(Vec::len).sum();
    let mut rows = Vec::with_capacity(ks.len());
    let mut models = Vec::with_capacity(ks.len());
    for &k in ks {
        let model = fit(seqs, m, k, seed, opts)?;
        let p = parameter_count(k, m);
        rows.push(SelectionRow {
            k,
            log_likelihood: model.log_likelihood,
            parameters: p,
            aic: -2.0 * model.log_likelihood + 2.0 * p as f64,
            bic: -2.0 * model.log_likelihood + p as f64 * (total as f64).ln(),
        });
        models.push(model);
    }
    let argmin = |get: fn(&SelectionRow) -> f64| -> usize {
        let mut best = 0;
        for (i, row) in rows.iter().enumerate() {
            if get(row) < get(&rows[best]) {
                best = i;
            }
        }
        rows[best].k
    };
    let chosen_k = argmin(|r| r.bic);
    let aic_k = argmin(|r| r.aic);
    Ok((
        SelectionTable {
            rows,
            chosen_k,
            aic_k,
            criteria_agree: chosen_k == aic_k,
        },
        models,
    ))
}

/// Most probable state path (Viterbi, log space). Ties prefer the lower
/// state index.
pub fn decode(model: &HmmModel, seq: &[u32]) -> Result<Vec<usize>> {
    if seq.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(&bad) = seq.iter().find(|&&s| s as usize >= model.m) {
        return Err(Error::invalid(format!(
            "symbol {bad} outside alphabet of size {}",
            model.m
        )));
    }
    let k = model.k;
    let ln = |x: f64| if x > 0.0 { x.ln() } else { f64::NEG_INFINITY };
    let mut delta: Vec<f64> = (0..k)
        .map(|i| ln(model.initial[i]) + ln(model.emission[i][seq[0] as usize]))
        .collect();
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(seq.len());
    for &obs in &seq[1..] {
        let mut next = vec![f64::NEG_INFINITY; k];
        let mut arg = vec![0usize; k];
        for j in 0..k {
            let mut best = f64::NEG_INFINITY;
            let mut best_i = 0;
            for i in 0..k {
                let v = delta[i] + ln(model.transition[i][j]);
                if v > best {
                    best = v;
                    best_i = i;
                }
            }
            next[j] = best + ln(model.emission[j][obs as usize]);
            arg[j] = best_i;
        }
        back.push(arg);
        delta = next;
    }
    let mut state = 0;
    for i in 1..k {
        if delta[i] > delta[state] {
            state = i;
        }
    }
    let mut path = vec![state; seq.len()];
    for (t, arg) in back.iter().enumerate().rev() {
        state = arg[state];
        path[t] = state;
    }
    Ok(path)
}

/// Sequence log-likelihood under a model (scaled forward pass).
pub fn log_likelihood(model: &HmmModel, seqs: &[Vec<u32>]) -> f64 {
    e_step(model, seqs).log_likelihood
}

fn assert_row_stochastic(rows: &[Vec<f64>]) -> bool {
    rows.iter().all(|row| {
        row.iter().all(|&v| v >= 0.0) && (row.iter().sum::<f64>() - 1.0).abs() <= 1e-9
    })
}

/// True when every distribution in the model is a proper probability row.
pub fn is_valid(model: &HmmModel) -> bool {
    assert_row_stochastic(std::slice::from_ref(&model.initial))
        && assert_row_stochastic(&model.transition)
        && assert_row_stochastic(&model.emission)
}
