//! Cox proportional hazards with platform dummy covariates.
//!
//! Breslow partial likelihood maximized by Newton-Raphson with step-halving;
//! standard errors from the inverse observed information.

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::model::Platform;
use crate::survival::DurationRecord;

const MAX_ITERATIONS: usize = 50;
const SCORE_TOLERANCE: f64 = 1e-9;
const MAX_HALVINGS: usize = 30;

/// Fitted Cox model.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CoxFit {
    /// Dummy covariate names (platforms other than the baseline), sorted.
    pub covariates: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub z_values: Vec<f64>,
    /// Two-sided Wald p-values.
    pub p_values: Vec<f64>,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Partial log-likelihood after each accepted Newton step (starting
    /// from the null model); non-decreasing by construction.
    pub ll_trace: Vec<f64>,
}

impl CoxFit {
    /// CSV matching a hazard-table layout: covariate, coef, se, z, p.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["covariate", "coef", "se_coef", "z", "p"])
            .map_err(crate::ingest::io_of_csv)?;
        for i in 0..self.covariates.len() {
            wtr.write_record([
                self.covariates[i].clone(),
                self.coefficients[i].to_string(),
                self.std_errors[i].to_string(),
                self.z_values[i].to_string(),
                format!("{:e}", self.p_values[i]),
            ])
            .map_err(crate::ingest::io_of_csv)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

struct PreparedData {
    /// Covariate rows, one per record.
    x: Vec<Vec<f64>>,
    durations: Vec<f64>,
    observed: Vec<bool>,
    covariates: Vec<String>,
}

fn prepare(records: &[DurationRecord], baseline: &Platform) -> Result<PreparedData> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut levels: Vec<&Platform> = Vec::new();
    for r in records {
        if !levels.contains(&&r.platform) {
            levels.push(&r.platform);
        }
    }
    levels.sort();
    if levels.len() < 2 {
        return Err(Error::invalid(
            "cox model needs at least two platform levels",
        ));
    }
    if !levels.contains(&baseline) {
        return Err(Error::invalid(format!(
            "baseline platform {baseline} absent from the records"
        )));
    }
    if !records.iter().any(|r| r.observed) {
        return Err(Error::invalid("cox model needs at least one observed event"));
    }
    let dummies: Vec<&Platform> = levels.into_iter().filter(|p| *p != baseline).collect();
    let x: Vec<Vec<f64>> = records
        .iter()
        .map(|r| {
            dummies
                .iter()
                .map(|p| if &&r.platform == p { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    Ok(PreparedData {
        x,
        durations: records.iter().map(|r| r.duration_minutes).collect(),
        observed: records.iter().map(|r| r.observed).collect(),
        covariates: dummies.iter().map(|p| p.name().to_string()).collect(),
    })
}

/// Breslow partial log-likelihood, score and observed information at `beta`.
///
/// Records are scanned from the largest duration down, growing the risk set;
/// ties share one risk set (Breslow).
fn breslow_ll_score_info(
    data: &PreparedData,
    order_desc: &[usize],
    beta: &[f64],
    want_derivatives: bool,
) -> (f64, Vec<f64>, Vec<Vec<f64>>) {
    let p = beta.len();
    let mut s0 = 0.0f64;
    let mut s1 = vec![0.0f64; p];
    let mut s2 = vec![vec![0.0f64; p]; p];
    let mut ll = 0.0f64;
    let mut score = vec![0.0f64; p];
    let mut info = vec![vec![0.0f64; p]; p];

    let mut idx = 0;
    while idx < order_desc.len() {
        let t = data.durations[order_desc[idx]];
        // Add every record tied at this duration to the risk set.
        let group_start = idx;
        while idx < order_desc.len() && data.durations[order_desc[idx]] == t {
            let rec = order_desc[idx];
            let eta: f64 = data.x[rec]
                .iter()
                .zip(beta)
                .map(|(xi, bi)| xi * bi)
                .sum();
            let w = eta.exp();
            s0 += w;
            for a in 0..p {
                s1[a] += w * data.x[rec][a];
                if want_derivatives {
                    for b in a..p {
                        s2[a][b] += w * data.x[rec][a] * data.x[rec][b];
                    }
                }
            }
            idx += 1;
        }
        // Events at this duration, Breslow-style against the shared risk set.
        let mut d = 0.0f64;
        let mut event_eta = 0.0f64;
        let mut event_x = vec![0.0f64; p];
        for &rec in &order_desc[group_start..idx] {
            if data.observed[rec] {
                d += 1.0;
                event_eta += data.x[rec]
                    .iter()
                    .zip(beta)
                    .map(|(xi, bi)| xi * bi)
                    .sum::<f64>();
                for a in 0..p {
                    event_x[a] += data.x[rec][a];
                }
            }
        }
        if d > 0.0 {
            ll += event_eta - d * s0.ln();
            if want_derivatives {
                for a in 0..p {
                    let mean_a = s1[a] / s0;
                    score[a] += event_x[a] - d * mean_a;
                    for b in a..p {
                        info[a][b] += d * (s2[a][b] / s0 - mean_a * s1[b] / s0);
                    }
                }
            }
        }
    }
    if want_derivatives {
        for a in 0..p {
            for b in 0..a {
                info[a][b] = info[b][a];
                s2[a][b] = s2[b][a];
            }
        }
    }
    (ll, score, info)
}

/// Fits the Cox model with the given baseline platform.
///
/// Errors with [`Error::SingularModel`] when the observed information has no
/// inverse (no covariate variation among events). Non-convergence within 50
/// iterations returns the best iterate with `converged = false`.
pub fn cox_fit(records: &[DurationRecord], baseline: &Platform) -> Result<CoxFit> {
    let data = prepare(records, baseline)?;
    let p = data.covariates.len();

    let mut order_desc: Vec<usize> = (0..records.len()).collect();
    order_desc.sort_by(|&a, &b| {
        data.durations[b]
            .partial_cmp(&data.durations[a])
            .unwrap()
            .then(a.cmp(&b))
    });

    let mut beta = vec![0.0f64; p];
    let (mut ll, mut score, mut info) =
        breslow_ll_score_info(&data, &order_desc, &beta, true);
    let mut ll_trace = vec![ll];
    let mut converged = false;
    let mut iterations = 0;

    for iter in 1..=MAX_ITERATIONS {
        iterations = iter;
        let max_score = score.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        if max_score < SCORE_TOLERANCE {
            converged = true;
            iterations = iter - 1;
            break;
        }
        let info_m = DMatrix::from_fn(p, p, |a, b| info[a][b]);
        let score_v = DVector::from_column_slice(&score);
        let delta = info_m
            .clone()
            .lu()
            .solve(&score_v)
            .filter(|d| d.iter().all(|v| v.is_finite()))
            .ok_or(Error::SingularModel)?;

        // Step-halving: shrink the Newton step until the partial
        // log-likelihood does not decrease.
        let mut step = 1.0f64;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let candidate: Vec<f64> = beta
                .iter()
                .enumerate()
                .map(|(a, b)| b + step * delta[a])
                .collect();
            let (cand_ll, cand_score, cand_info) =
                breslow_ll_score_info(&data, &order_desc, &candidate, true);
            if cand_ll.is_finite() && cand_ll >= ll {
                accepted = Some((candidate, cand_ll, cand_score, cand_info));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some((candidate, cand_ll, cand_score, cand_info)) => {
                let gain = cand_ll - ll;
                beta = candidate;
                ll = cand_ll;
                score = cand_score;
                info = cand_info;
                ll_trace.push(ll);
                // Stationary up to float noise; further steps are no-ops.
                if gain == 0.0 {
                    break;
                }
            }
            // No improving step exists; we are at a maximum (up to
            // numerical precision).
            None => break,
        }
    }
    if !converged {
        let max_score = score.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        converged = max_score < SCORE_TOLERANCE;
    }

    let info_m = DMatrix::from_fn(p, p, |a, b| info[a][b]);
    let inverse = info_m.try_inverse().ok_or(Error::SingularModel)?;
    let std_errors: Vec<f64> = (0..p)
        .map(|a| {
            let v = inverse[(a, a)];
            if v.is_finite() && v > 0.0 {
                v.sqrt()
            } else {
                f64::NAN
            }
        })
        .collect();
    if std_errors.iter().any(|se| !se.is_finite()) {
        return Err(Error::SingularModel);
    }

    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let z_values: Vec<f64> = beta
        .iter()
        .zip(&std_errors)
        .map(|(b, se)| b / se)
        .collect();
    let p_values: Vec<f64> = z_values
        .iter()
        .map(|z| (2.0 * (1.0 - normal.cdf(z.abs()))).clamp(0.0, 1.0))
        .collect();

    Ok(CoxFit {
        covariates: data.covariates,
        coefficients: beta,
        std_errors,
        z_values,
        p_values,
        log_likelihood: ll,
        iterations,
        converged,
        ll_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::Exp;

    fn record(platform: Platform, minutes: f64, observed: bool) -> DurationRecord {
        DurationRecord {
            user_id: "u".to_string(),
            platform,
            duration_minutes: minutes,
            observed,
        }
    }

    /// Twelve records, one binary covariate (Facebook vs YouTube baseline).
    fn twelve_record_fixture() -> Vec<DurationRecord> {
        vec![
            record(Platform::Facebook, 1.0, true),
            record(Platform::Facebook, 2.0, true),
            record(Platform::Facebook, 3.0, true),
            record(Platform::Facebook, 4.0, false),
            record(Platform::Facebook, 6.0, true),
            record(Platform::Facebook, 9.0, true),
            record(Platform::YouTube, 2.5, true),
            record(Platform::YouTube, 5.0, true),
            record(Platform::YouTube, 7.0, false),
            record(Platform::YouTube, 10.0, true),
            record(Platform::YouTube, 12.0, false),
            record(Platform::YouTube, 14.0, true),
        ]
    }

    /// Direct Breslow partial log-likelihood for a single binary covariate,
    /// written independently of the fitting code.
    fn breslow_ll_binary(records: &[DurationRecord], beta: f64) -> f64 {
        let mut ll = 0.0;
        let mut times: Vec<f64> = records
            .iter()
            .filter(|r| r.observed)
            .map(|r| r.duration_minutes)
            .collect();
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        times.dedup();
        for &t in &times {
            let evts: Vec<&DurationRecord> = records
                .iter()
                .filter(|r| r.observed && r.duration_minutes == t)
                .collect();
            let risk: f64 = records
                .iter()
                .filter(|r| r.duration_minutes >= t)
                .map(|r| {
                    if r.platform == Platform::Facebook {
                        beta.exp()
                    } else {
                        1.0
                    }
                })
                .sum();
            for e in &evts {
                let x = if e.platform == Platform::Facebook { beta } else { 0.0 };
                ll += x;
            }
            ll -= evts.len() as f64 * risk.ln();
        }
        ll
    }

    #[test]
    fn newton_matches_grid_scan_of_partial_likelihood() {
        let records = twelve_record_fixture();
        let fit = cox_fit(&records, &Platform::YouTube).unwrap();
        assert!(fit.converged);
        assert_eq!(fit.covariates, vec!["Facebook"]);

        // Oracle: coarse grid over beta, then golden-section refinement.
        let mut best_beta = 0.0;
        let mut best_ll = f64::NEG_INFINITY;
        let mut b = -5.0;
        while b <= 5.0 {
            let ll = breslow_ll_binary(&records, b);
            if ll > best_ll {
                best_ll = ll;
                best_beta = b;
            }
            b += 0.001;
        }
        let (mut lo, mut hi) = (best_beta - 0.002, best_beta + 0.002);
        for _ in 0..60 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if breslow_ll_binary(&records, m1) < breslow_ll_binary(&records, m2) {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        let oracle_beta = (lo + hi) / 2.0;
        assert!(
            (fit.coefficients[0] - oracle_beta).abs() < 1e-4,
            "newton {} vs grid {}",
            fit.coefficients[0],
            oracle_beta
        );
    }

    #[test]
    fn exchangeable_groups_give_near_zero_coefficient() {
        // Identical duration distributions in both groups.
        let mut records = Vec::new();
        for t in 1..=20 {
            records.push(record(Platform::Facebook, t as f64, true));
            records.push(record(Platform::YouTube, t as f64, true));
        }
        let fit = cox_fit(&records, &Platform::YouTube).unwrap();
        assert!(fit.coefficients[0].abs() < 3.0 * fit.std_errors[0]);
        assert!(fit.coefficients[0].abs() < 1e-6);
    }

    #[test]
    fn duration_rescaling_leaves_coefficients_unchanged() {
        let records = twelve_record_fixture();
        let fit = cox_fit(&records, &Platform::YouTube).unwrap();
        let scaled: Vec<DurationRecord> = records
            .iter()
            .map(|r| record(r.platform.clone(), r.duration_minutes * 37.5, r.observed))
            .collect();
        let fit_scaled = cox_fit(&scaled, &Platform::YouTube).unwrap();
        for (a, b) in fit.coefficients.iter().zip(&fit_scaled.coefficients) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn ll_trace_non_decreasing() {
        let records = twelve_record_fixture();
        let fit = cox_fit(&records, &Platform::YouTube).unwrap();
        for pair in fit.ll_trace.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-12);
        }
    }

    #[test]
    fn no_covariate_variation_among_events_is_singular() {
        // Events only on Facebook; YouTube rows censored before every event
        // time, so no risk set ever mixes platforms -> zero information.
        let records = vec![
            record(Platform::Facebook, 1.0, true),
            record(Platform::Facebook, 2.0, true),
            record(Platform::YouTube, 0.25, false),
            record(Platform::YouTube, 0.5, false),
        ];
        match cox_fit(&records, &Platform::YouTube) {
            Err(Error::SingularModel) => {}
            Ok(fit) => panic!("expected singular model, got {fit:?}"),
            Err(e) => panic!("expected singular model, got {e:?}"),
        }
    }

    #[test]
    fn preconditions_enforced() {
        // One level only.
        let records = vec![record(Platform::Facebook, 1.0, true)];
        assert!(cox_fit(&records, &Platform::YouTube).is_err());
        // No events.
        let records = vec![
            record(Platform::Facebook, 1.0, false),
            record(Platform::YouTube, 2.0, false),
        ];
        assert!(cox_fit(&records, &Platform::YouTube).is_err());
        // Empty.
        assert!(matches!(
            cox_fit(&[], &Platform::YouTube),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn planted_hazard_ratios_recover_sign_pattern() {
        // Facebook and Instagram switch faster than YouTube; TikTok slower.
        // Exponential durations with rate = exp(true beta).
        let truth = [
            (Platform::Facebook, 1.06),
            (Platform::TikTok, -0.13),
            (Platform::Instagram, 0.72),
            (Platform::YouTube, 0.0),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut records = Vec::new();
        for (platform, beta) in &truth {
            let exp = Exp::new((beta as &f64).exp()).unwrap();
            for _ in 0..200 {
                let t: f64 = exp.sample(&mut rng);
                let censored = rng.gen_bool(0.1);
                records.push(record(platform.clone(), t.max(1e-6), !censored));
            }
        }
        let fit = cox_fit(&records, &Platform::YouTube).unwrap();
        assert!(fit.converged);
        let coef = |name: &str| -> f64 {
            let i = fit.covariates.iter().position(|c| c == name).unwrap();
            fit.coefficients[i]
        };
        assert!(coef("Facebook") > 0.5);
        assert!(coef("Instagram") > 0.3);
        assert!(coef("TikTok") < 0.0);
        assert!(coef("Facebook") > coef("Instagram"));
        // Wald p-values live in [0, 1].
        for p in &fit.p_values {
            assert!((0.0..=1.0).contains(p));
        }
    }
}
