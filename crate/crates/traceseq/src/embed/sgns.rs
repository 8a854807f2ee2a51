//! Skip-gram negative-sampling objective: loss and analytic gradients for
//! one (center, context, negatives) triple.

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `-ln s(u.w_pos) - sum_n ln s(-u.w_neg)`.
pub fn loss(center: &[f64], positive: &[f64], negatives: &[Vec<f64>]) -> f64 {
    let mut l = -sigmoid(dot(center, positive)).max(f64::MIN_POSITIVE).ln();
    for neg in negatives {
        l -= sigmoid(-dot(center, neg)).max(f64::MIN_POSITIVE).ln();
    }
    l
}

/// Analytic gradients of [`loss`] with respect to the center vector, the
/// positive context vector and each negative vector.
pub fn gradients(
    center: &[f64],
    positive: &[f64],
    negatives: &[Vec<f64>],
) -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
    let d = center.len();
    let g_pos_scale = sigmoid(dot(center, positive)) - 1.0;
    let mut g_center: Vec<f64> = positive.iter().map(|w| g_pos_scale * w).collect();
    let g_positive: Vec<f64> = center.iter().map(|u| g_pos_scale * u).collect();
    let mut g_negatives = Vec::with_capacity(negatives.len());
    for neg in negatives {
        let scale = sigmoid(dot(center, neg));
        for i in 0..d {
            g_center[i] += scale * neg[i];
        }
        g_negatives.push(center.iter().map(|u| scale * u).collect());
    }
    (g_center, g_positive, g_negatives)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
        (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    /// Central finite differences of the loss against the analytic
    /// gradients, blockwise relative error under 1e-5.
    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let h = 1e-6;
        for _ in 0..50 {
            let d = rng.gen_range(3..12);
            let n_neg = rng.gen_range(1..6);
            let center = random_vec(&mut rng, d);
            let positive = random_vec(&mut rng, d);
            let negatives: Vec<Vec<f64>> =
                (0..n_neg).map(|_| random_vec(&mut rng, d)).collect();
            let (g_center, g_positive, g_negatives) =
                gradients(&center, &positive, &negatives);

            let check = |analytic: &[f64], perturb: &mut dyn FnMut(usize, f64) -> f64| {
                let mut num = Vec::with_capacity(analytic.len());
                for i in 0..analytic.len() {
                    let up = perturb(i, h);
                    let down = perturb(i, -h);
                    num.push((up - down) / (2.0 * h));
                }
                let diff: f64 = analytic
                    .iter()
                    .zip(&num)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let norm: f64 = num.iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!(
                    diff <= 1e-5 * norm.max(1e-8),
                    "relative error {} too large",
                    diff / norm.max(1e-8)
                );
            };

            check(&g_center, &mut |i, eps| {
                let mut c = center.clone();
                c[i] += eps;
                loss(&c, &positive, &negatives)
            });
            check(&g_positive, &mut |i, eps| {
                let mut p = positive.clone();
                p[i] += eps;
                loss(&center, &p, &negatives)
            });
            for (n, g_neg) in g_negatives.iter().enumerate() {
                check(g_neg, &mut |i, eps| {
                    let mut negs = negatives.clone();
                    negs[n][i] += eps;
                    loss(&center, &positive, &negs)
                });
            }
        }
    }

    #[test]
    fn loss_is_positive_and_decreases_with_alignment() {
        let center = vec![1.0, 0.0];
        let aligned = vec![5.0, 0.0];
        let opposed = vec![-5.0, 0.0];
        let negs = vec![vec![0.1, 0.1]];
        assert!(loss(&center, &aligned, &negs) < loss(&center, &opposed, &negs));
        assert!(loss(&center, &aligned, &negs) > 0.0);
    }
}
