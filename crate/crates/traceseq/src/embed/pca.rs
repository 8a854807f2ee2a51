//! Principal-component projection to two dimensions.

use nalgebra::{DMatrix, DVector};

/// Projects row vectors onto their top two principal components.
///
/// Deterministic: eigenpairs sort by eigenvalue descending and each
/// component's sign is fixed so its largest-magnitude loading is positive.
pub fn pca_2d(vectors: &[Vec<f64>]) -> Vec<[f64; 2]> {
    let n = vectors.len();
    if n == 0 {
        return Vec::new();
    }
    let d = vectors[0].len();
    let mut mean = vec![0.0f64; d];
    for v in vectors {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let centered = DMatrix::from_fn(n, d, |i, j| vectors[i][j] - mean[j]);
    let cov = centered.transpose() * &centered / (n as f64 - 1.0).max(1.0);
    let eigen = cov.symmetric_eigen();

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eigen.eigenvalues[b]
            .partial_cmp(&eigen.eigenvalues[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut components: Vec<DVector<f64>> = Vec::with_capacity(2);
    for &idx in order.iter().take(2.min(d)) {
        let mut col = eigen.eigenvectors.column(idx).into_owned();
        let mut max_abs = 0.0f64;
        let mut max_sign = 1.0f64;
        for &v in col.iter() {
            if v.abs() > max_abs {
                max_abs = v.abs();
                max_sign = v.signum();
            }
        }
        if max_sign < 0.0 {
            col.neg_mut();
        }
        components.push(col);
    }

    (0..n)
        .map(|i| {
            let row = centered.row(i);
            let x = row.transpose().dot(&components[0]);
            let y = if components.len() > 1 {
                row.transpose().dot(&components[1])
            } else {
                0.0
            };
            [x, y]
        })
        .collect()
}
