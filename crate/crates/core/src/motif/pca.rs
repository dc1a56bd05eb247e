use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Principal-component projection fitted on a feature matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `out_dim` orthonormal rows of length `in_dim`.
    pub components: Matrix,
    pub explained_variance_ratio: Vec<f64>,
    pub out_dim: usize,
}

impl PcaModel {
    pub fn in_dim(&self) -> usize {
        self.mean.len()
    }
}

/// Fit the top `out_dim` principal directions of the mean-centred rows.
///
/// Each component is signed so that its largest-magnitude entry is positive.
pub fn pca_fit(features: &Matrix, out_dim: usize) -> Result<PcaModel> {
    let (n, d) = (features.rows(), features.cols());
    if out_dim == 0 || out_dim > d {
        return Err(Error::contract(format!(
            "PCA output dimension {out_dim} must lie in 1..={d}"
        )));
    }
    if n <= out_dim {
        return Err(Error::contract(format!(
            "PCA needs more rows ({n}) than output dimensions ({out_dim})"
        )));
    }
    let mean = features.column_means();
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for r in features.iter_rows() {
        for i in 0..d {
            let a = r[i] - mean[i];
            for j in i..d {
                cov[(i, j)] += a * (r[j] - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = cov[(i, j)] / (n - 1) as f64;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let total: f64 = eig.eigenvalues.iter().map(|v| v.max(0.0)).sum();

    let mut components = Matrix::zeros(out_dim, d);
    let mut ratios = Vec::with_capacity(out_dim);
    for (k, &idx) in order.iter().take(out_dim).enumerate() {
        let col = eig.eigenvectors.column(idx);
        let pivot = (0..d)
            .max_by(|&a, &b| col[a].abs().total_cmp(&col[b].abs()).then(b.cmp(&a)))
            .unwrap_or(0);
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..d {
            components.set(k, j, sign * col[j]);
        }
        let lambda = eig.eigenvalues[idx].max(0.0);
        ratios.push(if total > 0.0 { lambda / total } else { 0.0 });
    }
    Ok(PcaModel {
        mean,
        components,
        explained_variance_ratio: ratios,
        out_dim,
    })
}

/// Project rows: `(x - mean) · componentsᵀ`.
pub fn pca_transform(model: &PcaModel, features: &Matrix) -> Result<Matrix> {
    if features.cols() != model.in_dim() {
        return Err(Error::contract(format!(
            "PCA model expects {} features, got {}",
            model.in_dim(),
            features.cols()
        )));
    }
    let mut out = Matrix::zeros(features.rows(), model.out_dim);
    for (i, r) in features.iter_rows().enumerate() {
        for k in 0..model.out_dim {
            let c = model.components.row(k);
            let v = r
                .iter()
                .zip(&model.mean)
                .zip(c)
                .map(|((x, m), w)| (x - m) * w)
                .sum();
            out.set(i, k, v);
        }
    }
    Ok(out)
}

/// Map projected rows back to feature space: `z · components + mean`.
pub fn pca_inverse(model: &PcaModel, projected: &Matrix) -> Result<Matrix> {
    if projected.cols() != model.out_dim {
        return Err(Error::contract("projected dimension does not match model"));
    }
    let d = model.in_dim();
    let mut out = Matrix::zeros(projected.rows(), d);
    for (i, z) in projected.iter_rows().enumerate() {
        for j in 0..d {
            let v: f64 = (0..model.out_dim)
                .map(|k| z[k] * model.components.get(k, j))
                .sum();
            out.set(i, j, v + model.mean[j]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random(n: usize, d: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..n * d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        Matrix::from_vec(n, d, data).unwrap()
    }

    fn assert_orthonormal(m: &PcaModel) {
        for a in 0..m.out_dim {
            for b in 0..m.out_dim {
                let dot: f64 = m
                    .components
                    .row(a)
                    .iter()
                    .zip(m.components.row(b))
                    .map(|(x, y)| x * y)
                    .sum();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-9, "({a},{b}) = {dot}");
            }
        }
        let r = &m.explained_variance_ratio;
        assert!(r.windows(2).all(|w| w[0] >= w[1]));
        assert!(r.iter().sum::<f64>() <= 1.0 + 1e-9);
    }

    #[test]
    fn line_in_plane() {
        let rows: Vec<[f64; 2]> = (0..20).map(|i| [i as f64, 2.0 * i as f64 + 1.0]).collect();
        let m = pca_fit(&Matrix::from_rows(&rows).unwrap(), 1).unwrap();
        let c = m.components.row(0);
        let norm = 5f64.sqrt();
        assert!((c[0] - 1.0 / norm).abs() < 1e-9 && (c[1] - 2.0 / norm).abs() < 1e-9);
        assert!((m.explained_variance_ratio[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn isotropic_data_spreads_evenly() {
        // ±1 on each axis separately: exactly isotropic covariance
        let d = 4;
        let mut rows = Vec::new();
        for i in 0..d {
            for s in [-1.0, 1.0] {
                let mut r = vec![0.0; d];
                r[i] = s;
                rows.push(r);
            }
        }
        let m = pca_fit(&Matrix::from_rows(&rows).unwrap(), d).unwrap();
        for r in &m.explained_variance_ratio {
            assert!((r - 0.25).abs() < 1e-9);
        }
        assert_orthonormal(&m);
    }

    #[test]
    fn full_rank_reconstruction() {
        let x = random(200, 10, 1);
        let m = pca_fit(&x, 10).unwrap();
        assert_orthonormal(&m);
        let back = pca_inverse(&m, &pca_transform(&m, &x).unwrap()).unwrap();
        let err = x
            .as_slice()
            .iter()
            .zip(back.as_slice())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn mean_maps_to_origin() {
        let x = random(50, 6, 2);
        let m = pca_fit(&x, 3).unwrap();
        let z = pca_transform(&m, &Matrix::from_rows(&[m.mean.clone()]).unwrap()).unwrap();
        assert!(z.as_slice().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn full_dimension_is_isometry() {
        let x = random(30, 5, 3);
        let m = pca_fit(&x, 5).unwrap();
        let z = pca_transform(&m, &x).unwrap();
        let dist = |a: &[f64], b: &[f64]| {
            a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
        };
        for i in 0..30 {
            for j in 0..30 {
                let d0 = dist(x.row(i), x.row(j));
                let d1 = dist(z.row(i), z.row(j));
                assert!((d0 - d1).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn residual_energy_matches_discarded_ratios() {
        let x = random(400, 8, 4);
        let k = 3;
        let m = pca_fit(&x, k).unwrap();
        let back = pca_inverse(&m, &pca_transform(&m, &x).unwrap()).unwrap();
        let total: f64 = x
            .iter_rows()
            .map(|r| r.iter().zip(&m.mean).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
            .sum();
        let resid: f64 = x
            .as_slice()
            .iter()
            .zip(back.as_slice())
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        let kept: f64 = m.explained_variance_ratio.iter().sum();
        assert!((resid / total - (1.0 - kept)).abs() < 1e-9);
    }

    #[test]
    fn errors() {
        let x = random(10, 3, 5);
        assert!(pca_fit(&x, 4).is_err());
        assert!(pca_fit(&x, 0).is_err());
        let m = pca_fit(&x, 2).unwrap();
        assert!(pca_transform(&m, &random(2, 4, 6)).is_err());
    }

    #[test]
    fn sign_convention() {
        let x = random(100, 6, 7);
        let m = pca_fit(&x, 6).unwrap();
        for k in 0..6 {
            let r = m.components.row(k);
            let big = r.iter().copied().fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
            assert!(big > 0.0);
        }
    }
}
