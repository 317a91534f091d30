//! Principal component analysis on the sample covariance matrix — the
//! global variance structure half of joint characterization.
//!
//! The eigenproblem is solved with the cyclic Jacobi sweeps from
//! [`crate::linalg`]; everything is deterministic, including the sign of
//! each component (the entry of largest magnitude is made positive).

use crate::error::{Error, Result};
use crate::linalg::jacobi_eigendecomposition;
use crate::matrix::{DataMatrix, Matrix};

/// A fitted PCA basis.
///
/// `components` holds one row per retained component (row-orthonormal).
/// `eigenvalues` are the matching covariance eigenvalues in non-increasing
/// order, and `explained_variance_ratio[i]` is `eigenvalue[i]` divided by
/// the sum over *all* D eigenvalues. When the model was fitted with
/// standardization, `scale` holds the per-column divisor.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    pub components: Matrix,
    pub eigenvalues: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
    pub scale: Option<Vec<f64>>,
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.rows()
    }

    pub fn n_features(&self) -> usize {
        self.components.cols()
    }

    /// Ratios of variance captured per component, in [0,1], non-increasing.
    pub fn explained_variance_ratio(&self) -> &[f64] {
        &self.explained_variance_ratio
    }
}

/// Subtract the column mean from every column. Returns the centered matrix
/// (same provenance) and the mean vector.
pub fn column_mean_center(x: &DataMatrix) -> Result<(DataMatrix, Vec<f64>)> {
    let n = x.n_rows();
    if n < 2 {
        return Err(Error::EmptyMatrix(n));
    }
    let d = x.n_cols();
    let mut mean = vec![0.0; d];
    for i in 0..n {
        let row = x.row(i);
        for j in 0..d {
            mean[j] += row[j];
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let mut centered = x.values().clone();
    for i in 0..n {
        let row = centered.row_mut(i);
        for j in 0..d {
            row[j] -= mean[j];
        }
    }
    Ok((DataMatrix::new(centered, x.row_index().to_vec())?, mean))
}

/// Sample covariance of a mean-centered matrix, divisor N-1. Exactly
/// symmetric by construction, non-negative diagonal.
pub fn covariance_matrix(xc: &DataMatrix) -> Matrix {
    let n = xc.n_rows();
    let d = xc.n_cols();
    let mut s = Matrix::zeros(d, d);
    for i in 0..n {
        let row = xc.row(i);
        for a in 0..d {
            let ra = row[a];
            if ra == 0.0 {
                continue;
            }
            for b in a..d {
                s[(a, b)] += ra * row[b];
            }
        }
    }
    let denom = (n - 1) as f64;
    for a in 0..d {
        for b in a..d {
            let v = s[(a, b)] / denom;
            s[(a, b)] = v;
            s[(b, a)] = v;
        }
    }
    s
}

/// Fit a PCA model retaining `k` components.
///
/// Covariance of mean-centered data by default; `standardize` divides each
/// column by its standard deviation first (columns with zero variance are
/// left unscaled). Eigenvalues that round off slightly negative are clamped
/// to zero before the variance ratios are formed.
pub fn fit_pca(x: &DataMatrix, k: usize, standardize: bool) -> Result<PcaModel> {
    let d = x.n_cols();
    if k < 1 || k > d {
        return Err(Error::InvalidConfig(format!(
            "k must be in 1..={d}, got {k}"
        )));
    }
    let (mut centered, mean) = column_mean_center(x)?;
    let scale = if standardize {
        let cov = covariance_matrix(&centered);
        let s: Vec<f64> = (0..d)
            .map(|j| {
                let sd = cov[(j, j)].sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        let mut values = centered.values().clone();
        for i in 0..values.rows() {
            let row = values.row_mut(i);
            for j in 0..d {
                row[j] /= s[j];
            }
        }
        centered = DataMatrix::new(values, x.row_index().to_vec())?;
        Some(s)
    } else {
        None
    };

    let cov = covariance_matrix(&centered);
    let (mut eigenvalues, mut vectors) = jacobi_eigendecomposition(&cov)?;
    for v in eigenvalues.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let total: f64 = eigenvalues.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateData);
    }

    // Deterministic orientation: largest-magnitude entry positive.
    for r in 0..vectors.rows() {
        let row = vectors.row_mut(r);
        let mut arg = 0;
        for (j, v) in row.iter().enumerate() {
            if v.abs() > row[arg].abs() {
                arg = j;
            }
        }
        if row[arg] < 0.0 {
            for v in row.iter_mut() {
                *v = -*v;
            }
        }
    }

    let ratios: Vec<f64> = eigenvalues.iter().take(k).map(|v| v / total).collect();
    let mut components = Matrix::zeros(k, d);
    for r in 0..k {
        components.row_mut(r).copy_from_slice(vectors.row(r));
    }
    Ok(PcaModel {
        mean,
        components,
        eigenvalues: eigenvalues[..k].to_vec(),
        explained_variance_ratio: ratios,
        scale,
    })
}

/// Project samples onto the model: `score_ij = (x_i - mean) . component_j`
/// (after the model's column scaling, when standardized).
pub fn project(model: &PcaModel, x: &DataMatrix) -> Result<Matrix> {
    let d = model.n_features();
    if x.n_cols() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x.n_cols() });
    }
    let n = x.n_rows();
    let k = model.n_components();
    let mut scores = Matrix::zeros(n, k);
    let mut buf = vec![0.0; d];
    for i in 0..n {
        let row = x.row(i);
        for j in 0..d {
            buf[j] = row[j] - model.mean[j];
        }
        if let Some(scale) = &model.scale {
            for j in 0..d {
                buf[j] /= scale[j];
            }
        }
        for c in 0..k {
            let comp = model.components.row(c);
            let mut dot = 0.0;
            for j in 0..d {
                dot += buf[j] * comp[j];
            }
            scores[(i, c)] = dot;
        }
    }
    Ok(scores)
}

/// Invert [`project`]: `mean + scores . components` (undoing any scaling).
/// Exact when the model retains all D components.
pub fn reconstruct(model: &PcaModel, scores: &Matrix) -> Result<Matrix> {
    let k = model.n_components();
    if scores.cols() != k {
        return Err(Error::DimensionMismatch { expected: k, got: scores.cols() });
    }
    let d = model.n_features();
    let n = scores.rows();
    let mut out = Matrix::zeros(n, d);
    for i in 0..n {
        let srow = scores.row(i);
        let orow = out.row_mut(i);
        for c in 0..k {
            let comp = model.components.row(c);
            let s = srow[c];
            for j in 0..d {
                orow[j] += s * comp[j];
            }
        }
        for j in 0..d {
            if let Some(scale) = &model.scale {
                orow[j] *= scale[j];
            }
            orow[j] += model.mean[j];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dm(rows: &[Vec<f64>]) -> DataMatrix {
        DataMatrix::with_default_index(Matrix::from_rows(rows)).unwrap()
    }

    #[test]
    fn centering_two_points() {
        let (c, mean) = column_mean_center(&dm(&[vec![1.0], vec![3.0]])).unwrap();
        assert_eq!(mean, vec![2.0]);
        assert_eq!(c.row(0), &[-1.0]);
        assert_eq!(c.row(1), &[1.0]);
    }

    #[test]
    fn centering_constant_column() {
        let (c, mean) = column_mean_center(&dm(&[vec![5.0], vec![5.0], vec![5.0]])).unwrap();
        assert_eq!(mean, vec![5.0]);
        for i in 0..3 {
            assert_eq!(c.row(i), &[0.0]);
        }
    }

    #[test]
    fn centering_column_sums_vanish() {
        let mut rows = Vec::new();
        let mut v = 0.37f64;
        for _ in 0..10 {
            let mut r = Vec::new();
            for _ in 0..4 {
                v = (v * 997.0 + 0.1).fract();
                r.push(v * 100.0);
            }
            rows.push(r);
        }
        let x = dm(&rows);
        let max = x.values().max_abs();
        let (c, _) = column_mean_center(&x).unwrap();
        for j in 0..4 {
            let sum: f64 = (0..10).map(|i| c.row(i)[j]).sum();
            assert!(sum.abs() < 1e-9 * 10.0 * max);
        }
    }

    #[test]
    fn covariance_two_point() {
        let s = covariance_matrix(&dm(&[vec![-1.0], vec![1.0]]));
        assert_eq!(s[(0, 0)], 2.0);
    }

    #[test]
    fn covariance_duplicated_feature() {
        let xc = dm(&[vec![-1.0, -1.0], vec![0.0, 0.0], vec![1.0, 1.0]]);
        let s = covariance_matrix(&xc);
        assert_eq!(s[(0, 0)], s[(0, 1)]);
        assert_eq!(s[(0, 0)], s[(1, 1)]);
        assert_eq!(s[(0, 1)], s[(1, 0)]);
    }

    #[test]
    fn covariance_matches_double_loop() {
        let mut rows = Vec::new();
        let mut v = 0.11f64;
        for _ in 0..20 {
            let mut r = Vec::new();
            for _ in 0..3 {
                v = (v * 913.0 + 0.17).fract();
                r.push(v * 2.0 - 1.0);
            }
            rows.push(r);
        }
        let x = dm(&rows);
        let (c, _) = column_mean_center(&x).unwrap();
        let s = covariance_matrix(&c);
        // Naive O(N D^2) oracle.
        for a in 0..3 {
            for b in 0..3 {
                let mut acc = 0.0;
                for i in 0..20 {
                    acc += c.row(i)[a] * c.row(i)[b];
                }
                acc /= 19.0;
                assert!((s[(a, b)] - acc).abs() < 1e-10);
            }
        }
        for a in 0..3 {
            assert!(s[(a, a)] >= 0.0);
            for b in 0..3 {
                assert!((s[(a, b)] - s[(b, a)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rank_one_line_has_single_eigenvalue() {
        let rows: Vec<Vec<f64>> =
            (0..10).map(|t| vec![t as f64, 2.0 * t as f64, 3.0 * t as f64]).collect();
        let model = fit_pca(&dm(&rows), 3, false).unwrap();
        assert!(model.explained_variance_ratio[0] > 1.0 - 1e-12);
        assert!(model.eigenvalues[1].abs() < 1e-9 * model.eigenvalues[0]);
        assert!(model.eigenvalues[2].abs() < 1e-9 * model.eigenvalues[0]);
    }

    #[test]
    fn degenerate_data_rejected() {
        let x = dm(&[vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0, 2.0]]);
        assert!(matches!(fit_pca(&x, 2, false), Err(Error::DegenerateData)));
    }

    #[test]
    fn project_mean_is_zero_score() {
        let x = dm(&[vec![1.0, 0.0], vec![3.0, 4.0], vec![5.0, 2.0]]);
        let model = fit_pca(&x, 2, false).unwrap();
        let probe = DataMatrix::new(
            Matrix::from_rows(&[model.mean.clone(), vec![1.0, 0.0]]),
            vec![(0, 0), (1, 0)],
        )
        .unwrap();
        let scores = project(&model, &probe).unwrap();
        assert!(scores.row(0).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn full_rank_roundtrip() {
        let rows = vec![
            vec![0.3, 1.2, -0.5],
            vec![1.7, 0.4, 0.9],
            vec![-0.8, 2.2, 1.1],
            vec![0.0, -1.0, 0.4],
            vec![2.1, 0.7, -1.3],
        ];
        let x = dm(&rows);
        let model = fit_pca(&x, 3, false).unwrap();
        let scores = project(&model, &x).unwrap();
        let recon = reconstruct(&model, &scores).unwrap();
        let scale = x.values().max_abs();
        for i in 0..5 {
            for j in 0..3 {
                assert!((recon[(i, j)] - x.row(i)[j]).abs() < 1e-8 * scale);
            }
        }
    }

    #[test]
    fn orthonormal_components() {
        let rows = vec![
            vec![0.3, 1.2, -0.5, 2.0],
            vec![1.7, 0.4, 0.9, -1.0],
            vec![-0.8, 2.2, 1.1, 0.3],
            vec![0.0, -1.0, 0.4, 0.8],
            vec![2.1, 0.7, -1.3, 0.1],
            vec![-0.4, 0.1, 0.6, -0.9],
        ];
        let model = fit_pca(&dm(&rows), 4, false).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let dot: f64 = model
                    .components
                    .row(a)
                    .iter()
                    .zip(model.components.row(b))
                    .map(|(x, y)| x * y)
                    .sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn variance_conservation() {
        let rows = vec![
            vec![0.3, 1.2, -0.5],
            vec![1.7, 0.4, 0.9],
            vec![-0.8, 2.2, 1.1],
            vec![0.0, -1.0, 0.4],
        ];
        let x = dm(&rows);
        let (c, _) = column_mean_center(&x).unwrap();
        let cov = covariance_matrix(&c);
        let trace: f64 = (0..3).map(|i| cov[(i, i)]).sum();
        let model = fit_pca(&x, 3, false).unwrap();
        let sum: f64 = model.eigenvalues.iter().sum();
        assert!((sum - trace).abs() < 1e-9 * trace.abs());
    }

    #[test]
    fn deterministic_fit_bitwise() {
        let rows = vec![
            vec![0.31, 1.21, -0.53],
            vec![1.72, 0.44, 0.91],
            vec![-0.85, 2.26, 1.17],
            vec![0.04, -1.08, 0.42],
        ];
        let a = fit_pca(&dm(&rows), 3, false).unwrap();
        let b = fit_pca(&dm(&rows), 3, false).unwrap();
        assert_eq!(a.components.data().len(), b.components.data().len());
        for (x, y) in a.components.data().iter().zip(b.components.data()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn standardized_fit_projects_consistently() {
        let rows = vec![
            vec![1.0, 100.0],
            vec![2.0, 300.0],
            vec![3.0, 150.0],
            vec![4.0, 400.0],
        ];
        let x = dm(&rows);
        let model = fit_pca(&x, 2, true).unwrap();
        assert!(model.scale.is_some());
        let scores = project(&model, &x).unwrap();
        let recon = reconstruct(&model, &scores).unwrap();
        for i in 0..4 {
            for j in 0..2 {
                assert!((recon[(i, j)] - x.row(i)[j]).abs() < 1e-8 * 400.0);
            }
        }
    }

    #[test]
    fn dimension_mismatch_on_project() {
        let x = dm(&[vec![1.0, 0.0], vec![3.0, 4.0], vec![5.0, 2.0]]);
        let model = fit_pca(&x, 2, false).unwrap();
        let other = dm(&[vec![1.0], vec![2.0]]);
        assert!(matches!(project(&model, &other), Err(Error::DimensionMismatch { .. })));
    }
}
