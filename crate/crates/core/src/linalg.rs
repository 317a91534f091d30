//! Symmetric dense linear algebra: cyclic Jacobi eigendecomposition and
//! Cholesky inversion. Everything here is deterministic — fixed sweep and
//! reduction orders, no threading.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Relative tolerance for the symmetry precondition check.
const SYMMETRY_RTOL: f64 = 1e-9;
/// Convergence threshold: off-diagonal Frobenius norm below this multiple of
/// the full Frobenius norm of the input.
const JACOBI_CONVERGENCE: f64 = 1e-12;
/// Hard cap on cyclic sweeps.
const JACOBI_MAX_SWEEPS: usize = 100;

fn check_symmetric(s: &Matrix) -> Result<()> {
    let n = s.rows();
    if s.cols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: s.cols() });
    }
    let scale = s.max_abs().max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in (i + 1)..n {
            let delta = (s[(i, j)] - s[(j, i)]).abs();
            if delta > SYMMETRY_RTOL * scale {
                return Err(Error::NotSymmetric { i, j, delta });
            }
        }
    }
    Ok(())
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            sum += 2.0 * a[(i, j)] * a[(i, j)];
        }
    }
    sum.sqrt()
}

fn frobenius_norm(a: &Matrix) -> f64 {
    a.data().iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvalues sorted in
/// non-increasing order (equal values keep their pre-sort order) and the
/// i-th *row* of the returned matrix holding the eigenvector for
/// `eigenvalues[i]`. Eigenvectors are orthonormal.
pub fn jacobi_eigendecomposition(s: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    check_symmetric(s)?;
    let n = s.rows();
    let mut a = s.clone();
    // Force exact symmetry so rotations stay consistent.
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    let mut v = Matrix::identity(n);
    let norm = frobenius_norm(&a);
    let threshold = JACOBI_CONVERGENCE * norm;

    let mut converged = norm == 0.0 || n == 1;
    if !converged {
        for _sweep in 0..JACOBI_MAX_SWEEPS {
            if off_diagonal_norm(&a) <= threshold {
                converged = true;
                break;
            }
            for p in 0..n - 1 {
                for q in (p + 1)..n {
                    rotate(&mut a, &mut v, p, q);
                }
            }
        }
        if !converged && off_diagonal_norm(&a) <= threshold {
            converged = true;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            sweeps: JACOBI_MAX_SWEEPS,
            residual: off_diagonal_norm(&a),
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort: ties keep the original column order.
    order.sort_by(|&i, &j| a[(j, j)].partial_cmp(&a[(i, i)]).unwrap().then(i.cmp(&j)));

    let mut eigenvalues = Vec::with_capacity(n);
    let mut vectors = Matrix::zeros(n, n);
    for (rank, &col) in order.iter().enumerate() {
        eigenvalues.push(a[(col, col)]);
        for r in 0..n {
            vectors[(rank, r)] = v[(r, col)];
        }
    }
    Ok((eigenvalues, vectors))
}

/// One Jacobi rotation annihilating `a[p][q]`, accumulated into `v`.
fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    if apq == 0.0 {
        return;
    }
    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
    let t = if theta >= 0.0 {
        1.0 / (theta + (theta * theta + 1.0).sqrt())
    } else {
        -1.0 / (-theta + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let tau = s / (1.0 + c);

    let n = a.rows();
    let app = a[(p, p)];
    let aqq = a[(q, q)];
    a[(p, p)] = app - t * apq;
    a[(q, q)] = aqq + t * apq;
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for r in 0..n {
        if r != p && r != q {
            let arp = a[(r, p)];
            let arq = a[(r, q)];
            let new_rp = arp - s * (arq + tau * arp);
            let new_rq = arq + s * (arp - tau * arq);
            a[(r, p)] = new_rp;
            a[(p, r)] = new_rp;
            a[(r, q)] = new_rq;
            a[(q, r)] = new_rq;
        }
    }
    for r in 0..n {
        let vrp = v[(r, p)];
        let vrq = v[(r, q)];
        v[(r, p)] = vrp - s * (vrq + tau * vrp);
        v[(r, q)] = vrq + s * (vrp - tau * vrq);
    }
}

/// Cholesky factor L (lower triangular, `a = L L^T`). Fails with the index
/// of the first non-positive pivot.
pub fn cholesky(a: &Matrix) -> std::result::Result<Matrix, usize> {
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[(i, j)];
            for k in 0..j {
                sum -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(i);
                }
                l[(i, i)] = sum.sqrt();
            } else {
                l[(i, j)] = sum / l[(j, j)];
            }
        }
    }
    Ok(l)
}

/// Inverse of a symmetric positive definite matrix via Cholesky.
pub fn spd_inverse(a: &Matrix) -> std::result::Result<Matrix, usize> {
    let l = cholesky(a)?;
    let n = a.rows();
    let mut inv = Matrix::zeros(n, n);
    let mut col = vec![0.0; n];
    for j in 0..n {
        // Solve L y = e_j, then L^T x = y.
        for i in 0..n {
            let mut sum = if i == j { 1.0 } else { 0.0 };
            for k in 0..i {
                sum -= l[(i, k)] * col[k];
            }
            col[i] = sum / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut sum = col[i];
            for k in (i + 1)..n {
                sum -= l[(k, i)] * col[k];
            }
            col[i] = sum / l[(i, i)];
            inv[(i, j)] = col[i];
        }
    }
    // Symmetrize: the two triangles differ only by round-off.
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (inv[(i, j)] + inv[(j, i)]);
            inv[(i, j)] = v;
            inv[(j, i)] = v;
        }
    }
    Ok(inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = rng.random_range(-1.0..1.0);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    #[test]
    fn identity_eigenvalues_are_ones() {
        let (vals, _) = jacobi_eigendecomposition(&Matrix::identity(3)).unwrap();
        assert_eq!(vals, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn analytic_two_by_two() {
        let s = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let (vals, vecs) = jacobi_eigendecomposition(&s).unwrap();
        assert!((vals[0] - 3.0).abs() < 1e-12);
        assert!((vals[1] - 1.0).abs() < 1e-12);
        let r = 0.5_f64.sqrt();
        // Up to sign: (1,1)/sqrt(2) for 3, (1,-1)/sqrt(2) for 1.
        let v0 = vecs.row(0);
        let v1 = vecs.row(1);
        assert!((v0[0].abs() - r).abs() < 1e-12 && (v0[1].abs() - r).abs() < 1e-12);
        assert!(v0[0] * v0[1] > 0.0);
        assert!(v1[0] * v1[1] < 0.0);
    }

    #[test]
    fn reconstruction_matches_input() {
        let s = random_symmetric(8, 42);
        let (vals, vecs) = jacobi_eigendecomposition(&s).unwrap();
        // S = V^T diag(vals) V with eigenvectors as rows of `vecs`.
        let n = 8;
        let mut recon = Matrix::zeros(n, n);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    recon[(i, j)] += vals[k] * vecs[(k, i)] * vecs[(k, j)];
                }
            }
        }
        let tol = 1e-8 * s.max_abs().max(1.0);
        for i in 0..n {
            for j in 0..n {
                assert!((recon[(i, j)] - s[(i, j)]).abs() < tol, "({i},{j})");
            }
        }
    }

    #[test]
    fn eigen_residual_small() {
        for seed in 0..5 {
            let s = random_symmetric(6, seed);
            let (vals, vecs) = jacobi_eigendecomposition(&s).unwrap();
            let norm = s.max_abs();
            for k in 0..6 {
                for i in 0..6 {
                    let mut sv = 0.0;
                    for j in 0..6 {
                        sv += s[(i, j)] * vecs[(k, j)];
                    }
                    assert!((sv - vals[k] * vecs[(k, i)]).abs() < 1e-8 * norm);
                }
            }
        }
    }

    #[test]
    fn eigenvalues_sorted_descending() {
        let s = random_symmetric(7, 3);
        let (vals, _) = jacobi_eigendecomposition(&s).unwrap();
        for w in vals.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn rejects_asymmetric_input() {
        let s = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]);
        assert!(matches!(jacobi_eigendecomposition(&s), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn zero_matrix_is_fine() {
        let (vals, vecs) = jacobi_eigendecomposition(&Matrix::zeros(4, 4)).unwrap();
        assert_eq!(vals, vec![0.0; 4]);
        assert_eq!(vecs, Matrix::identity(4));
    }

    #[test]
    fn spd_inverse_roundtrip() {
        let mut s = random_symmetric(5, 9);
        for i in 0..5 {
            s[(i, i)] += 5.0; // make it positive definite
        }
        let inv = spd_inverse(&s).unwrap();
        let prod = s.matmul(&inv);
        for i in 0..5 {
            for j in 0..5 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((prod[(i, j)] - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let s = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(cholesky(&s).is_err());
    }
}
