//! Input-space affinities: pairwise distances, per-point bandwidth
//! calibration against a perplexity target, and symmetrization into the
//! joint distribution P.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{DataMatrix, Matrix};

/// Probabilities below this are floored before logs and ratios.
pub(crate) const P_FLOOR: f64 = 1e-12;

/// Sigma search bounds; beta = 1/(2 sigma^2).
const SIGMA_MIN: f64 = 1e-20;
const SIGMA_MAX: f64 = 1e20;
/// Bisection step cap and entropy tolerance (bits).
const MAX_BISECTIONS: usize = 50;
const ENTROPY_TOL_BITS: f64 = 1e-5;

/// Symmetrized joint affinities: symmetric, non-negative, zero diagonal,
/// entries summing to 1.
#[derive(Debug, Clone)]
pub struct AffinityMatrix {
    p: Matrix,
}

impl AffinityMatrix {
    pub fn matrix(&self) -> &Matrix {
        &self.p
    }

    pub fn n(&self) -> usize {
        self.p.rows()
    }
}

/// Full matrix of squared Euclidean distances. Symmetric with an exactly
/// zero diagonal; rows are computed independently so the result is
/// deterministic under any thread count.
pub fn pairwise_squared_distances(x: &DataMatrix) -> Matrix {
    let n = x.n_rows();
    let d = x.n_cols();
    let mut out = Matrix::zeros(n, n);
    out.data_mut()
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(i, row)| {
            let xi = x.row(i);
            for j in 0..n {
                if i == j {
                    row[j] = 0.0;
                    continue;
                }
                let xj = x.row(j);
                let mut acc = 0.0;
                for a in 0..d {
                    let diff = xi[a] - xj[a];
                    acc += diff * diff;
                }
                row[j] = acc;
            }
        });
    out
}

/// Gaussian conditional affinities `p_{j|i}` with per-row bandwidths found
/// by binary search so each row's Shannon entropy hits
/// `log2(perplexity)` bits. Rows whose entropy target is unreachable (for
/// example mutually equidistant points) clamp at the search bounds and
/// keep the resulting distribution.
///
/// Returns the row-normalized conditional matrix (zero diagonal) and the
/// per-row sigma values.
pub fn conditional_affinities(d2: &Matrix, perplexity: f64) -> Result<(Matrix, Vec<f64>)> {
    let n = d2.rows();
    if !(perplexity > 0.0) {
        return Err(Error::InvalidConfig(format!("perplexity must be positive, got {perplexity}")));
    }
    if perplexity >= n as f64 {
        return Err(Error::InvalidConfig(format!(
            "perplexity {perplexity} must be smaller than the sample count {n}"
        )));
    }
    for i in 0..n {
        let row = d2.row(i);
        if (0..n).all(|j| j == i || row[j] == 0.0) {
            return Err(Error::DegenerateRow(i));
        }
    }

    let target_bits = perplexity.log2();
    let mut p = Matrix::zeros(n, n);
    let mut sigmas = vec![0.0; n];
    let results: Vec<(Vec<f64>, f64)> = (0..n)
        .into_par_iter()
        .map(|i| calibrate_row(d2.row(i), i, target_bits))
        .collect();
    for (i, (row, sigma)) in results.into_iter().enumerate() {
        p.row_mut(i).copy_from_slice(&row);
        sigmas[i] = sigma;
    }
    Ok((p, sigmas))
}

/// Binary search for one row's beta. Returns the normalized row (zero at
/// position `i`) and the sigma found.
fn calibrate_row(d2_row: &[f64], i: usize, target_bits: f64) -> (Vec<f64>, f64) {
    let compact: Vec<f64> = d2_row
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &v)| v)
        .collect();
    let (probs, sigma) = calibrate_compact(&compact, target_bits);
    let mut row = vec![0.0; d2_row.len()];
    let mut k = 0;
    for (j, slot) in row.iter_mut().enumerate() {
        if j != i {
            *slot = probs[k];
            k += 1;
        }
    }
    (row, sigma)
}

/// As [`calibrate_row`] but over a compact list of neighbor distances
/// (the Barnes-Hut kNN path).
pub(crate) fn calibrate_sparse_row(d2: &[f64], target_bits: f64) -> Vec<f64> {
    calibrate_compact(d2, target_bits).0
}

/// Bisection on beta = 1/(2 sigma^2) until the distribution's entropy is
/// within tolerance of the target, or the sigma bounds clamp.
fn calibrate_compact(d2: &[f64], target_bits: f64) -> (Vec<f64>, f64) {
    let beta_min_bound = 0.5 / (SIGMA_MAX * SIGMA_MAX);
    let beta_max_bound = 0.5 / (SIGMA_MIN * SIGMA_MIN);
    let mut beta = 1.0;
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;

    // Shift by the closest neighbor so the largest weight is exp(0).
    let shift = d2.iter().copied().fold(f64::INFINITY, f64::min);

    let mut probs = vec![0.0; d2.len()];
    for _ in 0..MAX_BISECTIONS {
        let entropy = entropy_bits(d2, beta, shift, &mut probs);
        let diff = entropy - target_bits;
        if diff.abs() <= ENTROPY_TOL_BITS {
            break;
        }
        if diff > 0.0 {
            // Too spread out: sharpen.
            lo = beta;
            beta = if hi.is_finite() { 0.5 * (beta + hi) } else { beta * 2.0 };
        } else {
            hi = beta;
            beta = if lo.is_finite() { 0.5 * (beta + lo) } else { beta * 0.5 };
        }
        beta = beta.clamp(beta_min_bound, beta_max_bound);
    }
    // Final evaluation at the accepted beta.
    entropy_bits(d2, beta, shift, &mut probs);
    (probs, (0.5 / beta).sqrt())
}

/// Fill `probs` with the conditional distribution at the given beta and
/// return its Shannon entropy in bits.
fn entropy_bits(d2: &[f64], beta: f64, shift: f64, probs: &mut [f64]) -> f64 {
    let mut sum = 0.0;
    let mut weighted = 0.0;
    for (slot, &d) in probs.iter_mut().zip(d2) {
        let w = (-beta * (d - shift)).exp();
        *slot = w;
        sum += w;
        weighted += w * (d - shift);
    }
    for v in probs.iter_mut() {
        *v /= sum;
    }
    // H = ln(sum) + beta * E[d - shift], in nats; entropy is shift-invariant.
    (sum.ln() + beta * weighted / sum) / std::f64::consts::LN_2
}

/// Joint affinities `p_ij = (p_{j|i} + p_{i|j}) / 2N`, floored at 1e-12
/// off the diagonal and renormalized to total mass 1.
pub fn symmetrize_affinities(p_conditional: &Matrix) -> AffinityMatrix {
    let n = p_conditional.rows();
    let mut p = Matrix::zeros(n, n);
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let v = (p_conditional[(i, j)] + p_conditional[(j, i)]).max(P_FLOOR);
            p[(i, j)] = v;
            total += v;
        }
    }
    for v in p.data_mut().iter_mut() {
        *v /= total;
    }
    AffinityMatrix { p }
}

/// Student-t kernel affinities of an embedding: `q_ij` proportional to
/// `(1 + ||y_i - y_j||^2)^-1`. Returns the normalized matrix and the
/// normalizer Z.
pub fn student_t_affinities(y: &Matrix) -> (Matrix, f64) {
    let n = y.rows();
    let mut q = Matrix::zeros(n, n);
    let mut z = 0.0;
    for i in 0..n {
        let yi = y.row(i);
        for j in 0..n {
            if i == j {
                continue;
            }
            let yj = y.row(j);
            let dx = yi[0] - yj[0];
            let dy = yi[1] - yj[1];
            let w = 1.0 / (1.0 + dx * dx + dy * dy);
            q[(i, j)] = w;
            z += w;
        }
    }
    for v in q.data_mut().iter_mut() {
        *v /= z;
    }
    (q, z)
}

/// Sparse symmetric affinities in CSR form, both `(i,j)` and `(j,i)`
/// stored. Used by the Barnes-Hut path where P is restricted to nearest
/// neighbors.
#[derive(Debug, Clone)]
pub struct SparseAffinities {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl SparseAffinities {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        (&self.cols[lo..hi], &self.vals[lo..hi])
    }

    pub fn total(&self) -> f64 {
        self.vals.iter().sum()
    }

    /// Densify every entry of a full affinity matrix (tests and the
    /// theta = 0 exactness path).
    pub fn from_dense(p: &AffinityMatrix) -> Self {
        let n = p.n();
        let m = p.matrix();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    cols.push(j as u32);
                    vals.push(m[(i, j)]);
                }
            }
            row_ptr.push(cols.len());
        }
        SparseAffinities { n, row_ptr, cols, vals }
    }

    /// Symmetrize kNN conditionals: for every directed neighbor pair,
    /// `p_ij = (p_{j|i} + p_{i|j}) / 2N` over the union pattern, floored
    /// and renormalized like the dense path.
    pub fn from_knn_conditionals(n: usize, neighbors: &[Vec<(u32, f64)>]) -> Self {
        use std::collections::BTreeMap;
        let mut acc: BTreeMap<(u32, u32), f64> = BTreeMap::new();
        let denom = 2.0 * n as f64;
        for (i, nbrs) in neighbors.iter().enumerate() {
            for &(j, v) in nbrs {
                let half = v / denom;
                *acc.entry((i as u32, j)).or_insert(0.0) += half;
                *acc.entry((j, i as u32)).or_insert(0.0) += half;
            }
        }
        let mut total = 0.0;
        for v in acc.values_mut() {
            *v = v.max(P_FLOOR);
            total += *v;
        }
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(acc.len());
        let mut vals = Vec::with_capacity(acc.len());
        let mut current = 0usize;
        for (&(i, j), &v) in &acc {
            while current < i as usize {
                current += 1;
                row_ptr[current] = cols.len();
            }
            cols.push(j);
            vals.push(v / total);
        }
        while current < n {
            current += 1;
            row_ptr[current] = cols.len();
        }
        SparseAffinities { n, row_ptr, cols, vals }
    }
}
