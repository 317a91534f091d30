//! t-SNE from scratch: perplexity-calibrated Gaussian affinities,
//! KL-divergence gradient descent with early exaggeration, momentum and
//! per-coordinate gains, exact and Barnes-Hut gradients.

pub mod affinity;
pub mod gradient;
pub mod quadtree;

use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

pub use affinity::{
    conditional_affinities, pairwise_squared_distances, student_t_affinities,
    symmetrize_affinities, AffinityMatrix, SparseAffinities,
};
pub use gradient::{gradient_bh, gradient_dense, kl_divergence, kl_gradient_exact};

use crate::error::{Error, Result};
use crate::matrix::{DataMatrix, Matrix};

/// Hyperparameters, defaulting to the scikit-learn legacy settings:
/// perplexity 30, early exaggeration 12 for the first 250 iterations,
/// learning rate 200, 1000 iterations, momentum 0.5 switching to 0.8 at
/// iteration 250, Gaussian init with sigma 1e-4.
#[derive(Debug, Clone, PartialEq)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub early_exaggeration: f64,
    pub exaggeration_iters: usize,
    pub learning_rate: f64,
    pub iterations: usize,
    pub momentum_initial: f64,
    pub momentum_final: f64,
    pub momentum_switch_iter: usize,
    pub init_scale: f64,
    /// Barnes-Hut accuracy in [0,1]; 0 forces the exact gradient.
    pub theta: f64,
    /// Exact gradient is used at or below this sample count.
    pub bh_sample_threshold: usize,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            perplexity: 30.0,
            early_exaggeration: 12.0,
            exaggeration_iters: 250,
            learning_rate: 200.0,
            iterations: 1000,
            momentum_initial: 0.5,
            momentum_final: 0.8,
            momentum_switch_iter: 250,
            init_scale: 1e-4,
            theta: 0.5,
            bh_sample_threshold: 5000,
            seed: 0,
        }
    }
}

impl TsneConfig {
    pub fn with_seed(seed: u64) -> Self {
        TsneConfig { seed, ..Default::default() }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.perplexity > 0.0) {
            return Err(Error::InvalidConfig("perplexity must be positive".into()));
        }
        if self.perplexity >= n as f64 {
            return Err(Error::InvalidConfig(format!(
                "perplexity {} must be smaller than the sample count {n}",
                self.perplexity
            )));
        }
        if self.iterations < 1 {
            return Err(Error::InvalidConfig("iterations must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::InvalidConfig(format!("theta must be in [0,1], got {}", self.theta)));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig("learning rate must be positive".into()));
        }
        if !(self.init_scale > 0.0) {
            return Err(Error::InvalidConfig("init scale must be positive".into()));
        }
        if !(self.early_exaggeration >= 1.0) {
            return Err(Error::InvalidConfig("early exaggeration must be >= 1".into()));
        }
        Ok(())
    }
}

/// A finished 2-D embedding, with the KL it achieved, the configuration
/// snapshot that produced it, and the row provenance of its inputs.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub coords: Matrix,
    pub initial_kl: f64,
    pub final_kl: f64,
    pub iterations_run: usize,
    pub config: TsneConfig,
    pub row_index: Vec<(u32, u32)>,
}

enum Affinities {
    Dense(AffinityMatrix),
    Sparse(SparseAffinities),
}

impl Affinities {
    fn kl(&self, y: &Matrix) -> f64 {
        match self {
            Affinities::Dense(p) => gradient::kl_dense(p, y),
            Affinities::Sparse(p) => gradient::kl_sparse(p, y),
        }
    }

    fn gradient(&self, y: &Matrix, exaggeration: f64, theta: f64) -> Matrix {
        match self {
            Affinities::Dense(p) => gradient_dense(p, y, exaggeration),
            Affinities::Sparse(p) => gradient_bh(p, y, exaggeration, theta),
        }
    }
}

/// k nearest neighbors per row (excluding self) with squared distances,
/// sorted by neighbor index. Ties resolve by index for determinism.
fn k_nearest_neighbors(x: &DataMatrix, k: usize) -> Vec<Vec<(u32, f64)>> {
    let n = x.n_rows();
    let d = x.n_cols();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = x.row(i);
            let mut dists: Vec<(f64, u32)> = Vec::with_capacity(n - 1);
            for j in 0..n {
                if j == i {
                    continue;
                }
                let xj = x.row(j);
                let mut acc = 0.0;
                for a in 0..d {
                    let diff = xi[a] - xj[a];
                    acc += diff * diff;
                }
                dists.push((acc, j as u32));
            }
            let k = k.min(dists.len());
            dists.select_nth_unstable_by(k - 1, |a, b| {
                a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1))
            });
            let mut nbrs: Vec<(u32, f64)> = dists[..k].iter().map(|&(d2, j)| (j, d2)).collect();
            nbrs.sort_unstable_by_key(|&(j, _)| j);
            nbrs
        })
        .collect()
}

/// Calibrate conditional affinities over a sparse neighborhood; mirrors
/// the dense binary search but only over each row's neighbor list.
fn sparse_conditionals(neighbors: &[Vec<(u32, f64)>], perplexity: f64) -> Result<Vec<Vec<(u32, f64)>>> {
    let target_bits = perplexity.log2();
    neighbors
        .par_iter()
        .enumerate()
        .map(|(i, nbrs)| {
            if nbrs.iter().all(|&(_, d2)| d2 == 0.0) && nbrs.len() + 1 == neighbors.len() {
                return Err(Error::DegenerateRow(i));
            }
            let d2: Vec<f64> = nbrs.iter().map(|&(_, v)| v).collect();
            let probs = affinity::calibrate_sparse_row(&d2, target_bits);
            Ok(nbrs.iter().zip(probs).map(|(&(j, _), p)| (j, p)).collect())
        })
        .collect()
}

/// Run t-SNE on the samples. N at or below `bh_sample_threshold` (or
/// `theta == 0`) uses the exact dense gradient; larger inputs use
/// Barnes-Hut with P restricted to `3 * perplexity` nearest neighbors.
///
/// Identical seed, config and input produce a bit-identical embedding
/// within one build; different seeds produce different embeddings.
pub fn run_tsne(x: &DataMatrix, config: &TsneConfig) -> Result<Embedding> {
    let n = x.n_rows();
    config.validate(n)?;
    if (n as f64) < 2.0 * config.perplexity {
        log::warn!(
            "t-SNE: sample count {n} is below 2x perplexity {}; results may be unstable",
            config.perplexity
        );
    }

    let use_bh = config.theta > 0.0 && n > config.bh_sample_threshold;
    let affinities = if use_bh {
        let k = ((3.0 * config.perplexity).floor() as usize).clamp(1, n - 1);
        let neighbors = k_nearest_neighbors(x, k);
        let conditionals = sparse_conditionals(&neighbors, config.perplexity)?;
        Affinities::Sparse(SparseAffinities::from_knn_conditionals(n, &conditionals))
    } else {
        let d2 = pairwise_squared_distances(x);
        let (pc, _) = conditional_affinities(&d2, config.perplexity)?;
        drop(d2);
        Affinities::Dense(symmetrize_affinities(&pc))
    };

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed);
    let normal = Normal::new(0.0, config.init_scale)
        .map_err(|e| Error::InvalidConfig(format!("bad init scale: {e}")))?;
    let mut y = Matrix::zeros(n, 2);
    for v in y.data_mut().iter_mut() {
        *v = normal.sample(&mut rng);
    }

    let initial_kl = affinities.kl(&y);

    let mut velocity = Matrix::zeros(n, 2);
    let mut gains = Matrix::from_vec(n, 2, vec![1.0; n * 2]);
    const MIN_GAIN: f64 = 0.01;

    for iter in 0..config.iterations {
        let exaggeration =
            if iter < config.exaggeration_iters { config.early_exaggeration } else { 1.0 };
        let momentum = if iter < config.momentum_switch_iter {
            config.momentum_initial
        } else {
            config.momentum_final
        };
        let grad = affinities.gradient(&y, exaggeration, config.theta);

        let mut mean = [0.0f64; 2];
        for i in 0..n {
            for c in 0..2 {
                let g = grad[(i, c)];
                if !g.is_finite() {
                    return Err(Error::NonFinite { iteration: iter });
                }
                let gain = &mut gains[(i, c)];
                *gain = if g.signum() != velocity[(i, c)].signum() {
                    *gain + 0.2
                } else {
                    *gain * 0.8
                }
                .max(MIN_GAIN);
                velocity[(i, c)] =
                    momentum * velocity[(i, c)] - config.learning_rate * *gain * g;
                y[(i, c)] += velocity[(i, c)];
                mean[c] += y[(i, c)];
            }
        }
        mean[0] /= n as f64;
        mean[1] /= n as f64;
        for i in 0..n {
            y[(i, 0)] -= mean[0];
            y[(i, 1)] -= mean[1];
            if !y[(i, 0)].is_finite() || !y[(i, 1)].is_finite() {
                return Err(Error::NonFinite { iteration: iter });
            }
        }
    }

    let final_kl = affinities.kl(&y);
    Ok(Embedding {
        coords: y,
        initial_kl,
        final_kl,
        iterations_run: config.iterations,
        config: config.clone(),
        row_index: x.row_index().to_vec(),
    })
}
