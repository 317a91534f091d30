//! Dense row-major matrices and the provenance-carrying sample matrix.

use std::collections::HashSet;

use rand::seq::index::sample as index_sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Build from a flat row-major buffer. Panics if the length is wrong.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "buffer length {} != {}x{}", data.len(), rows, cols);
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * d);
        for r in rows {
            assert_eq!(r.len(), d, "ragged rows");
            data.extend_from_slice(r);
        }
        Matrix { rows: n, cols: d, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `self * other`, plain triple loop.
    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Split into rows as owned vectors (mostly for tests).
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// N samples x D features with per-row pixel provenance.
///
/// Every analysis in this crate flows through this type: image pixels,
/// flattened cube spectra, and CSV tables all become a `DataMatrix` whose
/// `row_index` remembers where each sample came from.
#[derive(Debug, Clone)]
pub struct DataMatrix {
    values: Matrix,
    row_index: Vec<(u32, u32)>,
}

impl DataMatrix {
    /// Validates the invariants: N >= 2, D >= 1, finite values, and a
    /// unique `(pixel_row, pixel_col)` per row.
    pub fn new(values: Matrix, row_index: Vec<(u32, u32)>) -> Result<Self> {
        if values.rows() < 2 {
            return Err(Error::EmptyMatrix(values.rows()));
        }
        if values.cols() < 1 {
            return Err(Error::InvalidData("matrix needs at least one column".into()));
        }
        if row_index.len() != values.rows() {
            return Err(Error::LengthMismatch { left: values.rows(), right: row_index.len() });
        }
        if !values.is_finite() {
            return Err(Error::InvalidData("matrix contains non-finite values".into()));
        }
        let mut seen = HashSet::with_capacity(row_index.len());
        for &idx in &row_index {
            if !seen.insert(idx) {
                return Err(Error::InvalidData(format!(
                    "duplicate row index ({},{})",
                    idx.0, idx.1
                )));
            }
        }
        Ok(DataMatrix { values, row_index })
    }

    /// Wrap a matrix with synthetic `(i, 0)` provenance.
    pub fn with_default_index(values: Matrix) -> Result<Self> {
        let idx = (0..values.rows() as u32).map(|i| (i, 0)).collect();
        DataMatrix::new(values, idx)
    }

    pub fn n_rows(&self) -> usize {
        self.values.rows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.cols()
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.values.row(i)
    }

    pub fn row_index(&self) -> &[(u32, u32)] {
        &self.row_index
    }

    /// Uniform random subsample of at most `max_samples` rows, preserving
    /// row order. Returns a clone when no subsampling is needed.
    pub fn subsample(&self, max_samples: usize, seed: u64) -> Result<DataMatrix> {
        if max_samples >= self.n_rows() {
            return Ok(self.clone());
        }
        if max_samples < 2 {
            return Err(Error::InvalidConfig("subsample size must be at least 2".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut keep: Vec<usize> = index_sample(&mut rng, self.n_rows(), max_samples).into_vec();
        keep.sort_unstable();
        self.select_rows(&keep)
    }

    /// New matrix holding the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<DataMatrix> {
        let d = self.n_cols();
        let mut data = Vec::with_capacity(indices.len() * d);
        let mut idx = Vec::with_capacity(indices.len());
        for &i in indices {
            data.extend_from_slice(self.row(i));
            idx.push(self.row_index[i]);
        }
        DataMatrix::new(Matrix::from_vec(indices.len(), d, data), idx)
    }
}
