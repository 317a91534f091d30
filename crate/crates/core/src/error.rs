use thiserror::Error;

/// Errors produced by the jointchar pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix must have at least 2 rows, got {0}")]
    EmptyMatrix(usize),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("matrix is not symmetric: |a[{i}][{j}] - a[{j}][{i}]| = {delta:e}")]
    NotSymmetric { i: usize, j: usize, delta: f64 },

    #[error("Jacobi sweeps did not converge after {sweeps} sweeps (off-diagonal residual {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("degenerate data: total variance is zero")]
    DegenerateData,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("row {0} is identical to every other row (all pairwise distances zero)")]
    DegenerateRow(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite coordinates at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("missing header key `{0}`")]
    MissingKey(String),

    #[error("unsupported ENVI data type code {0} (supported: 2=int16, 4=float32, 12=uint16)")]
    UnsupportedDataType(i64),

    #[error("malformed {{...}} list for key `{0}`")]
    MalformedList(String),

    #[error("invalid header: {0}")]
    InvalidHeader(String),

    #[error("file size mismatch: expected {expected} bytes, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("band range {start}-{end} out of bounds for {bands} bands")]
    RangeOutOfBounds { start: usize, end: usize, bands: usize },

    #[error("subset window out of bounds: origin ({line},{sample}) size {height}x{width} vs cube {lines}x{samples}")]
    WindowOutOfBounds { line: usize, sample: usize, height: usize, width: usize, lines: usize, samples: usize },

    #[error("no bands retained by the band mask")]
    NoBandsRetained,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("row order mismatch at record {index}: ({left_row},{left_col}) vs ({right_row},{right_col})")]
    RowOrderMismatch { index: usize, left_row: u32, left_col: u32, right_row: u32, right_col: u32 },

    #[error("unknown axis `{0}`")]
    UnknownAxis(String),

    #[error("ROI polygon invalid: {0}")]
    InvalidPolygon(String),

    #[error("ROI has no members")]
    EmptyRoi,

    #[error("ROI needs at least 2 members for covariance, got {0}")]
    InsufficientRoiMembers(usize),

    #[error("wavelength grids differ: {0}")]
    GridMismatch(String),

    #[error("covariance is singular after regularization (condition estimate {condition:e})")]
    SingularCovariance { condition: f64 },

    #[error("pixel ({row},{col}) outside {lines}x{samples} footprint")]
    CoordinateOutOfBounds { row: u32, col: u32, lines: usize, samples: usize },

    #[error("group {0} is empty")]
    EmptyGroup(usize),

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("{path}:{line}: {message}")]
    ParseLine { path: String, line: usize, message: String },

    #[error("unsupported raster: {0}")]
    UnsupportedRaster(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics themselves, as opposed to bad
    /// inputs. The CLI maps these to a distinct exit code.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::NonFinite { .. }
                | Error::SingularCovariance { .. }
                | Error::DegenerateData
                | Error::DegenerateRow(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
