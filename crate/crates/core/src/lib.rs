//! Joint characterization of image data: global variance structure via
//! PCA, local structure via t-SNE, and the combined feature space the two
//! span together.
//!
//! The crate covers the full pipeline: synthetic test images and
//! ENVI-style hyperspectral cubes in, PCA models and seeded t-SNE
//! embeddings through, and ROI-level spectral statistics (mean spectra,
//! pairwise differences, transformed divergence) out. See the `jointchar`
//! CLI for the file-level workflow.

pub mod csvio;
pub mod cube;
pub mod error;
pub mod joint;
pub mod linalg;
pub mod matrix;
pub mod pca;
pub mod raster;
pub mod synthetic;
pub mod tsne;

pub use error::{Error, Result};
pub use joint::{JointRecord, JointSpace, Roi, RoiStats};
pub use matrix::{DataMatrix, Matrix};
pub use pca::PcaModel;
pub use raster::RgbImage;
pub use tsne::{AffinityMatrix, Embedding, TsneConfig};
