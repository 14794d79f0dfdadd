//! Exact diagonalization, localization centers, SULE fits and local projections.

mod eigen;
mod export;
mod localization;

use thiserror::Error;

pub use eigen::{diagonalize, diagonalize_matrix, EigenSystem, OperatorDescriptor, DEFAULT_EIGEN_TOL};
pub(crate) use export::{fmt_f64, fmt_site};
pub use export::{read_eigenvector_dump, spectrum_rows, write_eigenvector_dump, write_spectrum_csv, SpectrumRow};
pub use localization::{
    local_projections, localization_center, localization_centers, participation_ratio, sule_fit,
    LocalIndexSet, LocalProjections, LocalizationProfile, SuleFit, SuleOptions,
};

use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("matrix dimension {dim} exceeds the dense cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("empty matrix")]
    Empty,
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("eigensolver did not converge")]
    NoConvergence,
    #[error("eigen residual {residual:e} exceeds bound {bound:e}")]
    ResidualTooLarge { residual: f64, bound: f64 },
    #[error("vector length {found} does not match box size {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("zero vector has no localization center")]
    ZeroVector,
    #[error("only {0} amplitudes above the floor, need at least 2")]
    TooFewPoints(usize),
    #[error("fattened box {region} escapes host box {host}")]
    BoxEscapesHost { region: String, host: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}
