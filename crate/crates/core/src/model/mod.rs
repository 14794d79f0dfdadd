//! Lattice boxes, the graph metric, disorder sampling and operator assembly.

mod disorder;
mod lattice;
mod operators;

use thiserror::Error;

pub use disorder::{derive_seed, sample_potential, sample_site, DisorderLaw, DisorderSpec, Potential};
pub use lattice::{graph_metric, LatticeBox, Site, Spin, SpinSite};
pub use operators::{
    build_anderson, build_rank_one, build_rank_one_family, build_spin_hamiltonian,
    flip_commutator_norm, sector_isometry, spin_decomposition_check, spin_flip_matrix, Basis,
    ModelParams, OperatorKind, OperatorMatrix, RankOneProfile, MAX_DENSE_DIM,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("lattice dimension must be positive")]
    ZeroDimension,
    #[error("invalid spin label {0}, expected +1 or -1")]
    InvalidSpin(i8),
    #[error("box radius would be negative ({0})")]
    NegativeRadius(i64),
    #[error("invalid disorder law: {0}")]
    InvalidDisorder(String),
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("no potential value at site {0}")]
    MissingPotential(Site),
    #[error("rank-one profile has norm {0}, expected 1")]
    ZetaNotNormalized(f64),
    #[error("rank-one profile support site {0} lies outside the box")]
    ZetaOutsideBox(Site),
    #[error("matrix dimension {dim} exceeds the dense cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("box {inner} is not contained in {outer}")]
    BoxNotContained { inner: String, outer: String },
}
