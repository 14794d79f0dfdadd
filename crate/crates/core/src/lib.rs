//! Finite-volume laboratory for the spin-coupled Anderson model.
//!
//! `model` assembles H = γΔ + V, the rank-one family H_g and the spin Hamiltonian h_g on
//! boxes of Z^d. `spectral` diagonalizes them, `matching` pairs the eigenvectors of the
//! two sectors, `dynamics` evolves spin states, `greens` samples resolvent moments and
//! `harness` runs configured ensembles.

pub mod dynamics;
pub mod greens;
pub mod harness;
pub mod matching;
pub mod model;
pub mod spectral;
pub mod stats;

use thiserror::Error;

pub use dynamics::DynamicsError;
pub use greens::GreensError;
pub use harness::{run_experiment, ExperimentConfig, ExperimentKind, HarnessError, RunManifest};
pub use matching::MatchingError;
pub use model::{LatticeBox, ModelError, ModelParams, Potential, RankOneProfile, Site, Spin, SpinSite};
pub use spectral::{EigenSystem, SpectralError};

/// Any error raised by the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Matching(#[from] MatchingError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Greens(#[from] GreensError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
}
