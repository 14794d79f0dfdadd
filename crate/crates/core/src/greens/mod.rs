//! Resolvent entries of h_g and fractional-moment scans.

mod moments;
mod resolvent;

use thiserror::Error;

pub use moments::{
    fit_bins, fractional_moment_scan, seed_moments, spin_resolvent_matrix, standard_pairs_1d, DecayFit,
    MomentBin, MomentEstimate, MomentPair, MomentScanConfig, PairKind, SectorResolvents, SeedMoments,
};
pub(crate) use resolvent::check_eta;
pub use resolvent::{
    cross_spin_factorization_check, greens_entry, greens_entry_spectral, resolvent_identity_check, Resolvent,
    ResolventQuery,
};

use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum GreensError {
    #[error("imaginary part of z must be positive, got {0}")]
    NonPositiveEta(f64),
    #[error("resolvent solve failed: singular matrix")]
    Singular,
    #[error("{0} is not in the operator basis")]
    NotInBasis(String),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("moment exponent s must lie in (0, 1), got {0}")]
    InvalidExponent(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}
