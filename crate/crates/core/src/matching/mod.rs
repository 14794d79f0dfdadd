//! Level spacing, the scale sequence, the Ψ eigenvalue map and ε-corresponding pairs.

mod pairs;
mod psi;
mod scale;
mod sectors;
mod spacing;

use thiserror::Error;

pub use pairs::{
    find_corresponding_pairs, pair_count_audit, splitting_from_overlaps, AuditStatus, CorrespondencePair,
    PairAudit,
};
pub use psi::{build_psi_map, spacing_transfer_holds, PsiAssignment, SpectralMap};
pub use scale::{scale_sequence, ScaleLevel, ScaleSequence};
pub use sectors::SectorSystems;
pub use spacing::{
    minami_corollary_bound, minami_scan, minami_statistic, min_spacing, MinamiScan, MinamiSetup, SpacingStats,
};

use crate::model::ModelError;
use crate::spectral::SpectralError;

#[derive(Debug, Error)]
pub enum MatchingError {
    #[error("need at least 2 eigenvalues, got {0}")]
    TooFewValues(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("base site u0 must be nonzero")]
    ZeroBase,
    #[error("fattened boxes of levels {0} and {1} overlap")]
    Overlap(usize, usize),
    #[error("support of zeta intersects {0}")]
    ZetaIntersects(String),
    #[error("restriction of eigenvector {index} keeps norm {norm:.3} <= 1/2")]
    RestrictionTooLossy { index: usize, norm: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}
