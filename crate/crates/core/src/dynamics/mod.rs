//! Spectral time evolution of h_g, the spin tunneling experiment and spin-flip correlators.

mod correlator;
mod propagate;
mod tunnel;

use thiserror::Error;

pub use correlator::{correlator_record, log_time_grid, spin_correlator, CorrelatorRecord, CorrelatorWeights};
pub use propagate::{
    evolve, spin_balance_deviation, spin_basis_vector, spin_eigensystem, spin_lift, Propagator, C64,
};
pub use tunnel::{
    spin_flip_experiment, tunneling_period, two_level_curves, DefectReport, GridSpec, SpinProjector, SplitPair,
    TunnelingTrace,
};

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("state has length {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("site {0} lies outside the box")]
    OutsideBox(String),
    #[error("pair splitting {0:e} is below 1e-15; period unresolvable")]
    DegeneratePair(f64),
    #[error("pair overlap {overlap} does not exceed 1 - eps = {}", 1.0 - eps)]
    PairBelowThreshold { overlap: f64, eps: f64 },
}
