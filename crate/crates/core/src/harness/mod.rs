//! Experiment configuration, per-seed orchestration, aggregation and result files.

mod aggregate;
mod config;
mod run;

use thiserror::Error;

pub use aggregate::{aggregate, Ensemble, MetricSummary, SeedPartial};
pub use config::{
    BoxSpec, CorrelatorSpec, ExperimentConfig, ExperimentKind, GreensSpec, MatchSpec, MinamiSpec, ModelSpec,
    ScaleSpec, SeedSpec, SpectrumOperator, SpectrumSpec, TunnelSpec, ZetaEntry,
};
pub use run::{
    execute, run_experiment, thread_count, OutputHash, RunManifest, RunOutput, SeedStatus, StageTiming, Table,
    THREADS_ENV,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },
    #[error("cannot merge {0} results with {1} results")]
    MixedKinds(String, String),
    #[error("seed {seed} carries two different values for {metric}")]
    ConflictingSeed { seed: u64, metric: String },
    #[error("nothing to aggregate")]
    EmptyAggregate,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("internal error: {0}")]
    Internal(String),
}

impl HarnessError {
    /// 1 for validation errors, 3 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Validation { .. } => 1,
            _ => 3,
        }
    }
}
