use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ExperimentKind, HarnessError};
use crate::stats::mean_stderr;

/// Scalar metrics of one seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedPartial {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub metrics: BTreeMap<String, f64>,
}

/// Per-seed metrics of a homogeneous ensemble, keyed by seed.
///
/// Summaries are computed in seed order, so they do not depend on the order in which
/// partials were merged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub kind: ExperimentKind,
    pub samples: BTreeMap<String, BTreeMap<u64, f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub n: usize,
    pub sum: f64,
    pub mean: f64,
    pub stderr: f64,
    pub min: f64,
    pub max: f64,
}

impl Ensemble {
    pub fn empty(kind: ExperimentKind) -> Self {
        Ensemble {
            kind,
            samples: BTreeMap::new(),
        }
    }

    pub fn from_partial(p: &SeedPartial) -> Self {
        let mut e = Ensemble::empty(p.kind);
        for (k, v) in &p.metrics {
            e.samples.entry(k.clone()).or_default().insert(p.seed, *v);
        }
        e
    }

    /// Union of two ensembles; a seed may appear in both only with identical values.
    pub fn merge(&self, other: &Ensemble) -> Result<Ensemble, HarnessError> {
        if self.kind != other.kind {
            return Err(HarnessError::MixedKinds(self.kind.name().into(), other.kind.name().into()));
        }
        let mut out = self.clone();
        for (metric, vals) in &other.samples {
            let dst = out.samples.entry(metric.clone()).or_default();
            for (&seed, &v) in vals {
                match dst.get(&seed) {
                    Some(&w) if w.to_bits() != v.to_bits() => {
                        return Err(HarnessError::ConflictingSeed { seed, metric: metric.clone() })
                    }
                    _ => {
                        dst.insert(seed, v);
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn seeds(&self) -> Vec<u64> {
        let mut s: Vec<u64> = self.samples.values().flat_map(|m| m.keys().copied()).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    pub fn summary(&self) -> BTreeMap<String, MetricSummary> {
        self.samples
            .iter()
            .map(|(k, vals)| {
                let v: Vec<f64> = vals.values().copied().collect();
                let (mean, stderr) = mean_stderr(&v);
                let s = MetricSummary {
                    n: v.len(),
                    sum: v.iter().sum(),
                    mean,
                    stderr,
                    min: v.iter().copied().fold(f64::INFINITY, f64::min),
                    max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                };
                (k.clone(), s)
            })
            .collect()
    }
}

/// Merge per-seed partials of one kind into an ensemble.
pub fn aggregate(partials: &[SeedPartial]) -> Result<Ensemble, HarnessError> {
    let first = partials.first().ok_or(HarnessError::EmptyAggregate)?;
    partials
        .iter()
        .try_fold(Ensemble::empty(first.kind), |acc, p| acc.merge(&Ensemble::from_partial(p)))
}
