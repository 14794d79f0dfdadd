use serde::{Deserialize, Serialize};

use super::{min_spacing, MatchingError};
use crate::model::{Basis, LatticeBox, OperatorMatrix};
use crate::spectral::{EigenSystem, LocalIndexSet};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsiAssignment {
    /// Index into the inner eigen-system.
    pub inner_index: usize,
    /// Index into σ(H_{Λ⁺}).
    pub outer_index: usize,
    pub lambda: f64,
    pub eta: f64,
    pub gap: f64,
    /// ‖(H_{Λ⁺} − λ)ψ‖ for the normalized restriction ψ.
    pub residual_norm: f64,
    /// ‖P_{Λ⁺}φ‖ before normalization.
    pub restriction_norm: f64,
}

impl PsiAssignment {
    /// The min-max consequence gap ≤ ‖R‖, with a rounding allowance.
    pub fn gap_within_residual(&self) -> bool {
        self.gap <= self.residual_norm + 1e-12 * (1.0 + self.lambda.abs())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralMap {
    pub source: Vec<f64>,
    pub target: Vec<f64>,
    pub assignments: Vec<PsiAssignment>,
    pub injective: bool,
}

impl SpectralMap {
    pub fn max_gap(&self) -> f64 {
        self.assignments.iter().map(|a| a.gap).fold(0.0, f64::max)
    }

    pub fn all_gaps_within_residual(&self) -> bool {
        self.assignments.iter().all(PsiAssignment::gap_within_residual)
    }
}

fn nearest(sorted: &[f64], x: f64) -> usize {
    let k = sorted.partition_point(|&v| v < x);
    match (k.checked_sub(1), (k < sorted.len()).then_some(k)) {
        (Some(a), Some(b)) => {
            if x - sorted[a] <= sorted[b] - x {
                a
            } else {
                b
            }
        }
        (Some(a), None) => a,
        (None, Some(b)) => b,
        (None, None) => unreachable!("empty target spectrum"),
    }
}

/// Ψ: Σ_Λ → σ(H_{Λ⁺}) by nearest eigenvalue, recording the restriction residual.
///
/// `inner` lives on `host`; `outer_op` is H restricted to Λ⁺ ⊆ host and `outer` its eigen-system.
pub fn build_psi_map(
    inner: &EigenSystem,
    host: &LatticeBox,
    local: &LocalIndexSet,
    outer_op: &OperatorMatrix,
    outer: &EigenSystem,
) -> Result<SpectralMap, MatchingError> {
    if outer_op.basis != Basis::Sites {
        return Err(MatchingError::InvalidParameter("Ψ map expects a spinless outer operator".into()));
    }
    let plus = &outer_op.lattice;
    if !host.contains_box(plus) {
        return Err(MatchingError::InvalidParameter(format!("{plus} is not inside {host}")));
    }
    if !plus.contains_box(&local.lattice) {
        return Err(MatchingError::InvalidParameter(format!(
            "{} is not inside {plus}",
            local.lattice
        )));
    }
    let rows: Vec<usize> = plus.sites().map(|x| host.index_of(&x).expect("contained")).collect();
    let target: Vec<f64> = outer.eigenvalues().iter().copied().collect();
    let mut assignments = Vec::with_capacity(local.len());
    for &i in &local.indices {
        let phi = inner.vector(i);
        let mut psi = nalgebra::DVector::from_iterator(rows.len(), rows.iter().map(|&r| phi[r]));
        let norm = psi.norm();
        if norm <= 0.5 {
            return Err(MatchingError::RestrictionTooLossy { index: i, norm });
        }
        psi /= norm;
        let lambda = inner.eigenvalue(i);
        let r = &outer_op.matrix * &psi - lambda * &psi;
        let j = nearest(&target, lambda);
        assignments.push(PsiAssignment {
            inner_index: i,
            outer_index: j,
            lambda,
            eta: target[j],
            gap: (lambda - target[j]).abs(),
            residual_norm: r.norm(),
            restriction_norm: norm,
        });
    }
    let mut used: Vec<usize> = assignments.iter().map(|a| a.outer_index).collect();
    used.sort_unstable();
    let injective = used.windows(2).all(|w| w[0] != w[1]);
    Ok(SpectralMap {
        source: local.local_spectrum.clone(),
        target,
        assignments,
        injective,
    })
}

/// Part-4 transfer: if Δ_min[σ(H_{Λ⁺})] > `threshold` and every gap is below `gap_cap`, then
/// Δ_min[Σ_Λ] > threshold − 2·max gap. Returns None when the premises fail.
pub fn spacing_transfer_holds(map: &SpectralMap, outer_delta_min: f64, threshold: f64, gap_cap: f64) -> Option<bool> {
    if outer_delta_min <= threshold || map.assignments.iter().any(|a| a.gap >= gap_cap) {
        return None;
    }
    match min_spacing(&map.source) {
        Ok(d) => Some(d > threshold - 2.0 * map.max_gap()),
        Err(_) => Some(true),
    }
}
