use nalgebra::{DVector, DVectorView};
use serde::{Deserialize, Serialize};

use super::{min_spacing, ScaleLevel};
use crate::model::{LatticeBox, Site};
use crate::spectral::EigenSystem;

/// φ⁺ of H_{+g} and φ⁻ of H_{−g} that ε-correspond, both centered in `region`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrespondencePair {
    pub index_plus: usize,
    pub index_minus: usize,
    /// |⟨φ⁺, φ⁻⟩| once φ⁻ is sign-aligned so the inner product is nonnegative.
    pub overlap: f64,
    /// ±1 applied to φ⁻ to achieve the alignment.
    pub phase: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub eigenvalue_gap: f64,
    pub center_plus: Site,
    pub center_minus: Site,
    pub region: LatticeBox,
}

/// All pairs with both centers in `region`, overlap > 1 − ε and gap < ε, chosen greedily
/// by descending overlap so that each eigenvector is used at most once.
pub fn find_corresponding_pairs(
    plus: &EigenSystem,
    centers_plus: &[Site],
    minus: &EigenSystem,
    centers_minus: &[Site],
    region: &LatticeBox,
    eps: f64,
) -> Vec<CorrespondencePair> {
    let ip: Vec<usize> = (0..plus.dim()).filter(|&i| region.contains(&centers_plus[i])).collect();
    let im: Vec<usize> = (0..minus.dim()).filter(|&j| region.contains(&centers_minus[j])).collect();
    let mut cands: Vec<(f64, f64, usize, usize)> = Vec::new();
    for &i in &ip {
        let li = plus.eigenvalue(i);
        for &j in &im {
            let lj = minus.eigenvalue(j);
            if (li - lj).abs() >= eps {
                continue;
            }
            let dot = plus.vector(i).dot(&minus.vector(j));
            if dot.abs() > 1.0 - eps {
                cands.push((dot.abs(), dot.signum(), i, j));
            }
        }
    }
    cands.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.2.cmp(&b.2)).then(a.3.cmp(&b.3)));
    let mut used_p = vec![false; plus.dim()];
    let mut used_m = vec![false; minus.dim()];
    let mut out = Vec::new();
    for (overlap, sign, i, j) in cands {
        if used_p[i] || used_m[j] {
            continue;
        }
        used_p[i] = true;
        used_m[j] = true;
        out.push(CorrespondencePair {
            index_plus: i,
            index_minus: j,
            overlap: overlap.min(1.0),
            phase: if sign < 0.0 { -1.0 } else { 1.0 },
            lambda_plus: plus.eigenvalue(i),
            lambda_minus: minus.eigenvalue(j),
            eigenvalue_gap: (plus.eigenvalue(i) - minus.eigenvalue(j)).abs(),
            center_plus: centers_plus[i].clone(),
            center_minus: centers_minus[j].clone(),
            region: region.clone(),
        });
    }
    out
}

/// λ⁺ − λ⁻ = 2g⟨φ⁻,ζ⟩⟨ζ,φ⁺⟩ / ⟨φ⁻,φ⁺⟩, exact for eigenpairs of H_{±g}.
///
/// Unlike the difference of computed eigenvalues, this keeps full relative precision for
/// splittings far below machine epsilon. None when the overlap vanishes.
pub fn splitting_from_overlaps(
    g: f64,
    zeta: &DVector<f64>,
    phi_plus: DVectorView<'_, f64>,
    phi_minus: DVectorView<'_, f64>,
) -> Option<f64> {
    let overlap = phi_minus.dot(&phi_plus);
    if overlap == 0.0 {
        return None;
    }
    Some(2.0 * g * phi_minus.dot(zeta) * zeta.dot(&phi_plus) / overlap)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditStatus {
    Pass,
    Fail,
    /// Lower bound ≤ 0; holds trivially.
    Vacuous,
    /// Δ_min[σ(H_{Λ⁺})] ≤ L^{−2d−1} on this realization.
    HypothesisFailed,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairAudit {
    pub count: usize,
    pub lower_bound: f64,
    pub outer_delta_min: f64,
    pub spacing_threshold: f64,
    pub status: AuditStatus,
}

/// Compares the number of ε-corresponding pairs centered in Λ_k with 2α|Λ_k⁻| − |Λ_k⁺|.
pub fn pair_count_audit(
    pairs: &[CorrespondencePair],
    level: &ScaleLevel,
    outer_spectrum: &[f64],
    alpha: f64,
) -> PairAudit {
    let d = level.inner.dim() as i32;
    let threshold = (level.l as f64).powi(-2 * d - 1);
    let n_minus = level.minus.as_ref().map_or(0, LatticeBox::len) as f64;
    let lower_bound = 2.0 * alpha * n_minus - level.plus.len() as f64;
    let outer_delta_min = min_spacing(outer_spectrum).unwrap_or(f64::INFINITY);
    let count = pairs.iter().filter(|p| level.inner.contains(&p.center_plus)).count();
    let status = if outer_delta_min <= threshold {
        AuditStatus::HypothesisFailed
    } else if lower_bound <= 0.0 {
        AuditStatus::Vacuous
    } else if count as f64 >= lower_bound {
        AuditStatus::Pass
    } else {
        AuditStatus::Fail
    };
    PairAudit {
        count,
        lower_bound,
        outer_delta_min,
        spacing_threshold: threshold,
        status,
    }
}
