use serde::{Deserialize, Serialize};

use super::MatchingError;
use crate::model::{LatticeBox, RankOneProfile, Site};

/// One level of the scale sequence: Λ_k = Λ_{L_k}(u_k) and its fattenings Λ_k^±.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleLevel {
    pub k: u32,
    pub u: Site,
    pub l: u64,
    pub inner: LatticeBox,
    pub plus: LatticeBox,
    /// None when (1−β)L_k rounds below zero.
    pub minus: Option<LatticeBox>,
    /// Whether every x ∈ Λ_k satisfies 2L_k ≤ |x| ≤ 4L_k (always true in d = 1).
    pub xl_bound_holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleSequence {
    pub u0: Site,
    pub beta: f64,
    pub alpha: f64,
    pub p: f64,
    pub levels: Vec<ScaleLevel>,
}

/// Range of |x|₁ over a box.
fn l1_range(b: &LatticeBox) -> (u64, u64) {
    let r = b.radius() as i64;
    let mut lo = 0u64;
    let mut hi = 0u64;
    for &c in b.center().coords() {
        let (a, z) = (c - r, c + r);
        hi += a.unsigned_abs().max(z.unsigned_abs());
        if a > 0 {
            lo += a as u64;
        } else if z < 0 {
            lo += z.unsigned_abs();
        }
    }
    (lo, hi)
}

/// u_k = 3^k u0, L_k = 3^{k−1}|u0| for k = 1..=k_max, with Λ_k^± of radius round((1±β)L_k).
pub fn scale_sequence(
    u0: &Site,
    k_max: u32,
    beta: f64,
    alpha: f64,
    p: f64,
    zeta: Option<&RankOneProfile>,
) -> Result<ScaleSequence, MatchingError> {
    if u0.l1_norm() == 0 {
        return Err(MatchingError::ZeroBase);
    }
    if !(0.0..1.0).contains(&beta) {
        return Err(MatchingError::InvalidParameter(format!("beta must lie in [0, 1), got {beta}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(MatchingError::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !(p > 1.0 && p < 2.0) {
        return Err(MatchingError::InvalidParameter(format!("p must lie in (1, 2), got {p}")));
    }
    let mut levels = Vec::new();
    for k in 1..=k_max {
        let scale = 3i64.pow(k);
        let u = u0.scaled(scale);
        let l = 3u64.pow(k - 1) * u0.l1_norm();
        let inner = LatticeBox::new(u.clone(), l)?;
        let plus = inner.with_radius(((1.0 + beta) * l as f64).round() as u64);
        let minus_r = ((1.0 - beta) * l as f64).round();
        let minus = (minus_r >= 0.0).then(|| inner.with_radius(minus_r as u64));
        if let Some(z) = zeta {
            if z.intersects(&inner) {
                return Err(MatchingError::ZetaIntersects(inner.to_string()));
            }
        }
        let (lo, hi) = l1_range(&inner);
        levels.push(ScaleLevel {
            k,
            u,
            l,
            xl_bound_holds: 2 * l <= lo && hi <= 4 * l,
            inner,
            plus,
            minus,
        });
    }
    for i in 0..levels.len() {
        for j in i + 1..levels.len() {
            if levels[i].plus.intersects(&levels[j].plus) {
                return Err(MatchingError::Overlap(levels[i].k as usize, levels[j].k as usize));
            }
        }
    }
    Ok(ScaleSequence {
        u0: u0.clone(),
        beta,
        alpha,
        p,
        levels,
    })
}
