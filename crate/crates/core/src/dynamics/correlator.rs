use serde::{Deserialize, Serialize};

use super::{DynamicsError, C64};
use crate::matching::SectorSystems;
use crate::model::{LatticeBox, Site, SpinSite};
use crate::spectral::EigenSystem;

/// Spectral weights a_n of ⟨a|e^{−ith}|b⟩ = Σ_n a_n e^{−itλ_n}.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelatorWeights {
    pub lambdas: Vec<f64>,
    pub weights: Vec<f64>,
    /// Terms before and after this index are summed separately, so that two sectors
    /// carrying identical spectra cancel exactly.
    pub split: usize,
}

impl CorrelatorWeights {
    /// From a full eigen-system of h_g in the spin-site basis.
    pub fn from_spin_eigensystem(
        es: &EigenSystem,
        lattice: &LatticeBox,
        a: &SpinSite,
        b: &SpinSite,
    ) -> Result<Self, DynamicsError> {
        let n = lattice.len();
        if es.dim() != 2 * n {
            return Err(DynamicsError::DimensionMismatch {
                expected: 2 * n,
                found: es.dim(),
            });
        }
        let row = |s: &SpinSite| {
            lattice
                .index_of(&s.x)
                .map(|i| s.spin.block() * n + i)
                .ok_or_else(|| DynamicsError::OutsideBox(s.x.to_string()))
        };
        let (ra, rb) = (row(a)?, row(b)?);
        let v = es.vectors();
        Ok(CorrelatorWeights {
            lambdas: es.eigenvalues().iter().copied().collect(),
            weights: (0..es.dim()).map(|k| v[(ra, k)] * v[(rb, k)]).collect(),
            split: es.dim(),
        })
    }

    /// ⟨x,+1|e^{−ith_g}|y,−1⟩ = ½(⟨x|e^{−itH_g}|y⟩ − ⟨x|e^{−itH_{−g}}|y⟩), sector by sector.
    pub fn spin_flip_from_sectors(sectors: &SectorSystems, x: &Site, y: &Site) -> Result<Self, DynamicsError> {
        let idx = |s: &Site| {
            sectors
                .lattice
                .index_of(s)
                .ok_or_else(|| DynamicsError::OutsideBox(s.to_string()))
        };
        let (ix, iy) = (idx(x)?, idx(y)?);
        let mut lambdas = Vec::with_capacity(2 * sectors.plus.dim());
        let mut weights = Vec::with_capacity(lambdas.capacity());
        for (es, sign) in [(&sectors.plus, 0.5), (&sectors.minus, -0.5)] {
            let v = es.vectors();
            for k in 0..es.dim() {
                lambdas.push(es.eigenvalue(k));
                weights.push(sign * v[(ix, k)] * v[(iy, k)]);
            }
        }
        Ok(CorrelatorWeights {
            split: sectors.plus.dim(),
            lambdas,
            weights,
        })
    }

    pub fn amplitude(&self, t: f64) -> C64 {
        let part = |r: std::ops::Range<usize>| -> C64 {
            self.lambdas[r.clone()]
                .iter()
                .zip(&self.weights[r])
                .map(|(l, a)| C64::from_polar(*a, -t * l))
                .sum()
        };
        let k = self.split.min(self.lambdas.len());
        part(0..k) + part(k..self.lambdas.len())
    }

    /// Weights with exactly equal eigenvalues combined, sorted by eigenvalue.
    fn merged(&self) -> Vec<(f64, f64)> {
        let mut pts: Vec<(f64, f64)> = self.lambdas.iter().copied().zip(self.weights.iter().copied()).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
        for (l, a) in pts {
            match out.last_mut() {
                Some(last) if last.0 == l => last.1 += a,
                _ => out.push((l, a)),
            }
        }
        out
    }

    /// Σ_n |a_n| over distinct eigenvalues, an upper bound on sup_t |amplitude|.
    pub fn certified_amplitude_bound(&self) -> f64 {
        self.merged().iter().map(|p| p.1.abs()).sum()
    }

    /// min_c Σ_n |a_n||λ_n − c|, an upper bound on sup_t |amplitude|/t whenever Σ a_n = 0.
    pub fn certified_rate_bound(&self) -> f64 {
        let pts: Vec<(f64, f64)> = self
            .merged()
            .into_iter()
            .map(|(l, a)| (l, a.abs()))
            .filter(|p| p.1 > 0.0)
            .collect();
        if pts.is_empty() {
            return 0.0;
        }
        let total: f64 = pts.iter().map(|p| p.1).sum();
        let mut acc = 0.0;
        let mut c = pts[0].0;
        for p in &pts {
            acc += p.1;
            if acc >= 0.5 * total {
                c = p.0;
                break;
            }
        }
        pts.iter().map(|(l, w)| w * (l - c).abs()).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorRecord {
    pub x: Site,
    pub y: Site,
    /// d_Γ((x,+1),(y,−1)) = 1 + |x| + |y|.
    pub distance: u64,
    /// Grid supremum of |amplitude|; a lower bound on the true supremum.
    pub sup_amp: f64,
    /// Grid supremum of |amplitude|/t over t > 0; a lower bound on the true supremum.
    pub sup_rate: f64,
    pub certified_amp: f64,
    pub certified_rate: f64,
    pub grid_points: usize,
}

/// Logarithmically spaced times in [t_min, t_max].
pub fn log_time_grid(t_min: f64, t_max: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![t_min];
    }
    let (a, b) = (t_min.ln(), t_max.ln());
    (0..n)
        .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

pub fn correlator_record(w: &CorrelatorWeights, x: &Site, y: &Site, times: &[f64]) -> CorrelatorRecord {
    let mut sup_amp = 0.0f64;
    let mut sup_rate = 0.0f64;
    for &t in times {
        let a = w.amplitude(t).norm();
        sup_amp = sup_amp.max(a);
        if t > 0.0 {
            sup_rate = sup_rate.max(a / t);
        }
    }
    CorrelatorRecord {
        x: x.clone(),
        y: y.clone(),
        distance: 1 + x.l1_norm() + y.l1_norm(),
        sup_amp,
        sup_rate,
        certified_amp: w.certified_amplitude_bound(),
        certified_rate: w.certified_rate_bound(),
        grid_points: times.len(),
    }
}

/// sup over the grid of |⟨x,+1|e^{−ith_g}|y,−1⟩| and of that amplitude divided by t.
pub fn spin_correlator(sectors: &SectorSystems, x: &Site, y: &Site, times: &[f64]) -> Result<CorrelatorRecord, DynamicsError> {
    let w = CorrelatorWeights::spin_flip_from_sectors(sectors, x, y)?;
    Ok(correlator_record(&w, x, y, times))
}
