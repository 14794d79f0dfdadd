use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::MatchingError;
use crate::model::{build_anderson, sample_potential, DisorderLaw, DisorderSpec, LatticeBox, RankOneProfile};
use crate::spectral::{diagonalize, DEFAULT_EIGEN_TOL};
use crate::stats::wilson_interval;

/// Δ_min[T] = min_{i≠j} |t_i − t_j|.
pub fn min_spacing(values: &[f64]) -> Result<f64, MatchingError> {
    if values.len() < 2 {
        return Err(MatchingError::TooFewValues(values.len()));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min))
}

/// Bound on P(Δ_min < ε) from covering the spectral range with intervals of length 2ε
/// at offsets ε and applying (π²/2)(‖ρ‖|J||Λ|)² to each.
pub fn minami_corollary_bound(density_sup: f64, n_sites: usize, eps: f64, spectral_width: f64) -> f64 {
    let n_intervals = (spectral_width / eps).ceil().max(1.0);
    let per = 0.5 * PI * PI * (density_sup * 2.0 * eps * n_sites as f64).powi(2);
    (n_intervals * per).min(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpacingStats {
    pub eps: f64,
    pub n_seeds: usize,
    pub hits: usize,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub corollary_bound: f64,
}

impl SpacingStats {
    pub fn within_bound(&self) -> bool {
        self.p_hat <= self.corollary_bound
    }
}

/// Ensemble setup for the Minami statistic on one box.
#[derive(Clone, Debug, PartialEq)]
pub struct MinamiSetup {
    pub lattice: LatticeBox,
    pub gamma: f64,
    pub law: DisorderLaw,
    /// When set, the box must avoid its support so that H_{Λ} does not see the rank-one term.
    pub zeta: Option<RankOneProfile>,
}

impl MinamiSetup {
    pub fn validate(&self) -> Result<(), MatchingError> {
        self.law.validate()?;
        if self.lattice.len() < 2 {
            return Err(MatchingError::TooFewValues(self.lattice.len()));
        }
        if let Some(z) = &self.zeta {
            if z.intersects(&self.lattice) {
                return Err(MatchingError::ZetaIntersects(self.lattice.to_string()));
            }
        }
        Ok(())
    }

    /// Width of an interval guaranteed to contain σ(H_Λ).
    pub fn spectral_width(&self) -> f64 {
        let (lo, hi) = self.law.support();
        hi - lo + 4.0 * self.lattice.dim() as f64 * self.gamma.abs()
    }

    pub fn delta_min(&self, seed: u64) -> Result<f64, MatchingError> {
        let spec = DisorderSpec {
            law: self.law.clone(),
            seed,
        };
        let v = sample_potential(&self.lattice, &spec)?;
        let es = diagonalize(&build_anderson(&self.lattice, self.gamma, &v)?, DEFAULT_EIGEN_TOL)?;
        min_spacing(es.eigenvalues().as_slice())
    }
}

/// P̂(Δ_min < ε) with a Wilson interval, from precomputed per-seed spacings.
pub fn minami_statistic(delta_mins: &[f64], eps: f64, setup: &MinamiSetup) -> SpacingStats {
    let hits = delta_mins.iter().filter(|&&d| d < eps).count();
    let n = delta_mins.len();
    let (ci_low, ci_high) = wilson_interval(hits, n);
    SpacingStats {
        eps,
        n_seeds: n,
        hits,
        p_hat: if n > 0 { hits as f64 / n as f64 } else { 0.0 },
        ci_low,
        ci_high,
        corollary_bound: minami_corollary_bound(
            setup.law.density_sup(),
            setup.lattice.len(),
            eps,
            setup.spectral_width(),
        ),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinamiScan {
    pub seeds: Vec<u64>,
    pub delta_mins: Vec<f64>,
    pub stats: Vec<SpacingStats>,
}

impl MinamiScan {
    pub fn at(&self, eps: f64) -> Option<&SpacingStats> {
        self.stats.iter().find(|s| s.eps == eps)
    }
}

pub fn minami_scan(setup: &MinamiSetup, seeds: &[u64], eps_list: &[f64]) -> Result<MinamiScan, MatchingError> {
    setup.validate()?;
    if eps_list.iter().any(|e| e.is_nan() || *e <= 0.0) {
        return Err(MatchingError::InvalidParameter("eps must be positive".into()));
    }
    let delta_mins = seeds
        .par_iter()
        .map(|&s| setup.delta_min(s))
        .collect::<Result<Vec<_>, _>>()?;
    let stats = eps_list
        .iter()
        .map(|&e| minami_statistic(&delta_mins, e, setup))
        .collect();
    Ok(MinamiScan {
        seeds: seeds.to_vec(),
        delta_mins,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Site;

    #[test]
    fn spacing_examples() {
        assert_eq!(min_spacing(&[0.0, 1.0, 3.0]).unwrap(), 1.0);
        assert_eq!(min_spacing(&[2.0, 2.0]).unwrap(), 0.0);
        assert!(matches!(min_spacing(&[1.0]), Err(MatchingError::TooFewValues(1))));
    }

    fn setup() -> MinamiSetup {
        MinamiSetup {
            lattice: LatticeBox::new(Site::new([40]), 16).unwrap(),
            gamma: 0.1,
            law: DisorderLaw::Uniform { half_width: 0.5 },
            zeta: Some(RankOneProfile::delta_origin(1)),
        }
    }

    #[test]
    fn tiny_eps_gives_zero_and_monotone_in_eps() {
        let s = setup();
        let seeds: Vec<u64> = (0..40).collect();
        let eps = [1e-15, 1e-4, 1e-3, 1e-2, 1e-1];
        let scan = minami_scan(&s, &seeds, &eps).unwrap();
        assert_eq!(scan.at(1e-15).unwrap().hits, 0);
        for w in scan.stats.windows(2) {
            assert!(w[0].p_hat <= w[1].p_hat);
        }
        for st in &scan.stats {
            assert!(st.ci_low <= st.p_hat && st.p_hat <= st.ci_high);
        }
    }

    #[test]
    fn single_site_box_rejected() {
        let mut s = setup();
        s.lattice = LatticeBox::new(Site::new([40]), 0).unwrap();
        assert!(matches!(minami_scan(&s, &[1], &[1e-2]), Err(MatchingError::TooFewValues(1))));
    }

    #[test]
    fn box_touching_zeta_rejected() {
        let mut s = setup();
        s.lattice = LatticeBox::centered(1, 3).unwrap();
        assert!(matches!(s.validate(), Err(MatchingError::ZetaIntersects(_))));
    }

    #[test]
    fn corollary_bound_is_linear_in_eps_for_small_eps() {
        let a = minami_corollary_bound(1.0, 33, 1e-6, 1.4);
        let b = minami_corollary_bound(1.0, 33, 1e-7, 1.4);
        assert!((a / b - 10.0).abs() < 1e-3);
        assert_eq!(minami_corollary_bound(1.0, 33, 1e-2, 1.4), 1.0);
    }
}
