use std::f64::consts::PI;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{spin_eigensystem, spin_lift, DynamicsError, Propagator};
use crate::matching::{splitting_from_overlaps, CorrespondencePair, SectorSystems};
use crate::model::{LatticeBox, Site, Spin};

/// τ = π/|λ₊ − λ₋|.
pub fn tunneling_period(lambda_plus: f64, lambda_minus: f64) -> Result<f64, DynamicsError> {
    let gap = (lambda_plus - lambda_minus).abs();
    if gap < 1e-15 {
        return Err(DynamicsError::DegeneratePair(gap));
    }
    Ok(PI / gap)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitPair {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub tau: f64,
    /// λ₊ − λ₋ from the overlap identity, insensitive to eigenvalue rounding.
    pub splitting_identity: Option<f64>,
    pub pair: CorrespondencePair,
}

impl SplitPair {
    pub fn new(pair: &CorrespondencePair, sectors: &SectorSystems) -> Result<Self, DynamicsError> {
        let tau = tunneling_period(pair.lambda_plus, pair.lambda_minus)?;
        Ok(SplitPair {
            lambda_plus: pair.lambda_plus,
            lambda_minus: pair.lambda_minus,
            tau,
            splitting_identity: splitting_from_overlaps(
                sectors.params.g,
                &sectors.zeta,
                sectors.plus.vector(pair.index_plus),
                sectors.minus.vector(pair.index_minus),
            ),
            pair: pair.clone(),
        })
    }
}

/// P̂_x: sites u with |u − x| < |x|/2, on both spins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinProjector {
    pub center: Site,
    /// ⌊|x|/2⌋.
    pub half_width: u64,
    pub sites: Vec<Site>,
}

impl SpinProjector {
    /// For x = 0 the defining set is empty; {x} is used instead.
    pub fn new(center: &Site) -> Self {
        let norm = center.l1_norm();
        // |u − x| < norm/2  ⇔  |u − x| ≤ ⌈norm/2⌉ − 1
        let reach = norm.div_ceil(2).saturating_sub(1);
        let cube = LatticeBox::new(center.clone(), reach).expect("nonempty center");
        let sites = cube.sites().filter(|u| u.l1_dist(center) <= reach).collect();
        SpinProjector {
            center: center.clone(),
            half_width: norm / 2,
            sites,
        }
    }

    /// Spin-site basis rows of the projector within `lattice`.
    pub fn rows(&self, lattice: &LatticeBox) -> Vec<usize> {
        let n = lattice.len();
        let mut rows: Vec<usize> = self
            .sites
            .iter()
            .filter_map(|u| lattice.index_of(u))
            .flat_map(|i| [i, n + i])
            .collect();
        rows.sort_unstable();
        rows
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub points_per_tau: usize,
    /// Windows are placed around nτ for n = 1..=n_max.
    pub n_max: u32,
    pub window_points: usize,
    /// ε entering the window width e^{ε|x|/2}.
    pub window_eps: f64,
    /// Horizon used when the pair is degenerate and τ is infinite.
    pub fallback_horizon: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            points_per_tau: 2048,
            n_max: 4,
            window_points: 64,
            window_eps: 1e-3,
            fallback_horizon: 100.0,
        }
    }
}

impl GridSpec {
    pub fn window_width(&self, center: &Site) -> f64 {
        (0.5 * self.window_eps * center.l1_norm() as f64).exp()
    }

    /// Uniform grid on [0, 2τ] plus windows around each nτ (each nτ itself included).
    pub fn times(&self, tau: Option<f64>, center: &Site) -> Vec<f64> {
        let ppt = self.points_per_tau.max(1);
        let mut t: Vec<f64> = match tau {
            Some(tau) => {
                let mut t: Vec<f64> = (0..=2 * ppt).map(|k| tau * k as f64 / ppt as f64).collect();
                let w = self.window_width(center);
                for n in 1..=self.n_max {
                    let c = tau * n as f64;
                    t.push(c);
                    let m = self.window_points;
                    for j in 0..m {
                        let frac = if m > 1 { j as f64 / (m - 1) as f64 - 0.5 } else { 0.0 };
                        let s = c + frac * w;
                        if s >= 0.0 {
                            t.push(s);
                        }
                    }
                }
                t
            }
            None => (0..=2 * ppt)
                .map(|k| self.fallback_horizon * k as f64 / (2 * ppt) as f64)
                .collect(),
        };
        t.sort_by(f64::total_cmp);
        t.dedup();
        t
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DefectReport {
    /// Largest 1 − F over window points, F the fidelity to the expected spin state.
    pub max_defect: f64,
    /// Bound 4(δ + ε) at the point attaining the largest defect.
    pub bound_at_max: f64,
    /// Largest δ = π|t − nτ|/τ among window points.
    pub delta_max: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TunnelingTrace {
    pub times: Vec<f64>,
    pub fidelity_up: Vec<f64>,
    pub fidelity_down: Vec<f64>,
    pub containment: Vec<f64>,
    /// None when the pair is degenerate.
    pub tau: Option<f64>,
    pub overlap: f64,
    pub eps: f64,
    pub center: Site,
    pub defect: DefectReport,
    /// Largest |‖ψ(t)‖ − 1| over the sampled full states.
    pub norm_deviation_max: f64,
}

impl TunnelingTrace {
    /// Index of the grid time closest to t.
    pub fn index_near(&self, t: f64) -> usize {
        let k = self.times.partition_point(|&s| s < t);
        if k == 0 {
            0
        } else if k == self.times.len() || t - self.times[k - 1] <= self.times[k] - t {
            k - 1
        } else {
            k
        }
    }

    pub fn fidelity_down_at(&self, t: f64) -> f64 {
        self.fidelity_down[self.index_near(t)]
    }

    pub fn fidelity_up_at(&self, t: f64) -> f64 {
        self.fidelity_up[self.index_near(t)]
    }

    pub fn min_containment(&self) -> f64 {
        self.containment.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// (|cos(Δt/2)|, |sin(Δt/2)|): fidelities of the two-level reduction with splitting Δ.
pub fn two_level_curves(splitting: f64, t: f64) -> (f64, f64) {
    let a = 0.5 * splitting * t;
    (a.cos().abs(), a.sin().abs())
}

/// Start in |φ⁺, +1⟩ for the symmetric-sector eigenvector of `pair` and follow the spin flip.
pub fn spin_flip_experiment(
    sectors: &SectorSystems,
    pair: &CorrespondencePair,
    eps: f64,
    grid: &GridSpec,
) -> Result<TunnelingTrace, DynamicsError> {
    if pair.overlap <= 1.0 - eps {
        return Err(DynamicsError::PairBelowThreshold {
            overlap: pair.overlap,
            eps,
        });
    }
    let es = spin_eigensystem(sectors);
    let phi: DVector<f64> = sectors.plus.vector(pair.index_plus).clone_owned();
    let psi0 = spin_lift(&phi, Spin::Up);
    let prop = Propagator::new(&es, &psi0)?;
    let up = prop.target(&psi0);
    let down = prop.target(&spin_lift(&phi, Spin::Down));
    let tau = tunneling_period(pair.lambda_plus, pair.lambda_minus).ok();
    let center = pair.center_plus.clone();
    let rows = SpinProjector::new(&center).rows(&sectors.lattice);
    let times = grid.times(tau, &center);

    let samples: Vec<(f64, f64, f64)> = times
        .par_iter()
        .map(|&t| {
            let fu = prop.overlap(&up, t).norm();
            let fd = prop.overlap(&down, t).norm();
            let c = prop.rows(&rows, t).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            (fu, fd, c.min(1.0))
        })
        .collect();
    let fidelity_up: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let fidelity_down: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let containment: Vec<f64> = samples.iter().map(|s| s.2).collect();

    let stride = (times.len() / 64).max(1);
    let norm_deviation_max = times
        .par_iter()
        .step_by(stride)
        .map(|&t| (prop.state(t).norm() - 1.0).abs())
        .reduce(|| 0.0, f64::max);

    let mut defect = DefectReport {
        max_defect: 0.0,
        bound_at_max: 4.0 * eps,
        delta_max: 0.0,
        holds: true,
    };
    let half_w = 0.5 * grid.window_width(&center);
    for (k, &t) in times.iter().enumerate() {
        let (n, delta) = match tau {
            Some(tau) => {
                let n = (t / tau).round();
                if n > grid.n_max as f64 || (t - n * tau).abs() > half_w {
                    continue;
                }
                (n as u64, PI * (t - n * tau).abs() / tau)
            }
            None => (0, 0.0),
        };
        let f = if n % 2 == 0 { fidelity_up[k] } else { fidelity_down[k] };
        let d = 1.0 - f;
        let bound = 4.0 * (delta + eps);
        defect.delta_max = defect.delta_max.max(delta);
        if d > bound {
            defect.holds = false;
        }
        if d > defect.max_defect {
            defect.max_defect = d;
            defect.bound_at_max = bound;
        }
    }

    Ok(TunnelingTrace {
        times,
        fidelity_up,
        fidelity_down,
        containment,
        tau,
        overlap: pair.overlap,
        eps,
        center,
        defect,
        norm_deviation_max,
    })
}
