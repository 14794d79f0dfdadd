use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_eta, GreensError, Resolvent};
use crate::dynamics::C64;
use crate::model::{
    build_rank_one_family, graph_metric, sample_potential, DisorderLaw, DisorderSpec, LatticeBox, ModelParams, Site,
    SpinSite,
};
use crate::stats::{mean_stderr, weighted_line_fit, LineFit};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKind {
    SameSpin,
    CrossSpin,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentPair {
    pub target: SpinSite,
    pub source: SpinSite,
}

impl MomentPair {
    pub fn kind(&self) -> PairKind {
        if self.target.spin == self.source.spin {
            PairKind::SameSpin
        } else {
            PairKind::CrossSpin
        }
    }

    pub fn distance(&self) -> u64 {
        graph_metric(&self.target, &self.source).expect("pairs share a dimension")
    }
}

/// d = 1 pair list: same-spin (±offset, ±(offset + r)) for r ≤ r_max, and cross-spin
/// (x,+1),(x,−1) for 0 ≤ x ≤ x_max.
///
/// The same-spin pairs stay on one side of the origin so that no path between them
/// passes through supp ζ.
pub fn standard_pairs_1d(offset: i64, r_max: i64, x_max: i64) -> Vec<MomentPair> {
    let mut out = Vec::new();
    for r in 0..=r_max {
        for sign in [1i64, -1] {
            out.push(MomentPair {
                target: SpinSite::up([sign * offset]),
                source: SpinSite::up([sign * (offset + r)]),
            });
        }
    }
    for x in 0..=x_max {
        out.push(MomentPair {
            target: SpinSite::up([x]),
            source: SpinSite::down([x]),
        });
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentScanConfig {
    pub lattice: LatticeBox,
    pub gamma: f64,
    pub g: f64,
    pub zeta: crate::model::RankOneProfile,
    pub law: DisorderLaw,
    pub s: f64,
    pub energy: f64,
    pub eta_im: f64,
    pub pairs: Vec<MomentPair>,
    /// Pairs with a site closer than this to the box boundary (in lattice steps) are dropped.
    pub boundary_margin: u64,
    /// Constant C of the envelope C/(1−s); None uses (2‖ρ‖_∞)^s.
    pub apriori_c: Option<f64>,
}

impl MomentScanConfig {
    pub fn validate(&self) -> Result<(), GreensError> {
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(GreensError::InvalidExponent(self.s));
        }
        check_eta(self.eta_im)?;
        self.law.validate()?;
        Ok(())
    }

    pub fn apriori_envelope(&self) -> f64 {
        let c = self
            .apriori_c
            .unwrap_or_else(|| (2.0 * self.law.density_sup()).powf(self.s));
        c / (1.0 - self.s)
    }

    fn margin(&self, x: &Site) -> u64 {
        let r = self.lattice.radius();
        let d = x.linf_dist(self.lattice.center());
        r.saturating_sub(d)
    }

    /// Pairs whose sites lie in the box at least `boundary_margin` steps from its edge.
    pub fn kept_pairs(&self) -> Vec<MomentPair> {
        self.pairs
            .iter()
            .filter(|p| {
                [&p.target.x, &p.source.x]
                    .iter()
                    .all(|x| self.lattice.contains(x) && self.margin(x) >= self.boundary_margin)
            })
            .cloned()
            .collect()
    }
}

/// |G_z|^s for every kept pair on one realization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedMoments {
    pub seed: u64,
    pub values: Vec<f64>,
}

/// ⟨x,i|(h_g − z)^{−1}|y,j⟩ = ½(R_{+g}(x,y) + ij·R_{−g}(x,y)) through the two sectors.
pub struct SectorResolvents {
    plus: Resolvent,
    minus: Resolvent,
    lattice: LatticeBox,
    cache: BTreeMap<(bool, usize), nalgebra::DVector<C64>>,
}

impl SectorResolvents {
    pub fn new(lattice: &LatticeBox, params: &ModelParams, v: &crate::model::Potential, z: C64) -> Result<Self, GreensError> {
        let hp = build_rank_one_family(lattice, params, v)?;
        let hm = build_rank_one_family(lattice, &params.with_g(-params.g), v)?;
        Ok(SectorResolvents {
            plus: Resolvent::new(&hp.matrix, z)?,
            minus: Resolvent::new(&hm.matrix, z)?,
            lattice: lattice.clone(),
            cache: BTreeMap::new(),
        })
    }

    fn col(&mut self, plus: bool, j: usize) -> Result<&nalgebra::DVector<C64>, GreensError> {
        if !self.cache.contains_key(&(plus, j)) {
            let c = if plus { self.plus.column(j)? } else { self.minus.column(j)? };
            self.cache.insert((plus, j), c);
        }
        Ok(&self.cache[&(plus, j)])
    }

    pub fn entry(&mut self, target: &SpinSite, source: &SpinSite) -> Result<C64, GreensError> {
        let row = self
            .lattice
            .index_of(&target.x)
            .ok_or_else(|| GreensError::NotInBasis(target.x.to_string()))?;
        let col = self
            .lattice
            .index_of(&source.x)
            .ok_or_else(|| GreensError::NotInBasis(source.x.to_string()))?;
        let sign = (target.spin.sign() * source.spin.sign()) as f64;
        let p = self.col(true, col)?[row];
        let m = self.col(false, col)?[row];
        Ok((p + m * sign) * 0.5)
    }
}

pub fn seed_moments(cfg: &MomentScanConfig, pairs: &[MomentPair], seed: u64) -> Result<SeedMoments, GreensError> {
    let spec = DisorderSpec {
        law: cfg.law.clone(),
        seed,
    };
    let v = sample_potential(&cfg.lattice, &spec)?;
    let params = ModelParams::new(cfg.gamma, cfg.g, cfg.zeta.clone());
    let mut res = SectorResolvents::new(&cfg.lattice, &params, &v, C64::new(cfg.energy, cfg.eta_im))?;
    let values = pairs
        .iter()
        .map(|p| res.entry(&p.target, &p.source).map(|g| g.norm().powf(cfg.s)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SeedMoments { seed, values })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentBin {
    pub kind: PairKind,
    pub distance: u64,
    pub mean: f64,
    pub stderr: f64,
    /// Number of realizations.
    pub n: usize,
    pub pairs_in_bin: usize,
}

/// A_s e^{−μ_s d} fitted to bin means in log space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub a_s: f64,
    pub mu_s: f64,
    pub mu_ci95: (f64, f64),
    pub a_ci95: (f64, f64),
    pub mu_stderr: f64,
    pub chi2_red: f64,
    pub n_bins: usize,
}

impl DecayFit {
    fn from_line(f: &LineFit, n_bins: usize) -> Self {
        DecayFit {
            a_s: f.intercept.exp(),
            mu_s: -f.slope,
            mu_ci95: (-f.slope_ci95.1, -f.slope_ci95.0),
            a_ci95: (f.intercept_ci95.0.exp(), f.intercept_ci95.1.exp()),
            mu_stderr: f.se_slope,
            chi2_red: f.chi2_red,
            n_bins,
        }
    }

    pub fn ci_excludes_zero(&self) -> bool {
        self.mu_ci95.0 > 0.0 || self.mu_ci95.1 < 0.0
    }

    /// |μ_a − μ_b| ≤ 1.96·√(se_a² + se_b²).
    pub fn compatible_with(&self, other: &DecayFit) -> bool {
        (self.mu_s - other.mu_s).abs() <= 1.96 * self.mu_stderr.hypot(other.mu_stderr)
    }
}

pub fn fit_bins<'a>(bins: impl IntoIterator<Item = &'a MomentBin>) -> Option<DecayFit> {
    let usable: Vec<&MomentBin> = bins
        .into_iter()
        .filter(|b| b.n >= 2 && b.mean > 0.0 && b.stderr > 0.0)
        .collect();
    let x: Vec<f64> = usable.iter().map(|b| b.distance as f64).collect();
    let y: Vec<f64> = usable.iter().map(|b| b.mean.ln()).collect();
    let w: Vec<f64> = usable.iter().map(|b| (b.mean / b.stderr).powi(2)).collect();
    weighted_line_fit(&x, &y, &w).map(|f| DecayFit::from_line(&f, usable.len()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub s: f64,
    pub energy: f64,
    pub eta_im: f64,
    pub g: f64,
    pub n_seeds: usize,
    pub pairs: Vec<MomentPair>,
    pub dropped_pairs: usize,
    pub bins: Vec<MomentBin>,
    /// Per-pair ensemble mean and standard error, in pair order.
    pub pair_stats: Vec<(f64, f64)>,
    pub fit_joint: Option<DecayFit>,
    pub fit_same: Option<DecayFit>,
    pub fit_cross: Option<DecayFit>,
    pub apriori_envelope: f64,
    /// Bins whose mean exceeds the envelope.
    pub envelope_violations: Vec<(PairKind, u64)>,
}

impl MomentEstimate {
    /// Combine per-seed samples; the result does not depend on their order.
    pub fn from_samples(cfg: &MomentScanConfig, pairs: Vec<MomentPair>, samples: &[SeedMoments]) -> Self {
        let mut sorted: Vec<&SeedMoments> = samples.iter().collect();
        sorted.sort_by_key(|s| s.seed);
        let mut groups: BTreeMap<(PairKind, u64), Vec<usize>> = BTreeMap::new();
        for (k, p) in pairs.iter().enumerate() {
            groups.entry((p.kind(), p.distance())).or_default().push(k);
        }
        let bins: Vec<MomentBin> = groups
            .iter()
            .map(|(&(kind, distance), idx)| {
                let per_seed: Vec<f64> = sorted
                    .iter()
                    .map(|s| idx.iter().map(|&k| s.values[k]).sum::<f64>() / idx.len() as f64)
                    .collect();
                let (mean, stderr) = mean_stderr(&per_seed);
                MomentBin {
                    kind,
                    distance,
                    mean,
                    stderr,
                    n: per_seed.len(),
                    pairs_in_bin: idx.len(),
                }
            })
            .collect();
        let pair_stats = (0..pairs.len())
            .map(|k| mean_stderr(&sorted.iter().map(|s| s.values[k]).collect::<Vec<_>>()))
            .collect();
        let envelope = cfg.apriori_envelope();
        let envelope_violations = bins
            .iter()
            .filter(|b| b.mean > envelope)
            .map(|b| (b.kind, b.distance))
            .collect();
        MomentEstimate {
            s: cfg.s,
            energy: cfg.energy,
            eta_im: cfg.eta_im,
            g: cfg.g,
            n_seeds: sorted.len(),
            dropped_pairs: cfg.pairs.len() - pairs.len(),
            fit_joint: fit_bins(&bins),
            fit_same: fit_bins(bins.iter().filter(|b| b.kind == PairKind::SameSpin)),
            fit_cross: fit_bins(bins.iter().filter(|b| b.kind == PairKind::CrossSpin)),
            pairs,
            bins,
            pair_stats,
            apriori_envelope: envelope,
            envelope_violations,
        }
    }

    pub fn bins_of(&self, kind: PairKind) -> impl Iterator<Item = &MomentBin> {
        self.bins.iter().filter(move |b| b.kind == kind)
    }

    /// Consecutive cross-spin bins with avg(D₁) < avg(D₂) − 2·√(se₁² + se₂²).
    pub fn cross_monotonicity_violations(&self) -> usize {
        let cross: Vec<&MomentBin> = self.bins_of(PairKind::CrossSpin).collect();
        cross
            .windows(2)
            .filter(|w| w[0].mean < w[1].mean - 2.0 * w[0].stderr.hypot(w[1].stderr))
            .count()
    }
}

/// Ensemble average of |G_z|^s over the given seeds, binned by d_Γ.
pub fn fractional_moment_scan(cfg: &MomentScanConfig, seeds: &[u64]) -> Result<MomentEstimate, GreensError> {
    cfg.validate()?;
    let pairs = cfg.kept_pairs();
    let samples = seeds
        .par_iter()
        .map(|&s| seed_moments(cfg, &pairs, s))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MomentEstimate::from_samples(cfg, pairs, &samples))
}

/// Dense resolvent of the spin Hamiltonian for small cross-checks.
pub fn spin_resolvent_matrix(h: &DMatrix<f64>, z: C64) -> Result<DMatrix<C64>, GreensError> {
    Resolvent::new(h, z)?.matrix()
}
