use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::HarnessError;
use crate::dynamics::GridSpec;
use crate::model::{derive_seed, DisorderLaw, LatticeBox, ModelParams, RankOneProfile, Site, MAX_DENSE_DIM};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Spectrum,
    Match,
    Tunnel,
    Greens,
    Minami,
    Correlator,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Spectrum,
        ExperimentKind::Match,
        ExperimentKind::Tunnel,
        ExperimentKind::Greens,
        ExperimentKind::Minami,
        ExperimentKind::Correlator,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Spectrum => "spectrum",
            ExperimentKind::Match => "match",
            ExperimentKind::Tunnel => "tunnel",
            ExperimentKind::Greens => "greens",
            ExperimentKind::Minami => "minami",
            ExperimentKind::Correlator => "correlator",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZetaEntry {
    pub site: Vec<i64>,
    pub amplitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default = "one")]
    pub dim: usize,
    pub gamma: f64,
    pub g: f64,
    #[serde(default)]
    pub disorder: DisorderLaw,
    /// Amplitudes of ζ; empty means δ_0. Rescaled to unit norm.
    #[serde(default)]
    pub zeta: Vec<ZetaEntry>,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub radius: u64,
    /// Defaults to the origin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<i64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedSpec {
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "one")]
    pub n_seeds: usize,
    /// Explicit seeds; overrides base_seed and n_seeds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub list: Option<Vec<u64>>,
}

impl Default for SeedSpec {
    fn default() -> Self {
        SeedSpec {
            base_seed: 0,
            n_seeds: 1,
            list: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumOperator {
    /// H = γΔ + V.
    #[default]
    Anderson,
    /// H_{+g}.
    Plus,
    /// H_{−g}.
    Minus,
    /// h_g on spin sites.
    Spin,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSpec {
    #[serde(default)]
    pub operator: SpectrumOperator,
    /// Also write eigenvectors_<seed>.bin.
    #[serde(default)]
    pub eigenvector_dump: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleSpec {
    pub u0: Vec<i64>,
    pub k_max: u32,
    pub beta: f64,
    pub alpha: f64,
    #[serde(default = "default_p")]
    pub p: f64,
}

fn default_p() -> f64 {
    1.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchSpec {
    pub eps: f64,
    /// Regions are the inner boxes of this scale sequence; without it, the whole box.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<ScaleSpec>,
}

impl Default for MatchSpec {
    fn default() -> Self {
        MatchSpec { eps: 0.05, scale: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TunnelSpec {
    pub eps: f64,
    /// Candidate pairs need at least this overlap and splitting.
    pub min_overlap: f64,
    pub min_gap: f64,
    #[serde(default)]
    pub grid: GridSpec,
}

impl Default for TunnelSpec {
    fn default() -> Self {
        TunnelSpec {
            eps: 1e-3,
            min_overlap: 0.999,
            min_gap: 1e-10,
            grid: GridSpec::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GreensSpec {
    pub s: f64,
    pub energy: f64,
    pub eta_im: f64,
    /// Couplings to scan; empty means the model's g.
    #[serde(default)]
    pub g_values: Vec<f64>,
    pub offset: i64,
    pub r_max: i64,
    pub x_max: i64,
    pub boundary_margin: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub apriori_c: Option<f64>,
}

impl Default for GreensSpec {
    fn default() -> Self {
        GreensSpec {
            s: 0.5,
            energy: 0.0,
            eta_im: 0.01,
            g_values: Vec::new(),
            offset: 8,
            r_max: 24,
            x_max: 24,
            boundary_margin: 8,
            apriori_c: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinamiSpec {
    pub eps: Vec<f64>,
}

impl Default for MinamiSpec {
    fn default() -> Self {
        MinamiSpec { eps: vec![1e-2, 1e-3] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrelatorSpec {
    /// Each r gives the pair x = y = r.
    pub distances: Vec<u64>,
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
}

impl Default for CorrelatorSpec {
    fn default() -> Self {
        CorrelatorSpec {
            distances: vec![4, 8, 12, 16],
            t_min: 1e-2,
            t_max: 1e12,
            points: 600,
        }
    }
}

/// One experiment: model, box, seeds and the settings of its kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub model: ModelSpec,
    #[serde(rename = "box")]
    pub lattice: BoxSpec,
    #[serde(default)]
    pub seeds: SeedSpec,
    #[serde(default)]
    pub spectrum: SpectrumSpec,
    #[serde(default)]
    pub matching: MatchSpec,
    #[serde(default)]
    pub tunnel: TunnelSpec,
    #[serde(default)]
    pub greens: GreensSpec,
    #[serde(default)]
    pub minami: MinamiSpec,
    #[serde(default)]
    pub correlator: CorrelatorSpec,
}

fn invalid(field: &str, message: impl Into<String>) -> HarnessError {
    HarnessError::Validation {
        field: field.to_string(),
        message: message.into(),
    }
}

fn finite(field: &str, v: f64) -> Result<(), HarnessError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite, got {v}")))
    }
}

fn positive(field: &str, v: f64) -> Result<(), HarnessError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be positive, got {v}")))
    }
}

impl ExperimentConfig {
    /// Minimal config of the given kind on a centered box.
    pub fn new(kind: ExperimentKind, gamma: f64, g: f64, radius: u64) -> Self {
        ExperimentConfig {
            kind,
            output_dir: None,
            model: ModelSpec {
                dim: 1,
                gamma,
                g,
                disorder: DisorderLaw::default(),
                zeta: Vec::new(),
            },
            lattice: BoxSpec { radius, center: None },
            seeds: SeedSpec::default(),
            spectrum: SpectrumSpec::default(),
            matching: MatchSpec::default(),
            tunnel: TunnelSpec::default(),
            greens: GreensSpec::default(),
            minami: MinamiSpec::default(),
            correlator: CorrelatorSpec::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| invalid("config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid("config", format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String, HarnessError> {
        toml::to_string(self).map_err(|e| HarnessError::Internal(e.to_string()))
    }

    /// sha256 of the rendered config without the output directory, first 16 hex digits.
    pub fn hash(&self) -> Result<String, HarnessError> {
        let mut c = self.clone();
        c.output_dir = None;
        let digest = Sha256::digest(c.to_toml()?.as_bytes());
        Ok(hex::encode(&digest[..8]))
    }

    pub fn lattice_box(&self) -> Result<LatticeBox, HarnessError> {
        let center = match &self.lattice.center {
            Some(c) => Site::new(c.clone()),
            None => Site::origin(self.model.dim),
        };
        LatticeBox::new(center, self.lattice.radius).map_err(|e| invalid("box", e.to_string()))
    }

    pub fn zeta(&self) -> Result<RankOneProfile, HarnessError> {
        if self.model.zeta.is_empty() {
            return Ok(RankOneProfile::delta_origin(self.model.dim));
        }
        RankOneProfile::normalized(self.model.zeta.iter().map(|z| (Site::new(z.site.clone()), z.amplitude)))
            .map_err(|e| invalid("model.zeta", e.to_string()))
    }

    pub fn params(&self) -> Result<ModelParams, HarnessError> {
        Ok(ModelParams::new(self.model.gamma, self.model.g, self.zeta()?))
    }

    pub fn seed_list(&self) -> Vec<u64> {
        match &self.seeds.list {
            Some(l) => l.clone(),
            None => (0..self.seeds.n_seeds as u64)
                .map(|i| derive_seed(self.seeds.base_seed, i))
                .collect(),
        }
    }

    pub fn g_values(&self) -> Vec<f64> {
        if self.greens.g_values.is_empty() {
            vec![self.model.g]
        } else {
            self.greens.g_values.clone()
        }
    }

    /// Field-level checks of every numeric range the selected kind uses.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let m = &self.model;
        if m.dim == 0 {
            return Err(invalid("model.dim", "must be at least 1"));
        }
        finite("model.gamma", m.gamma)?;
        finite("model.g", m.g)?;
        m.disorder
            .validate()
            .map_err(|e| invalid("model.disorder", e.to_string()))?;
        for (k, z) in m.zeta.iter().enumerate() {
            if z.site.len() != m.dim {
                return Err(invalid(&format!("model.zeta[{k}].site"), format!("expected {} coordinates", m.dim)));
            }
            finite(&format!("model.zeta[{k}].amplitude"), z.amplitude)?;
        }
        self.zeta()?;
        if let Some(c) = &self.lattice.center {
            if c.len() != m.dim {
                return Err(invalid("box.center", format!("expected {} coordinates", m.dim)));
            }
        }
        let lattice = self.lattice_box()?;
        let sites = lattice.len();
        let spin_dim = 2 * sites;
        let cap_dim = if self.kind == ExperimentKind::Minami { sites } else { spin_dim };
        if cap_dim > MAX_DENSE_DIM {
            return Err(invalid("box.radius", format!("dimension {cap_dim} exceeds the dense cap {MAX_DENSE_DIM}")));
        }
        if sites < 2 {
            return Err(invalid("box.radius", "box needs at least 2 sites"));
        }
        let seeds = self.seed_list();
        if seeds.is_empty() {
            return Err(invalid("seeds", "no seeds configured"));
        }
        let listed = self.seeds.list.iter().flatten();
        if listed.chain([&self.seeds.base_seed]).any(|&s| s > i64::MAX as u64) {
            return Err(invalid("seeds", "seeds must not exceed 2^63 - 1"));
        }
        let mut seen = HashSet::with_capacity(seeds.len());
        for s in &seeds {
            if !seen.insert(*s) {
                return Err(invalid("seeds", format!("seed {s} occurs twice")));
            }
        }
        match self.kind {
            ExperimentKind::Spectrum => {}
            ExperimentKind::Match => {
                positive("matching.eps", self.matching.eps)?;
                if let Some(s) = &self.matching.scale {
                    if s.u0.len() != m.dim {
                        return Err(invalid("matching.scale.u0", format!("expected {} coordinates", m.dim)));
                    }
                    if !(0.0..1.0).contains(&s.beta) {
                        return Err(invalid("matching.scale.beta", "must lie in [0, 1)"));
                    }
                    if !(s.alpha > 0.0 && s.alpha < 1.0) {
                        return Err(invalid("matching.scale.alpha", "must lie in (0, 1)"));
                    }
                    if !(s.p > 1.0 && s.p < 2.0) {
                        return Err(invalid("matching.scale.p", "must lie in (1, 2)"));
                    }
                }
            }
            ExperimentKind::Tunnel => {
                let t = &self.tunnel;
                positive("tunnel.eps", t.eps)?;
                if !(t.min_overlap > 0.0 && t.min_overlap <= 1.0) {
                    return Err(invalid("tunnel.min_overlap", "must lie in (0, 1]"));
                }
                if t.min_gap.is_nan() || t.min_gap < 0.0 {
                    return Err(invalid("tunnel.min_gap", "must be nonnegative"));
                }
                if t.grid.points_per_tau == 0 {
                    return Err(invalid("tunnel.grid.points_per_tau", "must be positive"));
                }
                positive("tunnel.grid.window_eps", t.grid.window_eps)?;
                positive("tunnel.grid.fallback_horizon", t.grid.fallback_horizon)?;
            }
            ExperimentKind::Greens => {
                let gs = &self.greens;
                if !(gs.s > 0.0 && gs.s < 1.0) {
                    return Err(invalid("greens.s", format!("must lie in (0, 1), got {}", gs.s)));
                }
                finite("greens.energy", gs.energy)?;
                positive("greens.eta_im", gs.eta_im)?;
                for g in &gs.g_values {
                    finite("greens.g_values", *g)?;
                }
                if gs.offset < 0 || gs.r_max < 0 || gs.x_max < 0 {
                    return Err(invalid("greens", "offset, r_max and x_max must be nonnegative"));
                }
                if m.dim != 1 {
                    return Err(invalid("model.dim", "greens scans use the one-dimensional pair list"));
                }
                if let Some(c) = gs.apriori_c {
                    positive("greens.apriori_c", c)?;
                }
            }
            ExperimentKind::Minami => {
                if self.minami.eps.is_empty() {
                    return Err(invalid("minami.eps", "list is empty"));
                }
                for e in &self.minami.eps {
                    positive("minami.eps", *e)?;
                }
            }
            ExperimentKind::Correlator => {
                let c = &self.correlator;
                if m.dim != 1 {
                    return Err(invalid("model.dim", "correlator distances are one-dimensional"));
                }
                positive("correlator.t_min", c.t_min)?;
                if !(c.t_max > c.t_min && c.t_max.is_finite()) {
                    return Err(invalid("correlator.t_max", "must exceed t_min"));
                }
                if c.points < 2 {
                    return Err(invalid("correlator.points", "need at least 2"));
                }
                for r in &c.distances {
                    let x = Site::new(vec![*r as i64]);
                    if !lattice.contains(&x) {
                        return Err(invalid("correlator.distances", format!("site {r} lies outside the box")));
                    }
                }
            }
        }
        Ok(())
    }
}
