//! I.i.d. on-site disorder, sampled per site from a hash of (seed, coordinate).
//!
//! Because every site owns its own stream, a potential drawn on Λ_L(u) agrees with
//! the one drawn on any larger box on their common sites.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{LatticeBox, ModelError, Site};

/// Single-site distribution of V_x.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum DisorderLaw {
    /// Uniform density on [−W, W].
    Uniform { half_width: f64 },
    /// Piecewise-constant density on equal bins of [lo, hi].
    Table { lo: f64, hi: f64, density: Vec<f64> },
}

impl Default for DisorderLaw {
    fn default() -> Self {
        DisorderLaw::Uniform { half_width: 0.5 }
    }
}

impl DisorderLaw {
    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            DisorderLaw::Uniform { half_width } => {
                if !(half_width.is_finite() && *half_width > 0.0) {
                    return Err(ModelError::InvalidDisorder(format!(
                        "uniform half-width must be positive, got {half_width}"
                    )));
                }
            }
            DisorderLaw::Table { lo, hi, density } => {
                if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                    return Err(ModelError::InvalidDisorder(format!(
                        "table support [{lo}, {hi}] is empty"
                    )));
                }
                if density.is_empty() || density.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                    return Err(ModelError::InvalidDisorder(
                        "density table must hold finite nonnegative values".into(),
                    ));
                }
                let width = (hi - lo) / density.len() as f64;
                let mass: f64 = density.iter().sum::<f64>() * width;
                if (mass - 1.0).abs() > 1e-9 {
                    return Err(ModelError::InvalidDisorder(format!(
                        "density integrates to {mass}, expected 1"
                    )));
                }
            }
        }
        if self.density_sup() <= 0.0 {
            return Err(ModelError::InvalidDisorder("density sup is zero".into()));
        }
        Ok(())
    }

    /// ‖ρ‖_∞.
    pub fn density_sup(&self) -> f64 {
        match self {
            DisorderLaw::Uniform { half_width } => 0.5 / half_width,
            DisorderLaw::Table { density, .. } => density.iter().cloned().fold(0.0, f64::max),
        }
    }

    /// Support interval of the density.
    pub fn support(&self) -> (f64, f64) {
        match self {
            DisorderLaw::Uniform { half_width } => (-half_width, *half_width),
            DisorderLaw::Table { lo, hi, .. } => (*lo, *hi),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            DisorderLaw::Uniform { .. } => 0.0,
            DisorderLaw::Table { lo, hi, density } => {
                let w = (hi - lo) / density.len() as f64;
                density
                    .iter()
                    .enumerate()
                    .map(|(k, p)| p * w * (lo + (k as f64 + 0.5) * w))
                    .sum()
            }
        }
    }

    /// Inverse CDF applied to a uniform variate in [0, 1).
    pub fn quantile(&self, u: f64) -> f64 {
        match self {
            DisorderLaw::Uniform { half_width } => half_width * (2.0 * u - 1.0),
            DisorderLaw::Table { lo, hi, density } => {
                let w = (hi - lo) / density.len() as f64;
                let mut acc = 0.0;
                for (k, p) in density.iter().enumerate() {
                    let mass = p * w;
                    if mass > 0.0 && u < acc + mass {
                        return lo + w * (k as f64 + (u - acc) / mass);
                    }
                    acc += mass;
                }
                *hi
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisorderSpec {
    pub law: DisorderLaw,
    pub seed: u64,
}

impl DisorderSpec {
    pub fn uniform(half_width: f64, seed: u64) -> Self {
        DisorderSpec {
            law: DisorderLaw::Uniform { half_width },
            seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        DisorderSpec {
            law: self.law.clone(),
            seed,
        }
    }

    pub fn density_sup(&self) -> f64 {
        self.law.density_sup()
    }
}

/// SplitMix64 finalizer.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn site_stream_seed(seed: u64, x: &Site) -> u64 {
    let mut h = mix64(seed ^ 0x5349_5445_5f56_0001);
    for &c in x.coords() {
        h = mix64(h ^ (c as u64));
    }
    mix64(h ^ x.dim() as u64)
}

/// Per-realization seed for ensemble member `index`.
pub fn derive_seed(base_seed: u64, index: u64) -> u64 {
    mix64(mix64(base_seed) ^ mix64(index.wrapping_add(0xA076_1D64_78BD_642F)))
}

/// Draw V_x for a single site.
pub fn sample_site(spec: &DisorderSpec, x: &Site) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(site_stream_seed(spec.seed, x));
    let u: f64 = rng.random();
    spec.law.quantile(u)
}

/// A realization of the potential: site → V_x.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Potential {
    values: HashMap<Site, f64>,
}

impl Potential {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Site, f64)>) -> Self {
        Potential {
            values: pairs.into_iter().collect(),
        }
    }

    /// Values listed in the box's enumeration order.
    pub fn from_box_values(lattice: &LatticeBox, values: &[f64]) -> Result<Self, ModelError> {
        if values.len() != lattice.len() {
            return Err(ModelError::InvalidPotential(format!(
                "{} values for a box of {} sites",
                values.len(),
                lattice.len()
            )));
        }
        Ok(Potential::from_pairs(lattice.sites().zip(values.iter().copied())))
    }

    pub fn get(&self, x: &Site) -> Option<f64> {
        self.values.get(x).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Values on `lattice` in enumeration order.
    pub fn on_box(&self, lattice: &LatticeBox) -> Result<Vec<f64>, ModelError> {
        lattice
            .sites()
            .map(|x| self.get(&x).ok_or(ModelError::MissingPotential(x)))
            .collect()
    }

    pub fn shifted(&self, c: f64) -> Potential {
        Potential {
            values: self.values.iter().map(|(k, v)| (k.clone(), v + c)).collect(),
        }
    }
}

/// One i.i.d. draw per site of the box.
pub fn sample_potential(lattice: &LatticeBox, spec: &DisorderSpec) -> Result<Potential, ModelError> {
    spec.law.validate()?;
    Ok(Potential::from_pairs(
        lattice.sites().map(|x| {
            let v = sample_site(spec, &x);
            (x, v)
        }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn deterministic_and_bounded() {
        let b = LatticeBox::centered(1, 50).unwrap();
        let spec = DisorderSpec::uniform(0.5, 42);
        let a = sample_potential(&b, &spec).unwrap();
        let c = sample_potential(&b, &spec).unwrap();
        assert_eq!(a, c);
        for x in b.sites() {
            let v = a.get(&x).unwrap();
            assert!((-0.5..=0.5).contains(&v));
        }
        let other = sample_potential(&b, &spec.with_seed(43)).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn uniform_mean_within_three_sigma() {
        // 10^4 sites, exact moments of U[-W, W]: mean 0, variance W^2/3.
        let b = LatticeBox::centered(2, 49).unwrap();
        assert!(b.len() >= 9_801);
        let w = 0.5;
        let pot = sample_potential(&b, &DisorderSpec::uniform(w, 7)).unwrap();
        let vals = pot.on_box(&b).unwrap();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let sigma = (w * w / 3.0f64).sqrt();
        assert!(mean.abs() <= 3.0 * sigma / n.sqrt(), "mean {mean}");
    }

    #[test]
    fn restriction_consistency() {
        let spec = DisorderSpec::uniform(0.5, 11);
        let small = LatticeBox::new(Site::new([3, -2]), 2).unwrap();
        let big = small.fattened(4).unwrap();
        let vs = sample_potential(&small, &spec).unwrap();
        let vb = sample_potential(&big, &spec).unwrap();
        for x in small.sites() {
            assert_eq!(vs.get(&x).unwrap().to_bits(), vb.get(&x).unwrap().to_bits());
        }
    }

    #[test]
    fn table_law_validation_and_sampling() {
        let law = DisorderLaw::Table {
            lo: -1.0,
            hi: 1.0,
            density: vec![0.25, 0.75, 0.75, 0.25],
        };
        law.validate().unwrap();
        assert_eq!(law.density_sup(), 0.75);
        assert_eq!(law.quantile(0.0), -1.0);
        assert!((law.quantile(0.5) - 0.0).abs() < 1e-12);
        let bad = DisorderLaw::Table {
            lo: -1.0,
            hi: 1.0,
            density: vec![0.25, 0.25],
        };
        assert!(bad.validate().is_err());
        assert!(DisorderLaw::Uniform { half_width: 0.0 }.validate().is_err());
    }

    #[test]
    fn missing_site_reported() {
        let b = LatticeBox::centered(1, 1).unwrap();
        let pot = Potential::from_pairs([(Site::new([0]), 0.1)]);
        assert!(matches!(pot.on_box(&b), Err(ModelError::MissingPotential(_))));
    }

    #[test]
    fn derived_seeds_distinct() {
        let seeds: HashSet<u64> = (0..100_000).map(|i| derive_seed(12345, i)).collect();
        assert_eq!(seeds.len(), 100_000);
    }
}
