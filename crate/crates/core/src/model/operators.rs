//! Dense assembly of H = γΔ + V, the rank-one family H_g = H + g|ζ⟩⟨ζ| and the
//! spin Hamiltonian h_g = H ⊗ 1 + g|ζ⟩⟨ζ| ⊗ σ¹ on a lattice box with Dirichlet
//! boundary conditions.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{LatticeBox, ModelError, Potential, Site, Spin, SpinSite};

/// Largest matrix dimension the dense pipeline accepts.
pub const MAX_DENSE_DIM: usize = 4096;

/// Unit vector ζ with finite support.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankOneProfile {
    amplitudes: BTreeMap<Site, f64>,
}

impl RankOneProfile {
    /// ζ = δ_0.
    pub fn delta_origin(dim: usize) -> Self {
        RankOneProfile::delta(Site::origin(dim))
    }

    pub fn delta(x: Site) -> Self {
        RankOneProfile {
            amplitudes: BTreeMap::from([(x, 1.0)]),
        }
    }

    /// Requires |‖ζ‖₂ − 1| ≤ 1e−12.
    pub fn new(amplitudes: impl IntoIterator<Item = (Site, f64)>) -> Result<Self, ModelError> {
        let amplitudes: BTreeMap<Site, f64> =
            amplitudes.into_iter().filter(|(_, a)| *a != 0.0).collect();
        check_dims(amplitudes.keys())?;
        let norm = amplitudes.values().map(|a| a * a).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(ModelError::ZetaNotNormalized(norm));
        }
        Ok(RankOneProfile { amplitudes })
    }

    /// Rescales the given amplitudes to unit norm.
    pub fn normalized(amplitudes: impl IntoIterator<Item = (Site, f64)>) -> Result<Self, ModelError> {
        let amplitudes: BTreeMap<Site, f64> =
            amplitudes.into_iter().filter(|(_, a)| *a != 0.0).collect();
        check_dims(amplitudes.keys())?;
        let norm = amplitudes.values().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(ModelError::ZetaNotNormalized(norm));
        }
        Ok(RankOneProfile {
            amplitudes: amplitudes.into_iter().map(|(k, a)| (k, a / norm)).collect(),
        })
    }

    pub fn support(&self) -> impl Iterator<Item = &Site> {
        self.amplitudes.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Site, f64)> {
        self.amplitudes.iter().map(|(k, a)| (k, *a))
    }

    pub fn amplitude(&self, x: &Site) -> f64 {
        self.amplitudes.get(x).copied().unwrap_or(0.0)
    }

    pub fn dim(&self) -> Option<usize> {
        self.amplitudes.keys().next().map(Site::dim)
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.values().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn intersects(&self, lattice: &LatticeBox) -> bool {
        self.support().any(|x| lattice.contains(x))
    }

    /// ℓ¹ distance from `x` to the support.
    pub fn distance_to_support(&self, x: &Site) -> u64 {
        self.support().map(|u| u.l1_dist(x)).min().unwrap_or(0)
    }

    /// ζ as a dense vector on `lattice`; the support must lie inside the box.
    pub fn on_box(&self, lattice: &LatticeBox) -> Result<Vec<f64>, ModelError> {
        let mut v = vec![0.0; lattice.len()];
        for (x, a) in self.iter() {
            let i = lattice
                .index_of(x)
                .ok_or_else(|| ModelError::ZetaOutsideBox(x.clone()))?;
            v[i] = a;
        }
        Ok(v)
    }
}

fn check_dims<'a>(mut sites: impl Iterator<Item = &'a Site>) -> Result<(), ModelError> {
    if let Some(first) = sites.next() {
        let d = first.dim();
        for s in sites {
            if s.dim() != d {
                return Err(ModelError::DimensionMismatch {
                    expected: d,
                    found: s.dim(),
                });
            }
        }
    }
    Ok(())
}

/// Hopping γ, spin coupling g and rank-one profile ζ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub gamma: f64,
    pub g: f64,
    pub zeta: RankOneProfile,
}

impl ModelParams {
    pub fn new(gamma: f64, g: f64, zeta: RankOneProfile) -> Self {
        ModelParams { gamma, g, zeta }
    }

    pub fn with_g(&self, g: f64) -> Self {
        ModelParams {
            gamma: self.gamma,
            g,
            zeta: self.zeta.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorKind {
    /// γΔ + V.
    Anderson,
    /// γΔ + V + g|ζ⟩⟨ζ|; the coupling is recorded.
    RankOne,
    /// The projector |ζ⟩⟨ζ| itself.
    Projector,
    /// Spin Hamiltonian h_g on the doubled lattice.
    Spin,
    /// P_Λ A P_Λ of a parent operator.
    Restriction,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    /// One entry per box site, in enumeration order.
    Sites,
    /// Spin-up block followed by spin-down block, each in enumeration order.
    SpinSites,
}

/// A real symmetric operator on a box, together with its basis labels.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    pub kind: OperatorKind,
    pub basis: Basis,
    pub lattice: LatticeBox,
    pub matrix: DMatrix<f64>,
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Basis index of a (site, spin) label. Spinless operators only accept spin up.
    pub fn index_of(&self, s: &SpinSite) -> Option<usize> {
        let i = self.lattice.index_of(&s.x)?;
        match self.basis {
            Basis::Sites => (s.spin == Spin::Up).then_some(i),
            Basis::SpinSites => Some(s.spin.block() * self.lattice.len() + i),
        }
    }

    pub fn label_of(&self, index: usize) -> SpinSite {
        let n = self.lattice.len();
        match self.basis {
            Basis::Sites => SpinSite::new(self.lattice.site_at(index), Spin::Up),
            Basis::SpinSites => {
                let spin = if index < n { Spin::Up } else { Spin::Down };
                SpinSite::new(self.lattice.site_at(index % n), spin)
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_exactly_symmetric(&self) -> bool {
        self.matrix == self.matrix.transpose()
    }

    /// Dirichlet restriction P_Λ A P_Λ to a sub-box, expressed in the sub-box basis.
    pub fn restrict(&self, sub: &LatticeBox) -> Result<OperatorMatrix, ModelError> {
        if !self.lattice.contains_box(sub) {
            return Err(ModelError::BoxNotContained {
                inner: sub.to_string(),
                outer: self.lattice.to_string(),
            });
        }
        let map: Vec<usize> = sub
            .sites()
            .map(|x| self.lattice.index_of(&x).expect("contained"))
            .collect();
        let idx: Vec<usize> = match self.basis {
            Basis::Sites => map,
            Basis::SpinSites => {
                let n = self.lattice.len();
                map.iter().copied().chain(map.iter().map(|i| i + n)).collect()
            }
        };
        let m = DMatrix::from_fn(idx.len(), idx.len(), |r, c| self.matrix[(idx[r], idx[c])]);
        Ok(OperatorMatrix {
            kind: OperatorKind::Restriction,
            basis: self.basis,
            lattice: sub.clone(),
            matrix: m,
        })
    }
}

fn check_dim(dim: usize) -> Result<(), ModelError> {
    if dim > MAX_DENSE_DIM {
        Err(ModelError::DimensionCap {
            dim,
            cap: MAX_DENSE_DIM,
        })
    } else {
        Ok(())
    }
}

fn anderson_matrix(lattice: &LatticeBox, gamma: f64, v: &Potential) -> Result<DMatrix<f64>, ModelError> {
    let n = lattice.len();
    check_dim(n)?;
    let diag = v.on_box(lattice)?;
    let mut m = DMatrix::zeros(n, n);
    for (i, vi) in diag.iter().enumerate() {
        m[(i, i)] = *vi;
    }
    if gamma != 0.0 {
        for (i, j) in lattice.neighbor_pairs() {
            m[(i, j)] = gamma;
            m[(j, i)] = gamma;
        }
    }
    Ok(m)
}

/// H = γΔ + V with the centered Laplacian (no diagonal term) and hopping across
/// the box boundary dropped.
pub fn build_anderson(lattice: &LatticeBox, gamma: f64, v: &Potential) -> Result<OperatorMatrix, ModelError> {
    Ok(OperatorMatrix {
        kind: OperatorKind::Anderson,
        basis: Basis::Sites,
        lattice: lattice.clone(),
        matrix: anderson_matrix(lattice, gamma, v)?,
    })
}

/// D = |ζ⟩⟨ζ| on the box.
pub fn build_rank_one(lattice: &LatticeBox, zeta: &RankOneProfile) -> Result<OperatorMatrix, ModelError> {
    check_dim(lattice.len())?;
    let z = zeta.on_box(lattice)?;
    let n = z.len();
    Ok(OperatorMatrix {
        kind: OperatorKind::Projector,
        basis: Basis::Sites,
        lattice: lattice.clone(),
        matrix: DMatrix::from_fn(n, n, |r, c| z[r] * z[c]),
    })
}

/// H_g = γΔ + V + g|ζ⟩⟨ζ|.
pub fn build_rank_one_family(
    lattice: &LatticeBox,
    params: &ModelParams,
    v: &Potential,
) -> Result<OperatorMatrix, ModelError> {
    let mut m = anderson_matrix(lattice, params.gamma, v)?;
    if params.g != 0.0 {
        let z = params.zeta.on_box(lattice)?;
        let support: Vec<usize> = (0..z.len()).filter(|&i| z[i] != 0.0).collect();
        for &r in &support {
            for &c in &support {
                m[(r, c)] += params.g * z[r] * z[c];
            }
        }
    } else {
        params.zeta.on_box(lattice)?;
    }
    Ok(OperatorMatrix {
        kind: OperatorKind::RankOne,
        basis: Basis::Sites,
        lattice: lattice.clone(),
        matrix: m,
    })
}

/// h_g = H ⊗ 1 + g|ζ⟩⟨ζ| ⊗ σ¹ on the spin-site basis (2N × 2N).
pub fn build_spin_hamiltonian(
    lattice: &LatticeBox,
    params: &ModelParams,
    v: &Potential,
) -> Result<OperatorMatrix, ModelError> {
    let n = lattice.len();
    check_dim(2 * n)?;
    let h = anderson_matrix(lattice, params.gamma, v)?;
    let z = params.zeta.on_box(lattice)?;
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(&h);
    m.view_mut((n, n), (n, n)).copy_from(&h);
    if params.g != 0.0 {
        let support: Vec<usize> = (0..n).filter(|&i| z[i] != 0.0).collect();
        for &r in &support {
            for &c in &support {
                let w = params.g * z[r] * z[c];
                m[(r, n + c)] = w;
                m[(n + r, c)] = w;
            }
        }
    }
    Ok(OperatorMatrix {
        kind: OperatorKind::Spin,
        basis: Basis::SpinSites,
        lattice: lattice.clone(),
        matrix: m,
    })
}

/// Permutation swapping the two spin blocks (σ¹ on the spin coordinate).
pub fn spin_flip_matrix(n_sites: usize) -> DMatrix<f64> {
    let mut f = DMatrix::zeros(2 * n_sites, 2 * n_sites);
    for i in 0..n_sites {
        f[(i, n_sites + i)] = 1.0;
        f[(n_sites + i, i)] = 1.0;
    }
    f
}

/// ‖[h, F]‖_max for the spin flip F.
pub fn flip_commutator_norm(h: &OperatorMatrix) -> f64 {
    let f = spin_flip_matrix(h.lattice.len());
    let c = &h.matrix * &f - &f * &h.matrix;
    c.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Isometry |x⟩ ↦ (|x,1⟩ ± |x,−1⟩)/√2 as a 2N × N matrix.
pub fn sector_isometry(n_sites: usize, sign: f64) -> DMatrix<f64> {
    let mut u = DMatrix::zeros(2 * n_sites, n_sites);
    for i in 0..n_sites {
        u[(i, i)] = FRAC_1_SQRT_2;
        u[(n_sites + i, i)] = sign * FRAC_1_SQRT_2;
    }
    u
}

/// max over ± of ‖h_g U_± − U_± H_{±g}‖_max.
pub fn spin_decomposition_check(
    lattice: &LatticeBox,
    params: &ModelParams,
    v: &Potential,
) -> Result<f64, ModelError> {
    let h = build_spin_hamiltonian(lattice, params, v)?;
    let n = lattice.len();
    let mut worst = 0.0f64;
    for sign in [1.0, -1.0] {
        let sector = build_rank_one_family(lattice, &params.with_g(sign * params.g), v)?;
        let u = sector_isometry(n, sign);
        let d = &h.matrix * &u - &u * &sector.matrix;
        worst = worst.max(d.iter().fold(0.0, |m, x| m.max(x.abs())));
    }
    Ok(worst)
}
