use nalgebra::{Complex, DMatrix, DVector};

use super::DynamicsError;
use crate::matching::SectorSystems;
use crate::model::{sector_isometry, Basis, LatticeBox, OperatorKind, SpinSite};
use crate::spectral::{EigenSystem, OperatorDescriptor};

pub type C64 = Complex<f64>;

/// Eigen-system of h_g assembled from the two sectors: U_+φ⁺_n and U_−φ⁻_m.
///
/// Eigenvalue splittings between the sectors are resolved to the accuracy of each sector
/// separately, and g = 0 gives exactly degenerate pairs.
pub fn spin_eigensystem(sectors: &SectorSystems) -> EigenSystem {
    let n = sectors.lattice.len();
    let up = sector_isometry(n, 1.0) * sectors.plus.vectors();
    let down = sector_isometry(n, -1.0) * sectors.minus.vectors();
    let mut vectors = DMatrix::zeros(2 * n, 2 * n);
    vectors.view_mut((0, 0), (2 * n, n)).copy_from(&up);
    vectors.view_mut((0, n), (2 * n, n)).copy_from(&down);
    let values: Vec<f64> = sectors
        .plus
        .eigenvalues()
        .iter()
        .chain(sectors.minus.eigenvalues().iter())
        .copied()
        .collect();
    let residual = sectors.plus.residual_max().max(sectors.minus.residual_max());
    let es = EigenSystem::from_parts(
        values,
        vectors,
        OperatorDescriptor {
            kind: Some(OperatorKind::Spin),
            basis: Some(Basis::SpinSites),
            lattice: Some(sectors.lattice.clone()),
            dim: 2 * n,
        },
        None,
    );
    es.with_residual(residual)
}

/// Basis vector |x, i⟩ in the spin-site basis of `lattice`.
pub fn spin_basis_vector(lattice: &LatticeBox, s: &SpinSite) -> Result<DVector<f64>, DynamicsError> {
    let i = lattice
        .index_of(&s.x)
        .ok_or_else(|| DynamicsError::OutsideBox(s.x.to_string()))?;
    let n = lattice.len();
    let mut v = DVector::zeros(2 * n);
    v[s.spin.block() * n + i] = 1.0;
    Ok(v)
}

/// |φ, i⟩ = φ ⊗ |i⟩ for a site-space vector φ.
pub fn spin_lift(phi: &DVector<f64>, spin: crate::model::Spin) -> DVector<f64> {
    let n = phi.len();
    let mut v = DVector::zeros(2 * n);
    v.rows_mut(spin.block() * n, n).copy_from(phi);
    v
}

/// e^{−itA}ψ₀ through the spectral representation of a fixed initial state.
#[derive(Clone, Debug)]
pub struct Propagator<'a> {
    es: &'a EigenSystem,
    coeffs: DVector<f64>,
}

impl<'a> Propagator<'a> {
    pub fn new(es: &'a EigenSystem, psi0: &DVector<f64>) -> Result<Self, DynamicsError> {
        if psi0.len() != es.dim() {
            return Err(DynamicsError::DimensionMismatch {
                expected: es.dim(),
                found: psi0.len(),
            });
        }
        Ok(Propagator {
            es,
            coeffs: es.vectors().tr_mul(psi0),
        })
    }

    fn phased(&self, t: f64) -> DVector<C64> {
        DVector::from_iterator(
            self.coeffs.len(),
            self.coeffs
                .iter()
                .zip(self.es.eigenvalues().iter())
                .map(|(c, l)| C64::from_polar(*c, -t * l)),
        )
    }

    /// Full state ψ(t).
    pub fn state(&self, t: f64) -> DVector<C64> {
        let p = self.phased(t);
        let re = self.es.vectors() * p.map(|z| z.re);
        let im = self.es.vectors() * p.map(|z| z.im);
        re.zip_map(&im, C64::new)
    }

    /// Components of ψ(t) on the listed basis rows.
    pub fn rows(&self, rows: &[usize], t: f64) -> Vec<C64> {
        let p = self.phased(t);
        let v = self.es.vectors();
        rows.iter()
            .map(|&r| v.row(r).iter().zip(p.iter()).map(|(a, b)| b * *a).sum())
            .collect()
    }

    /// Coefficients of a fixed target χ in the eigenbasis, for repeated overlaps ⟨χ|ψ(t)⟩.
    pub fn target(&self, chi: &DVector<f64>) -> DVector<f64> {
        self.es.vectors().tr_mul(chi)
    }

    pub fn overlap(&self, target_coeffs: &DVector<f64>, t: f64) -> C64 {
        target_coeffs
            .iter()
            .zip(self.phased(t).iter())
            .map(|(a, b)| b * *a)
            .sum()
    }
}

/// ψ(t) = Σ_n e^{−itλ_n}⟨v_n,ψ₀⟩ v_n.
pub fn evolve(es: &EigenSystem, psi0: &DVector<f64>, t: f64) -> Result<DVector<C64>, DynamicsError> {
    Ok(Propagator::new(es, psi0)?.state(t))
}

/// max over eigenvectors and sites of ||Ψ(x,+1)| − |Ψ(x,−1)||; meaningful only for simple spectra.
pub fn spin_balance_deviation(es: &EigenSystem, n_sites: usize) -> f64 {
    let v = es.vectors();
    let mut worst = 0.0f64;
    for c in 0..v.ncols() {
        for x in 0..n_sites {
            worst = worst.max((v[(x, c)].abs() - v[(n_sites + x, c)].abs()).abs());
        }
    }
    worst
}
