use nalgebra::{DMatrix, DVector, LU};
use serde::{Deserialize, Serialize};

use super::GreensError;
use crate::dynamics::C64;
use crate::model::{Basis, OperatorMatrix, SpinSite};
use crate::spectral::EigenSystem;

/// G_z(target; source) = ⟨target|(h − z)^{−1}|source⟩ with z = E + iη.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolventQuery {
    pub energy: f64,
    pub eta_im: f64,
    pub source: SpinSite,
    pub target: SpinSite,
}

impl ResolventQuery {
    pub fn new(energy: f64, eta_im: f64, target: SpinSite, source: SpinSite) -> Result<Self, GreensError> {
        check_eta(eta_im)?;
        Ok(ResolventQuery {
            energy,
            eta_im,
            source,
            target,
        })
    }

    pub fn z(&self) -> C64 {
        C64::new(self.energy, self.eta_im)
    }
}

pub(crate) fn check_eta(eta_im: f64) -> Result<(), GreensError> {
    if eta_im > 0.0 && eta_im.is_finite() {
        Ok(())
    } else {
        Err(GreensError::NonPositiveEta(eta_im))
    }
}

/// LU factorization of A − z for repeated column solves.
pub struct Resolvent {
    lu: LU<C64, nalgebra::Dyn, nalgebra::Dyn>,
    dim: usize,
}

impl Resolvent {
    pub fn new(a: &DMatrix<f64>, z: C64) -> Result<Self, GreensError> {
        check_eta(z.im)?;
        let n = a.nrows();
        let m = DMatrix::from_fn(n, n, |r, c| {
            let v = C64::new(a[(r, c)], 0.0);
            if r == c {
                v - z
            } else {
                v
            }
        });
        Ok(Resolvent { lu: m.lu(), dim: n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// (A − z)^{−1} e_j.
    pub fn column(&self, j: usize) -> Result<DVector<C64>, GreensError> {
        let mut e = DVector::zeros(self.dim);
        e[j] = C64::new(1.0, 0.0);
        self.lu.solve(&e).ok_or(GreensError::Singular)
    }

    pub fn matrix(&self) -> Result<DMatrix<C64>, GreensError> {
        self.lu.try_inverse().ok_or(GreensError::Singular)
    }
}

fn index(h: &OperatorMatrix, s: &SpinSite) -> Result<usize, GreensError> {
    h.index_of(s).ok_or_else(|| GreensError::NotInBasis(format!("({}, {})", s.x, s.spin.sign())))
}

/// Single resolvent entry by a direct linear solve.
pub fn greens_entry(h: &OperatorMatrix, q: &ResolventQuery) -> Result<C64, GreensError> {
    let (row, col) = (index(h, &q.target)?, index(h, &q.source)?);
    let r = Resolvent::new(&h.matrix, q.z())?;
    Ok(r.column(col)?[row])
}

/// Σ_n ⟨target|v_n⟩⟨v_n|source⟩/(λ_n − z), for cross-validation.
pub fn greens_entry_spectral(h: &OperatorMatrix, es: &EigenSystem, q: &ResolventQuery) -> Result<C64, GreensError> {
    check_eta(q.eta_im)?;
    let (row, col) = (index(h, &q.target)?, index(h, &q.source)?);
    let v = es.vectors();
    let z = q.z();
    Ok((0..es.dim())
        .map(|n| C64::new(v[(row, n)] * v[(col, n)], 0.0) / (C64::new(es.eigenvalue(n), 0.0) - z))
        .sum())
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.norm()))
}

/// ‖R_g − R_0 + R_0 (h_g − h_0) R_g‖_max; h_g − h_0 = g𝔇 for the spin Hamiltonians.
pub fn resolvent_identity_check(h_g: &OperatorMatrix, h_0: &OperatorMatrix, z: C64) -> Result<f64, GreensError> {
    check_eta(z.im)?;
    if h_g.dim() != h_0.dim() {
        return Err(GreensError::DimensionMismatch(h_g.dim(), h_0.dim()));
    }
    let rg = Resolvent::new(&h_g.matrix, z)?.matrix()?;
    let r0 = Resolvent::new(&h_0.matrix, z)?.matrix()?;
    let diff = (&h_g.matrix - &h_0.matrix).map(|v| C64::new(v, 0.0));
    let dev = &rg - &r0 + &r0 * diff * &rg;
    Ok(max_abs(&dev))
}

/// max over x, y of |⟨x,1|R_g|y,−1⟩ + g⟨x|(H−z)^{−1}|ζ⟩⟨ζ,−1|R_g|y,−1⟩|.
pub fn cross_spin_factorization_check(
    h_g: &OperatorMatrix,
    h: &OperatorMatrix,
    g: f64,
    zeta: &[f64],
    z: C64,
) -> Result<f64, GreensError> {
    if h_g.basis != Basis::SpinSites || h.basis != Basis::Sites {
        return Err(GreensError::NotInBasis("expected h_g on spin sites and H on sites".into()));
    }
    let n = h.dim();
    if h_g.dim() != 2 * n || zeta.len() != n {
        return Err(GreensError::DimensionMismatch(h_g.dim(), 2 * n));
    }
    let rg = Resolvent::new(&h_g.matrix, z)?.matrix()?;
    let rh = Resolvent::new(&h.matrix, z)?.matrix()?;
    let zc = DVector::from_iterator(n, zeta.iter().map(|v| C64::new(*v, 0.0)));
    // ⟨x|(H−z)^{−1}|ζ⟩ for every x
    let left = &rh * &zc;
    // ⟨ζ,−1|R_g|y,−1⟩ for every y
    let down_block = rg.view((n, n), (n, n));
    let right = down_block.transpose() * &zc;
    let mut worst = 0.0f64;
    for x in 0..n {
        for y in 0..n {
            let lhs = rg[(x, n + y)];
            let rhs = -left[x] * right[y] * g;
            worst = worst.max((lhs - rhs).norm());
        }
    }
    Ok(worst)
}
