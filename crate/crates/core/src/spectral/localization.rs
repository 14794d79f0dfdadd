//! Localization centers, SULE envelope fits and local eigenbasis projections.

use nalgebra::{DMatrix, DVectorView};
use serde::{Deserialize, Serialize};

use super::{EigenSystem, SpectralError};
use crate::model::{LatticeBox, Site};

/// Maximizer of x ↦ (1+|x|)^{d+1} |φ(x)|; the lexicographically smallest one on ties.
pub fn localization_center(phi: DVectorView<'_, f64>, lattice: &LatticeBox) -> Result<Site, SpectralError> {
    if phi.len() != lattice.len() {
        return Err(SpectralError::LengthMismatch {
            expected: lattice.len(),
            found: phi.len(),
        });
    }
    let exponent = lattice.dim() as i32 + 1;
    let mut best: Option<(f64, usize)> = None;
    // enumeration order is lexicographic, so keeping the first strict maximum breaks ties
    for (i, x) in lattice.sites().enumerate() {
        let w = (1.0 + x.l1_norm() as f64).powi(exponent) * phi[i].abs();
        if best.is_none_or(|(b, _)| w > b) {
            best = Some((w, i));
        }
    }
    match best {
        Some((w, i)) if w > 0.0 => Ok(lattice.site_at(i)),
        _ => Err(SpectralError::ZeroVector),
    }
}

/// Centers of every eigenvector of `es`, which must live on the sites of `lattice`.
pub fn localization_centers(es: &EigenSystem, lattice: &LatticeBox) -> Result<Vec<Site>, SpectralError> {
    (0..es.dim())
        .map(|i| localization_center(es.vector(i), lattice))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuleOptions {
    /// Amplitudes at or below this are excluded from the fit.
    pub amplitude_floor: f64,
    pub slope_cap: f64,
    /// RMS log-residual above which a fit is flagged as poor.
    pub residual_threshold: f64,
}

impl Default for SuleOptions {
    fn default() -> Self {
        SuleOptions {
            amplitude_floor: 1e-14,
            slope_cap: 50.0,
            residual_threshold: 6.0,
        }
    }
}

/// Least-squares envelope |φ_i(x)| ≈ A (1+|x_i|)^{d+1} e^{−ξ|x−x_i|}.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuleFit {
    /// Prefactor making the bound hold at every fitted point for the fitted ξ.
    pub sule_a: f64,
    /// Intercept of the regression line, e^{c}.
    pub a_regression: f64,
    pub sule_xi: f64,
    /// Root-mean-square residual of the log-amplitude regression.
    pub fit_residual: f64,
    pub cap_reached: bool,
    pub residual_ok: bool,
    pub n_points: usize,
}

pub fn sule_fit(
    vectors: &DMatrix<f64>,
    centers: &[Site],
    lattice: &LatticeBox,
    opts: SuleOptions,
) -> Result<SuleFit, SpectralError> {
    if vectors.nrows() != lattice.len() || centers.len() != vectors.ncols() {
        return Err(SpectralError::LengthMismatch {
            expected: lattice.len(),
            found: vectors.nrows(),
        });
    }
    let exponent = (lattice.dim() + 1) as f64;
    let sites: Vec<Site> = lattice.sites().collect();
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for (i, center) in centers.iter().enumerate() {
        let offset = exponent * (1.0 + center.l1_norm() as f64).ln();
        for (k, x) in sites.iter().enumerate() {
            let amp = vectors[(k, i)].abs();
            if amp > opts.amplitude_floor {
                pts.push((x.l1_dist(center) as f64, amp.ln() - offset));
            }
        }
    }
    if pts.len() < 2 {
        return Err(SpectralError::TooFewPoints(pts.len()));
    }
    let n = pts.len() as f64;
    let rbar = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ybar = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - rbar).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - rbar) * (p.1 - ybar)).sum();
    let (mut xi, mut cap_reached) = if sxx > 0.0 {
        (-sxy / sxx, false)
    } else {
        (opts.slope_cap, true)
    };
    if xi > opts.slope_cap {
        xi = opts.slope_cap;
        cap_reached = true;
    }
    xi = xi.max(0.0);
    let intercept = ybar + xi * rbar;
    let rss: f64 = pts.iter().map(|p| (p.1 - (intercept - xi * p.0)).powi(2)).sum();
    let envelope = pts
        .iter()
        .map(|p| p.1 + xi * p.0)
        .fold(f64::NEG_INFINITY, f64::max);
    let fit_residual = (rss / n).sqrt();
    Ok(SuleFit {
        sule_a: envelope.exp(),
        a_regression: intercept.exp(),
        sule_xi: xi,
        fit_residual,
        cap_reached,
        residual_ok: fit_residual <= opts.residual_threshold,
        n_points: pts.len(),
    })
}

/// Per-eigenvector centers plus the SULE fit for one realization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationProfile {
    pub centers: Vec<Site>,
    pub fit: SuleFit,
}

impl LocalizationProfile {
    pub fn compute(es: &EigenSystem, lattice: &LatticeBox, opts: SuleOptions) -> Result<Self, SpectralError> {
        let centers = localization_centers(es, lattice)?;
        let fit = sule_fit(es.vectors(), &centers, lattice, opts)?;
        Ok(LocalizationProfile { centers, fit })
    }
}

/// I_Λ = {i : x_i ∈ Λ} and the local spectrum Σ_Λ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalIndexSet {
    pub lattice: LatticeBox,
    pub indices: Vec<usize>,
    pub local_spectrum: Vec<f64>,
}

impl LocalIndexSet {
    pub fn new(es: &EigenSystem, centers: &[Site], region: &LatticeBox) -> Self {
        let indices: Vec<usize> = centers
            .iter()
            .enumerate()
            .filter(|(_, c)| region.contains(c))
            .map(|(i, _)| i)
            .collect();
        let local_spectrum = indices.iter().map(|&i| es.eigenvalue(i)).collect();
        LocalIndexSet {
            lattice: region.clone(),
            indices,
            local_spectrum,
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Operator norms and trace counts comparing P_Λ^{(g)} with the position projections
/// onto Λ± = Λ_{L±ℓ}(u).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalProjections {
    /// ‖(1 − P_{Λ⁺}) P_Λ^{(g)}‖
    pub norm_out: f64,
    /// ‖(1 − P_Λ^{(g)}) P_{Λ⁻}‖
    pub norm_in: f64,
    /// |I_Λ| = tr P_Λ^{(g)}
    pub count_lambda: usize,
    /// |Λ⁺|
    pub count_plus: usize,
    /// |Λ⁻| (zero when ℓ > L)
    pub count_minus: usize,
    /// tr P_{Λ⁺} P_Λ^{(g)}
    pub trace_plus_local: f64,
}

impl LocalProjections {
    /// α|Λ⁻| ≤ |I_Λ| ≤ α⁻¹|Λ⁺|.
    pub fn box_concentration_holds(&self, alpha: f64) -> bool {
        let c = self.count_lambda as f64;
        alpha * self.count_minus as f64 <= c && c <= self.count_plus as f64 / alpha
    }

    /// (1 − norm_out)·|I_Λ| ≤ tr P_{Λ⁺}P_Λ^{(g)} ≤ |Λ⁺|, with slack `tol`.
    pub fn trace_chain_holds(&self, tol: f64) -> bool {
        let lower = (1.0 - self.norm_out) * self.count_lambda as f64;
        lower <= self.trace_plus_local + tol && self.trace_plus_local <= self.count_plus as f64 + tol
    }
}

fn top_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn local_projections(
    es: &EigenSystem,
    centers: &[Site],
    host: &LatticeBox,
    region: &LatticeBox,
    ell: u64,
) -> Result<LocalProjections, SpectralError> {
    if es.vectors().nrows() != host.len() {
        return Err(SpectralError::LengthMismatch {
            expected: host.len(),
            found: es.vectors().nrows(),
        });
    }
    let plus = region.fattened(ell as i64)?;
    if !host.contains_box(&plus) {
        return Err(SpectralError::BoxEscapesHost {
            region: plus.to_string(),
            host: host.to_string(),
        });
    }
    let minus = region.fattened(-(ell as i64)).ok();
    let local = LocalIndexSet::new(es, centers, region);
    let k = local.len();
    let sites: Vec<Site> = host.sites().collect();
    let in_plus: Vec<bool> = sites.iter().map(|x| plus.contains(x)).collect();
    let minus_rows: Vec<usize> = match &minus {
        Some(m) => (0..sites.len()).filter(|&r| m.contains(&sites[r])).collect(),
        None => Vec::new(),
    };

    let phi = DMatrix::from_fn(host.len(), k, |r, c| es.vectors()[(r, local.indices[c])]);

    let out_rows: Vec<usize> = (0..sites.len()).filter(|&r| !in_plus[r]).collect();
    let phi_out = DMatrix::from_fn(out_rows.len(), k, |r, c| phi[(out_rows[r], c)]);
    let norm_out = top_eigenvalue(&(phi_out.transpose() * &phi_out)).max(0.0).sqrt();

    let b = DMatrix::from_fn(minus_rows.len(), k, |r, c| phi[(minus_rows[r], c)]);
    let m = minus_rows.len();
    let norm_in = if m == 0 {
        0.0
    } else {
        let complement = DMatrix::<f64>::identity(m, m) - &b * b.transpose();
        top_eigenvalue(&complement).max(0.0).sqrt()
    };

    let trace_plus_local: f64 = (0..sites.len())
        .filter(|&r| in_plus[r])
        .map(|r| phi.row(r).norm_squared())
        .sum();

    Ok(LocalProjections {
        norm_out,
        norm_in,
        count_lambda: k,
        count_plus: plus.len(),
        count_minus: minus.as_ref().map_or(0, LatticeBox::len),
        trace_plus_local,
    })
}

/// Participation ratio 1 / Σ_x |φ(x)|⁴ of a normalized vector.
pub fn participation_ratio(phi: DVectorView<'_, f64>) -> f64 {
    let s: f64 = phi.iter().map(|v| v.powi(4)).sum();
    if s > 0.0 {
        1.0 / s
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_anderson, sample_potential, DisorderSpec, Potential};
    use crate::spectral::{diagonalize, DEFAULT_EIGEN_TOL};
    use nalgebra::DVector;

    fn line(r: u64) -> LatticeBox {
        LatticeBox::centered(1, r).unwrap()
    }

    fn anderson_es(radius: u64, gamma: f64, seed: u64) -> (LatticeBox, EigenSystem) {
        let b = line(radius);
        let v = sample_potential(&b, &DisorderSpec::uniform(0.5, seed)).unwrap();
        let es = diagonalize(&build_anderson(&b, gamma, &v).unwrap(), DEFAULT_EIGEN_TOL).unwrap();
        (b, es)
    }

    #[test]
    fn delta_center() {
        let b = line(5);
        let mut v = DVector::zeros(11);
        v[8] = 1.0;
        assert_eq!(localization_center(v.column(0), &b).unwrap(), Site::new([3]));
    }

    #[test]
    fn tie_breaks_lexicographically() {
        let b = line(5);
        let mut v = DVector::zeros(11);
        v[3] = std::f64::consts::FRAC_1_SQRT_2; // x = -2
        v[7] = std::f64::consts::FRAC_1_SQRT_2; // x = 2
        assert_eq!(localization_center(v.column(0), &b).unwrap(), Site::new([-2]));
    }

    #[test]
    fn zero_vector_rejected() {
        let b = line(2);
        let v = DVector::zeros(5);
        assert!(matches!(
            localization_center(v.column(0), &b),
            Err(SpectralError::ZeroVector)
        ));
    }

    #[test]
    fn hopping_off_centers_are_support_sites() {
        let (b, es) = anderson_es(6, 0.0, 4);
        let centers = localization_centers(&es, &b).unwrap();
        for (i, c) in centers.iter().enumerate() {
            let k = b.index_of(c).unwrap();
            assert!((es.vector(i)[k].abs() - 1.0).abs() < 1e-15);
        }
        let fit = sule_fit(es.vectors(), &centers, &b, SuleOptions::default()).unwrap();
        assert!(fit.cap_reached);
        assert_eq!(fit.sule_xi, 50.0);
    }

    #[test]
    fn synthetic_exponential_profiles() {
        // φ_i(x) = c e^{-0.7|x - x_i|} on a box wide enough that every profile
        // reaches the amplitude floor on both sides.
        let b = line(120);
        let centers: Vec<Site> = [-30i64, -12, 5, 17, 40].iter().map(|&c| Site::new([c])).collect();
        let c = 0.4;
        let vectors = DMatrix::from_fn(b.len(), centers.len(), |r, k| {
            let x = b.site_at(r);
            c * (-0.7 * x.l1_dist(&centers[k]) as f64).exp()
        });
        let fit = sule_fit(&vectors, &centers, &b, SuleOptions::default()).unwrap();
        assert!((fit.sule_xi - 0.7).abs() <= 0.01, "xi {}", fit.sule_xi);
        assert!(!fit.cap_reached);
    }

    #[test]
    fn weak_hopping_fit_matches_two_point_decay() {
        let (b, es) = anderson_es(50, 0.1, 2024);
        let profile = LocalizationProfile::compute(&es, &b, SuleOptions::default()).unwrap();
        assert!(profile.fit.sule_xi > 0.0);
        assert!(profile.fit.residual_ok, "residual {}", profile.fit.fit_residual);
        // oracle: median of log|φ(x_i)/φ(x_i + r)| / r over eigenvectors whose
        // center sits at least r away from the boundary
        let r = 8i64;
        let mut rates = Vec::new();
        for (i, c) in profile.centers.iter().enumerate() {
            let x = c.coords()[0];
            for dir in [-1i64, 1] {
                let y = Site::new([x + dir * r]);
                if let (Some(a), Some(bb)) = (b.index_of(c), b.index_of(&y)) {
                    let num = es.vector(i)[a].abs();
                    let den = es.vector(i)[bb].abs();
                    if den > 1e-14 {
                        rates.push((num / den).ln() / r as f64);
                    }
                }
            }
        }
        rates.sort_by(f64::total_cmp);
        let median = rates[rates.len() / 2];
        let ratio = profile.fit.sule_xi / median;
        assert!((0.5..2.0).contains(&ratio), "fit {} vs oracle {}", profile.fit.sule_xi, median);
    }

    #[test]
    fn too_few_points() {
        let b = line(1);
        let vectors = DMatrix::from_column_slice(3, 1, &[0.0, 1.0, 0.0]);
        assert!(matches!(
            sule_fit(&vectors, &[Site::new([0])], &b, SuleOptions::default()),
            Err(SpectralError::TooFewPoints(1))
        ));
    }

    #[test]
    fn projections_trivial_cases() {
        let (b, es) = anderson_es(10, 0.1, 3);
        let centers = localization_centers(&es, &b).unwrap();
        let region = line(4);
        let lp = local_projections(&es, &centers, &b, &region, 6).unwrap();
        assert_eq!(lp.norm_out, 0.0);
        assert_eq!(lp.count_plus, b.len());
        assert!(local_projections(&es, &centers, &b, &region, 7).is_err());

        let (b0, es0) = anderson_es(10, 0.0, 3);
        let c0 = localization_centers(&es0, &b0).unwrap();
        let lp = local_projections(&es0, &c0, &b0, &region, 0).unwrap();
        assert!(lp.norm_out < 1e-15 && lp.norm_in < 1e-7);
        assert_eq!(lp.count_lambda, region.len());
    }

    #[test]
    fn projections_monotone_in_ell_and_trace_chain() {
        let (b, es) = anderson_es(40, 0.1, 17);
        let centers = localization_centers(&es, &b).unwrap();
        let region = LatticeBox::new(Site::new([3]), 12).unwrap();
        let mut prev: Option<LocalProjections> = None;
        for ell in 0..=20 {
            let lp = local_projections(&es, &centers, &b, &region, ell).unwrap();
            assert!(lp.trace_chain_holds(1e-9));
            if let Some(p) = prev {
                assert!(lp.norm_out <= p.norm_out + 1e-12);
                assert!(lp.norm_in <= p.norm_in + 1e-12);
            }
            prev = Some(lp);
        }
    }

    #[test]
    fn potential_shift_moves_spectrum() {
        let b = line(15);
        let v = sample_potential(&b, &DisorderSpec::uniform(0.5, 77)).unwrap();
        let c = 0.37;
        let es = diagonalize(&build_anderson(&b, 0.2, &v).unwrap(), DEFAULT_EIGEN_TOL).unwrap();
        let shifted: Potential = v.shifted(c);
        let es2 = diagonalize(&build_anderson(&b, 0.2, &shifted).unwrap(), DEFAULT_EIGEN_TOL).unwrap();
        for i in 0..es.dim() {
            assert!((es2.eigenvalue(i) - es.eigenvalue(i) - c).abs() < 1e-12);
            let overlap = es.vector(i).dot(&es2.vector(i)).abs();
            assert!((overlap - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn participation_of_delta_and_flat() {
        let mut v = DVector::zeros(4);
        v[1] = 1.0;
        assert_eq!(participation_ratio(v.column(0)), 1.0);
        let flat = DVector::from_element(4, 0.5);
        assert!((participation_ratio(flat.column(0)) - 4.0).abs() < 1e-12);
    }
}
