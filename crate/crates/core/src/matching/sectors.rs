use nalgebra::DVector;

use super::MatchingError;
use crate::model::{build_rank_one_family, LatticeBox, ModelParams, Potential, Site};
use crate::spectral::{diagonalize, localization_centers, EigenSystem, DEFAULT_EIGEN_TOL};

/// Eigen-systems of H_{+g} and H_{−g} on one realization, with localization centers.
#[derive(Clone, Debug)]
pub struct SectorSystems {
    pub lattice: LatticeBox,
    pub params: ModelParams,
    pub plus: EigenSystem,
    pub minus: EigenSystem,
    pub centers_plus: Vec<Site>,
    pub centers_minus: Vec<Site>,
    /// ζ as a vector on the box.
    pub zeta: DVector<f64>,
}

impl SectorSystems {
    pub fn build(lattice: &LatticeBox, params: &ModelParams, v: &Potential) -> Result<Self, MatchingError> {
        let plus = diagonalize(&build_rank_one_family(lattice, params, v)?, DEFAULT_EIGEN_TOL)?;
        let minus = diagonalize(
            &build_rank_one_family(lattice, &params.with_g(-params.g), v)?,
            DEFAULT_EIGEN_TOL,
        )?;
        let centers_plus = localization_centers(&plus, lattice)?;
        let centers_minus = localization_centers(&minus, lattice)?;
        let zeta = DVector::from_vec(params.zeta.on_box(lattice)?);
        Ok(SectorSystems {
            lattice: lattice.clone(),
            params: params.clone(),
            plus,
            minus,
            centers_plus,
            centers_minus,
            zeta,
        })
    }
}
