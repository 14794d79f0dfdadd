use nalgebra::{DMatrix, DVector, DVectorView, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::SpectralError;
use crate::model::{Basis, LatticeBox, OperatorKind, OperatorMatrix, MAX_DENSE_DIM};

/// Default relative residual tolerance: ‖Av − λv‖ ≤ tol·‖A‖_max·dim.
pub const DEFAULT_EIGEN_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OperatorDescriptor {
    pub kind: Option<OperatorKind>,
    pub basis: Option<Basis>,
    pub lattice: Option<LatticeBox>,
    pub dim: usize,
}

/// Full eigendecomposition of a real symmetric matrix with ascending eigenvalues.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    residual_max: f64,
    source: OperatorDescriptor,
}

impl EigenSystem {
    /// Assemble from precomputed parts; eigenpairs are re-sorted ascending.
    pub fn from_parts(
        eigenvalues: Vec<f64>,
        eigenvectors: DMatrix<f64>,
        source: OperatorDescriptor,
        matrix: Option<&DMatrix<f64>>,
    ) -> Self {
        let (eigenvalues, eigenvectors) = sort_pairs(eigenvalues, eigenvectors);
        let residual_max = matrix
            .map(|a| residuals(a, &eigenvalues, &eigenvectors).into_iter().fold(0.0, f64::max))
            .unwrap_or(0.0);
        EigenSystem {
            eigenvalues,
            eigenvectors,
            residual_max,
            source,
        }
    }

    /// Replace the recorded residual, e.g. when the pairs were certified elsewhere.
    pub fn with_residual(mut self, residual_max: f64) -> Self {
        self.residual_max = residual_max;
        self
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvalue(&self, i: usize) -> f64 {
        self.eigenvalues[i]
    }

    /// Eigenvectors as matrix columns.
    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn vector(&self, i: usize) -> DVectorView<'_, f64> {
        self.eigenvectors.column(i)
    }

    pub fn residual_max(&self) -> f64 {
        self.residual_max
    }

    pub fn source(&self) -> &OperatorDescriptor {
        &self.source
    }

    pub fn lattice(&self) -> Option<&LatticeBox> {
        self.source.lattice.as_ref()
    }

    /// ‖VᵀV − I‖_max.
    pub fn gram_deviation(&self) -> f64 {
        let g = self.eigenvectors.transpose() * &self.eigenvectors;
        max_dev_from_identity(&g)
    }

    /// ‖Σ_i v_i v_iᵀ − I‖_max.
    pub fn completeness_deviation(&self) -> f64 {
        let p = &self.eigenvectors * self.eigenvectors.transpose();
        max_dev_from_identity(&p)
    }

    /// Per-eigenpair residuals ‖A v_i − λ_i v_i‖₂ against an arbitrary matrix.
    pub fn residuals_against(&self, a: &DMatrix<f64>) -> Vec<f64> {
        residuals(a, &self.eigenvalues, &self.eigenvectors)
    }
}

fn max_dev_from_identity(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let target = if r == c { 1.0 } else { 0.0 };
            worst = worst.max((m[(r, c)] - target).abs());
        }
    }
    worst
}

fn sort_pairs(values: Vec<f64>, vectors: DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let sorted_values = DVector::from_iterator(values.len(), order.iter().map(|&i| values[i]));
    let sorted_vectors = DMatrix::from_fn(vectors.nrows(), order.len(), |r, c| vectors[(r, order[c])]);
    (sorted_values, sorted_vectors)
}

fn residuals(a: &DMatrix<f64>, values: &DVector<f64>, vectors: &DMatrix<f64>) -> Vec<f64> {
    let mut av = a * vectors;
    for (c, lambda) in values.iter().enumerate() {
        let mut col = av.column_mut(c);
        col.axpy(-lambda, &vectors.column(c), 1.0);
    }
    av.column_iter().map(|c| c.norm()).collect()
}

/// Diagonalize an operator assembled by [`crate::model`].
pub fn diagonalize(op: &OperatorMatrix, tol: f64) -> Result<EigenSystem, SpectralError> {
    diagonalize_matrix(
        &op.matrix,
        tol,
        OperatorDescriptor {
            kind: Some(op.kind),
            basis: Some(op.basis),
            lattice: Some(op.lattice.clone()),
            dim: op.dim(),
        },
    )
}

/// Diagonalize a bare symmetric matrix.
pub fn diagonalize_matrix(
    a: &DMatrix<f64>,
    tol: f64,
    source: OperatorDescriptor,
) -> Result<EigenSystem, SpectralError> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(SpectralError::NotSquare(n, a.ncols()));
    }
    if n > MAX_DENSE_DIM {
        return Err(SpectralError::DimensionCap { dim: n, cap: MAX_DENSE_DIM });
    }
    if n == 0 {
        return Err(SpectralError::Empty);
    }
    let asym = (a - a.transpose()).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if asym > 1e-12 * scale.max(1.0) {
        return Err(SpectralError::NotSymmetric(asym));
    }
    let eig = SymmetricEigen::try_new(a.clone(), f64::EPSILON, 10_000)
        .ok_or(SpectralError::NoConvergence)?;
    let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let (eigenvalues, eigenvectors) = sort_pairs(values, eig.eigenvectors);
    let residual_max = residuals(a, &eigenvalues, &eigenvectors)
        .into_iter()
        .fold(0.0, f64::max);
    let bound = tol * scale * n as f64;
    if residual_max > bound {
        return Err(SpectralError::ResidualTooLarge {
            residual: residual_max,
            bound,
        });
    }
    Ok(EigenSystem {
        eigenvalues,
        eigenvectors,
        residual_max,
        source,
    })
}
