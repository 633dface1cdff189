//! Small dense complex matrices: Hermitian eigendecomposition and density
//! matrices.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{invalid, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;

/// Eigenvalues (ascending) and matching eigenvector columns of a Hermitian
/// matrix.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn eigenvalues(m: &CMatrix) -> Vec<f64> {
    hermitian_eigen(m).0
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    eigenvalues(m).first().copied().unwrap_or(0.0)
}

/// Trace norm of a Hermitian matrix.
pub fn trace_norm(m: &CMatrix) -> f64 {
    eigenvalues(m).iter().map(|l| l.abs()).sum()
}

/// Frobenius distance between `m` and `V diag(l) V^dagger` built from its own
/// eigendecomposition.
pub fn reconstruction_error(m: &CMatrix) -> f64 {
    let (values, vectors) = hermitian_eigen(m);
    let diag = CMatrix::from_diagonal(&CVector::from_iterator(values.len(), values.iter().map(|&l| Complex64::new(l, 0.0))));
    (&vectors * diag * vectors.adjoint() - m).norm()
}

pub fn hermitian_defect(m: &CMatrix) -> f64 {
    (m - m.adjoint()).norm()
}

pub fn projector(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `exp(2 pi i k / d)`.
pub fn root_of_unity(k: u64, d: u32) -> Complex64 {
    let angle = 2.0 * std::f64::consts::PI * (k % u64::from(d)) as f64 / f64::from(d);
    Complex64::from_polar(1.0, angle)
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let check = validate_state(&matrix, true)?;
        Ok(check)
    }

    /// Accepts any positive semidefinite Hermitian matrix without checking
    /// normalization.
    pub fn unnormalized(matrix: CMatrix) -> Result<Self> {
        validate_state(&matrix, false)
    }

    pub fn pure(v: &CVector) -> Result<Self> {
        let norm = v.norm();
        if norm == 0.0 {
            return invalid("zero vector");
        }
        Self::new(projector(&(v / real(norm))))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { matrix: identity(dim) / real(dim as f64) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// `tr(op * rho)`, real part.
    pub fn expectation(&self, op: &CMatrix) -> f64 {
        (op * &self.matrix).trace().re
    }
}

fn validate_state(matrix: &CMatrix, normalized: bool) -> Result<DensityMatrix> {
    if !matrix.is_square() || matrix.nrows() == 0 {
        return invalid("density matrix must be square and non-empty");
    }
    let defect = hermitian_defect(matrix);
    if defect > HERMITIAN_TOL * matrix.nrows() as f64 {
        return invalid(format!("matrix not Hermitian (defect {defect:e})"));
    }
    let tr = matrix.trace();
    if normalized && ((tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL) {
        return invalid(format!("trace {tr} differs from 1"));
    }
    let min = min_eigenvalue(matrix);
    if min < -PSD_TOL {
        return invalid(format!("matrix not positive semidefinite (min eigenvalue {min:e})"));
    }
    Ok(DensityMatrix { matrix: matrix.clone() })
}
