//! Dense symmetric linear algebra: eigendecomposition, barrier potentials,
//! trace inner products and the Sherman-Morrison-Woodbury update.

mod eigen;
mod matrix;
mod qr;

pub use eigen::{sym_eig, sym_eigvals, SpectralDecomp};
pub use matrix::{Matrix, MatrixArchive, SymMatrix};
pub use qr::householder_qr_frame;

use crate::error::{Error, Result};

/// Relative tolerance for spectral invariants.
pub const EIG_TOL: f64 = 1e-9;

/// Largest condition number accepted for the SMW core matrix.
pub const CORE_COND_MAX: f64 = 1e12;

/// Orthogonal projection represented by an orthonormal basis of its range.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    basis: Matrix,
}

impl Projection {
    /// Wraps an `n x k` matrix whose columns must be orthonormal.
    pub fn new(basis: Matrix) -> Result<Self> {
        if basis.cols() == 0 || basis.cols() > basis.rows() {
            return Err(Error::InvalidMatrix(format!(
                "projection basis must be n x k with 1 <= k <= n, got {} x {}",
                basis.rows(),
                basis.cols()
            )));
        }
        let gram = basis.transpose().matmul(&basis)?;
        let err = gram.max_abs_diff(&Matrix::identity(basis.cols()));
        if err > EIG_TOL {
            return Err(Error::InvalidMatrix(format!(
                "projection basis is not orthonormal (Gram error {err:e})"
            )));
        }
        Ok(Projection { basis })
    }

    pub(crate) fn from_orthonormal(basis: Matrix) -> Self {
        Projection { basis }
    }

    /// Projection onto the first `k` coordinate axes.
    pub fn canonical(n: usize, k: usize) -> Result<Self> {
        let mut basis = Matrix::zeros(n, k);
        for i in 0..k.min(n) {
            basis.set(i, i, 1.0);
        }
        Projection::new(basis)
    }

    /// Projection onto `span(x)`.
    pub fn onto_vector(x: &[f64]) -> Result<Self> {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidMatrix("cannot project onto zero vector".into()));
        }
        let data = x.iter().map(|v| v / norm).collect();
        Projection::new(Matrix::new(x.len(), 1, data)?)
    }

    pub fn rank(&self) -> usize {
        self.basis.cols()
    }

    pub fn dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    /// The projection as an `n x n` matrix `V V^t`.
    pub fn matrix(&self) -> SymMatrix {
        let n = self.dim();
        let mut out = SymMatrix::zeros(n);
        for c in 0..self.rank() {
            out.add_outer(&self.basis.column(c), 1.0);
        }
        out
    }

    /// `V^t B V`, whose spectrum is the nonzero spectrum of `P B P`.
    pub fn compress(&self, b: &SymMatrix) -> Result<SymMatrix> {
        b.congruence(&self.basis)
    }
}

/// Largest absolute eigenvalue.
pub fn operator_norm(m: &SymMatrix) -> Result<f64> {
    let vals = sym_eigvals(m)?;
    Ok(vals[0].abs().max(vals[vals.len() - 1].abs()))
}

/// `Tr(X Y)`.
pub fn trace_inner(x: &SymMatrix, y: &SymMatrix) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimMismatch {
            expected: x.dim(),
            found: y.dim(),
        });
    }
    // Tr(XY) = sum_ij X_ij Y_ji and Y is symmetric.
    Ok(x.as_slice().iter().zip(y.as_slice()).map(|(a, b)| a * b).sum())
}

/// `Tr (A - l I)^{-1}`, computed from the spectrum of `A`.
pub fn lower_potential(a: &SymMatrix, l: f64) -> Result<f64> {
    lower_potential_from_spectrum(&sym_eigvals(a)?, l)
}

/// `Tr (u I - A)^{-1}`, computed from the spectrum of `A`.
pub fn upper_potential(a: &SymMatrix, u: f64) -> Result<f64> {
    upper_potential_from_spectrum(&sym_eigvals(a)?, u)
}

pub fn lower_potential_from_spectrum(eigenvalues: &[f64], l: f64) -> Result<f64> {
    let lmin = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if !(lmin > l) {
        return Err(Error::BarrierViolated(format!(
            "lambda_min = {lmin} does not exceed lower barrier {l}"
        )));
    }
    Ok(eigenvalues.iter().map(|&x| 1.0 / (x - l)).sum())
}

pub fn upper_potential_from_spectrum(eigenvalues: &[f64], u: f64) -> Result<f64> {
    let lmax = eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(lmax < u) {
        return Err(Error::BarrierViolated(format!(
            "lambda_max = {lmax} is not below upper barrier {u}"
        )));
    }
    Ok(eigenvalues.iter().map(|&x| 1.0 / (u - x)).sum())
}

/// `(E + U C V)^{-1}` from `E^{-1}` by the Sherman-Morrison-Woodbury identity
/// `E^{-1} - E^{-1} U (C^{-1} + V E^{-1} U)^{-1} V E^{-1}`.
///
/// Fails with [`Error::SingularCore`] when `C` or the `k x k` core is
/// numerically singular (1-norm condition number above [`CORE_COND_MAX`]).
pub fn smw_update(e_inv: &SymMatrix, u: &Matrix, c: &Matrix, v: &Matrix) -> Result<Matrix> {
    let n = e_inv.dim();
    let k = c.rows();
    if u.rows() != n || v.cols() != n {
        return Err(Error::DimMismatch {
            expected: n,
            found: if u.rows() != n { u.rows() } else { v.cols() },
        });
    }
    if c.cols() != k || u.cols() != k || v.rows() != k {
        return Err(Error::DimMismatch {
            expected: k,
            found: if c.cols() != k { c.cols() } else { u.cols() },
        });
    }
    let e_inv = e_inv.to_matrix();
    let c_inv = checked_inverse(c)?;
    let e_inv_u = e_inv.matmul(u)?;
    let v_e_inv = v.matmul(&e_inv)?;
    let vu = v.matmul(&e_inv_u)?;
    let mut core = c_inv;
    for i in 0..k {
        for j in 0..k {
            core.set(i, j, core.get(i, j) + vu.get(i, j));
        }
    }
    let core_inv = checked_inverse(&core)?;
    let correction = e_inv_u.matmul(&core_inv)?.matmul(&v_e_inv)?;
    e_inv.sub(&correction)
}

fn checked_inverse(m: &Matrix) -> Result<Matrix> {
    let inv = m.inverse().ok_or(Error::SingularCore {
        condition: f64::INFINITY,
    })?;
    let condition = m.norm1() * inv.norm1();
    if !(condition <= CORE_COND_MAX) {
        return Err(Error::SingularCore { condition });
    }
    Ok(inv)
}
