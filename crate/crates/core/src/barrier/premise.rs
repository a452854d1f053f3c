//! Brute-force forms of the single-step barrier conditions, evaluated with
//! explicit dense inverses rather than eigen-sums. Used to cross-check the
//! shift rules.

use super::psd_sqrt;
use crate::error::{Error, Result};
use crate::linalg::{operator_norm, smw_update, sym_eig, sym_eigvals, Matrix, SymMatrix};

fn shifted_inverse(a: &SymMatrix, shift: f64) -> Result<Matrix> {
    a.shifted(-shift)
        .to_matrix()
        .inverse()
        .ok_or_else(|| Error::InvalidMatrix("shifted matrix is singular".into()))
}

fn trace(m: &Matrix) -> f64 {
    (0..m.rows()).map(|i| m.get(i, i)).sum()
}

fn trace_of_product(x: &Matrix, y: &Matrix) -> Result<f64> {
    Ok(trace(&x.matmul(y)?))
}

/// `||B^{1/2} M B^{1/2}||` for symmetric `M`.
fn sandwiched_norm(b_half: &SymMatrix, m: &Matrix) -> Result<f64> {
    let bh = b_half.to_matrix();
    operator_norm(&bh.matmul(m)?.matmul(&bh)?.symmetrize()?)
}

/// Left side minus one of the lower-step premise
/// `<L_d^{-2}, B> / (phi_{l+d}(A) - phi_l(A)) - ||B^{1/2} L_d^{-1} B^{1/2}|| >= 1`,
/// where `L_d = A - (l + d) I`. Requires `0 < d <= lambda_min(A) - l`.
pub fn lower_premise_margin(a: &SymMatrix, l: f64, b: &SymMatrix, delta: f64) -> Result<f64> {
    let lmin = sym_eigvals(a)?[0];
    if !(delta > 0.0 && delta < lmin - l) {
        return Err(Error::BarrierViolated(format!(
            "shift {delta} must lie in (0, lambda_min - l = {})",
            lmin - l
        )));
    }
    let inv_d = shifted_inverse(a, l + delta)?;
    let inv_0 = shifted_inverse(a, l)?;
    let b_m = b.to_matrix();
    let num = trace_of_product(&inv_d.matmul(&inv_d)?, &b_m)?;
    let den = trace(&inv_d) - trace(&inv_0);
    let norm = sandwiched_norm(&psd_sqrt(b)?, &inv_d)?;
    Ok(num / den - norm - 1.0)
}

/// One minus the left side of the upper-step premise
/// `<U_D^{-2}, B> / (psi_u(A) - psi_{u+D}(A)) + ||B^{1/2} U_D^{-1} B^{1/2}|| <= 1`,
/// where `U_D = (u + D) I - A`. Requires `D > 0` and `u > lambda_max(A)`.
pub fn upper_premise_margin(a: &SymMatrix, u: f64, b: &SymMatrix, delta: f64) -> Result<f64> {
    let vals = sym_eigvals(a)?;
    if !(delta > 0.0 && vals[vals.len() - 1] < u) {
        return Err(Error::BarrierViolated(format!(
            "need a positive shift and u above lambda_max, got shift {delta}, u {u}"
        )));
    }
    // (u I - A)^{-1} = -(A - u I)^{-1}
    let neg = |m: Matrix| -> Result<Matrix> { Matrix::zeros(m.rows(), m.cols()).sub(&m) };
    let inv_d = neg(shifted_inverse(a, u + delta)?)?;
    let inv_0 = neg(shifted_inverse(a, u)?)?;
    let num = trace_of_product(&inv_d.matmul(&inv_d)?, &b.to_matrix())?;
    let den = trace(&inv_0) - trace(&inv_d);
    let norm = sandwiched_norm(&psd_sqrt(b)?, &inv_d)?;
    Ok(1.0 - num / den - norm)
}

/// `lambda_min(A + B) > l + d` and `phi_{l+d}(A + B) <= phi_l(A)`, each up to
/// a relative tolerance `tol`.
pub fn lower_conclusion_holds(a: &SymMatrix, l: f64, b: &SymMatrix, delta: f64, tol: f64) -> Result<bool> {
    let before: f64 = sym_eigvals(a)?.iter().map(|x| 1.0 / (x - l)).sum();
    let after_vals = sym_eigvals(&a.add(b)?)?;
    let barrier = l + delta;
    if !(after_vals[0] > barrier - tol * barrier.abs().max(1.0)) {
        return Ok(false);
    }
    if after_vals[0] <= barrier {
        // Touching within tolerance: the potential is unbounded, so only the
        // barrier part can be judged.
        return Ok(true);
    }
    let after: f64 = after_vals.iter().map(|x| 1.0 / (x - barrier)).sum();
    Ok(after <= before + tol * before.max(1.0))
}

/// `lambda_max(A + B) < u + D` and `psi_{u+D}(A + B) <= psi_u(A)`, each up to
/// a relative tolerance `tol`.
pub fn upper_conclusion_holds(a: &SymMatrix, u: f64, b: &SymMatrix, delta: f64, tol: f64) -> Result<bool> {
    let before: f64 = sym_eigvals(a)?.iter().map(|x| 1.0 / (u - x)).sum();
    let after_vals = sym_eigvals(&a.add(b)?)?;
    let barrier = u + delta;
    let top = after_vals[after_vals.len() - 1];
    if !(top < barrier + tol * barrier.abs().max(1.0)) {
        return Ok(false);
    }
    if top >= barrier {
        return Ok(true);
    }
    let after: f64 = after_vals.iter().map(|x| 1.0 / (barrier - x)).sum();
    Ok(after <= before + tol * before.max(1.0))
}

/// `phi_{l+d}(A + B)` through `(L_d + B^{1/2} I B^{1/2})^{-1}` by the
/// Sherman-Morrison-Woodbury identity.
pub fn smw_lower_potential(a: &SymMatrix, l: f64, b: &SymMatrix, delta: f64) -> Result<f64> {
    let e_inv = sym_eig(a)?.map(|x| 1.0 / (x - l - delta));
    let half = psd_sqrt(b)?.to_matrix();
    let n = a.dim();
    Ok(trace(&smw_update(&e_inv, &half, &Matrix::identity(n), &half)?))
}

/// `psi_{u+D}(A + B)` through `(U_D - B^{1/2} I B^{1/2})^{-1}` by the
/// Sherman-Morrison-Woodbury identity.
pub fn smw_upper_potential(a: &SymMatrix, u: f64, b: &SymMatrix, delta: f64) -> Result<f64> {
    let e_inv = sym_eig(a)?.map(|x| 1.0 / (u + delta - x));
    let half = psd_sqrt(b)?.to_matrix();
    let n = a.dim();
    let minus_identity = Matrix::zeros(n, n).sub(&Matrix::identity(n))?;
    Ok(trace(&smw_update(&e_inv, &half, &minus_identity, &half)?))
}
