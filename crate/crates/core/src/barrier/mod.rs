//! Barrier potentials for sums of random positive semidefinite matrices.
//!
//! A lower barrier `l` with `A > l I` is moved by a random shift `delta`
//! chosen so that `Tr (A + B - (l + delta) I)^{-1}` does not exceed
//! `Tr (A - l I)^{-1}`; the upper barrier `u` mirrors this with
//! `Tr (u I - A)^{-1}`. Chaining `N` steps from `A_0 = 0` certifies bounds on
//! the extreme eigenvalues of `sum_i B_i`.

mod chain;
mod lower;
mod premise;
mod upper;

pub use chain::{
    run_chain, run_chain_on, strict_phi, strict_psi, ChainParams, ChainReport, Direction, ResolvedChain,
    StepRecord, StrictConstants,
};
pub use lower::{choose_lower_shift, lower_functionals, lower_step, LowerBarrierState, LowerStep};
pub use premise::{
    lower_conclusion_holds, lower_premise_margin, smw_lower_potential, smw_upper_potential,
    upper_conclusion_holds, upper_premise_margin,
};
pub use upper::{
    choose_upper_shift, upper_functionals, upper_step, UpperBarrierState, UpperShift, UpperStep,
};

use crate::error::{Error, Result};
use crate::linalg::{sym_eig, Matrix, SymMatrix};

/// Relative bisection tolerance for the upper shifts.
pub const SHIFT_TOL: f64 = 1e-10;

/// The bisection bracket may grow up to this value.
pub const BRACKET_MAX: f64 = 18_446_744_073_709_551_616.0; // 2^64

/// Slack allowed when checking a step against the eigensolver before the
/// step is declared broken.
pub const CERT_SLACK: f64 = 1e-8;

/// Eigenvalues of `B` below this fraction of `lambda_max(B)` are treated as
/// rounding noise when forming `B^{1/2}`.
const SQRT_RANK_CUTOFF: f64 = 1e-13;

/// An `n x r` factor `F` with `F F^t = B` after clamping negative
/// eigenvalues of `B` to zero; columns for negligible eigenvalues are dropped.
pub(crate) fn psd_sqrt_factor(b: &SymMatrix) -> Result<Matrix> {
    let n = b.dim();
    let eig = sym_eig(b)?;
    let top = eig.max().max(0.0);
    let keep: Vec<usize> = (0..n)
        .filter(|&i| eig.eigenvalues[i] > SQRT_RANK_CUTOFF * top && eig.eigenvalues[i] > 0.0)
        .collect();
    let mut f = Matrix::zeros(n, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        let s = eig.eigenvalues[i].sqrt();
        for r in 0..n {
            f.set(r, c, eig.eigenvectors.get(r, i) * s);
        }
    }
    Ok(f)
}

/// Symmetric square root `B^{1/2}` with negative eigenvalues clamped to zero.
pub fn psd_sqrt(b: &SymMatrix) -> Result<SymMatrix> {
    Ok(sym_eig(b)?.map(|x| x.max(0.0).sqrt()))
}

/// Smallest `t >= lo` (up to relative [`SHIFT_TOL`]) with `f(t) <= target`,
/// for a nonincreasing `f`. The returned point always satisfies the target.
pub(crate) fn smallest_feasible(
    f: impl Fn(f64) -> Result<f64>,
    target: f64,
    lo: f64,
) -> Result<f64> {
    if f(lo)? <= target {
        return Ok(lo);
    }
    let mut lo = lo;
    let mut hi = lo.max(0.5) * 2.0;
    while f(hi)? > target {
        lo = hi;
        hi *= 2.0;
        if hi > BRACKET_MAX {
            return Err(Error::BracketFailure { limit: BRACKET_MAX });
        }
    }
    for _ in 0..256 {
        if hi - lo <= SHIFT_TOL * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid)? <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

pub(crate) fn check_psd_input(b: &SymMatrix, n: usize) -> Result<()> {
    if b.dim() != n {
        return Err(Error::DimMismatch {
            expected: n,
            found: b.dim(),
        });
    }
    if b.as_slice().iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidMatrix("sample has non-finite entries".into()));
    }
    Ok(())
}
