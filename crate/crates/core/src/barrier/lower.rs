use serde::Serialize;

use super::{check_psd_input, CERT_SLACK};
use crate::error::{Error, Result};
use crate::linalg::{sym_eig, SpectralDecomp, SymMatrix};

/// Accumulated sum `A` with a lower barrier `l < lambda_min(A)` and
/// potential `Tr (A - l I)^{-1}` kept below `phi_budget`.
#[derive(Debug, Clone)]
pub struct LowerBarrierState {
    a: SymMatrix,
    l: f64,
    phi_budget: f64,
    spectrum: SpectralDecomp,
    step_count: usize,
}

impl LowerBarrierState {
    pub fn new(a: SymMatrix, l: f64, phi_budget: f64) -> Result<Self> {
        if !(phi_budget > 0.0 && phi_budget.is_finite()) {
            return Err(Error::InvalidConfig(format!("phi budget must be positive, got {phi_budget}")));
        }
        let spectrum = sym_eig(&a)?;
        let state = LowerBarrierState {
            a,
            l,
            phi_budget,
            spectrum,
            step_count: 0,
        };
        let pot = state.potential()?;
        if pot > phi_budget + 1e-9 * phi_budget.max(1.0) {
            return Err(Error::BarrierViolated(format!(
                "lower potential {pot} exceeds budget {phi_budget}"
            )));
        }
        Ok(state)
    }

    /// `A = 0`, `l = -n / phi`, so that the potential equals `phi`.
    pub fn initial(n: usize, phi: f64) -> Result<Self> {
        LowerBarrierState::new(SymMatrix::zeros(n), -(n as f64) / phi, phi)
    }

    pub fn a(&self) -> &SymMatrix {
        &self.a
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn phi_budget(&self) -> f64 {
        self.phi_budget
    }

    pub fn spectrum(&self) -> &SpectralDecomp {
        &self.spectrum
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    pub fn lambda_min(&self) -> f64 {
        self.spectrum.min()
    }

    /// `Tr (A - l I)^{-1}`.
    pub fn potential(&self) -> Result<f64> {
        crate::linalg::lower_potential_from_spectrum(&self.spectrum.eigenvalues, self.l)
    }
}

fn functionals_from_diag(state: &LowerBarrierState, b_diag: &[f64], t: f64) -> Result<(f64, f64)> {
    let limit = 1.0 / state.phi_budget;
    if t > limit * (1.0 + 1e-12) {
        return Err(Error::BarrierViolated(format!("shift {t} exceeds 1/phi = {limit}")));
    }
    let (mut q1, mut num2, mut den2) = (0.0, 0.0, 0.0);
    for (&lam, &b) in state.spectrum.eigenvalues.iter().zip(b_diag) {
        let d = lam - state.l - t;
        if !(d > 0.0) {
            return Err(Error::BarrierViolated(format!(
                "eigenvalue {lam} does not exceed shifted barrier {}",
                state.l + t
            )));
        }
        q1 += b / d;
        num2 += b / (d * d);
        den2 += 1.0 / (d * d);
    }
    Ok((q1, num2 / den2))
}

/// `(q1, q2)` at shift `t`: `q1 = <L_t^{-1}, B>` and
/// `q2 = <L_t^{-2}, B> / Tr L_t^{-2}` with `L_t = A - (l + t) I`.
pub fn lower_functionals(state: &LowerBarrierState, t: f64, b: &SymMatrix) -> Result<(f64, f64)> {
    check_psd_input(b, state.a.dim())?;
    let b_diag = state.spectrum.diag_in_basis(b)?;
    functionals_from_diag(state, &b_diag, t)
}

fn shift_from_functionals(q1: f64, q2: f64, s: f64, phi: f64) -> f64 {
    if q1 <= s && q2 <= s / phi {
        (1.0 - s).powi(3) * q2
    } else {
        0.0
    }
}

/// `delta = (1 - s)^3 q2(0, B)` when `q1(0, B) <= s` and `q2(0, B) <= s / phi`,
/// and zero otherwise.
pub fn choose_lower_shift(state: &LowerBarrierState, b: &SymMatrix, s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidConfig(format!("step parameter s must lie in (0, 1), got {s}")));
    }
    let (q1, q2) = lower_functionals(state, 0.0, b)?;
    Ok(shift_from_functionals(q1, q2, s, state.phi_budget))
}

#[derive(Debug, Clone, Serialize)]
pub struct LowerStep {
    #[serde(skip)]
    pub state: LowerBarrierState,
    pub delta: f64,
    pub q1: f64,
    pub q2: f64,
    pub potential_before: f64,
    pub potential_after: f64,
    /// `lambda_min(A + B) > l + delta` and the potential did not increase,
    /// checked against a fresh eigendecomposition.
    pub certificate_ok: bool,
}

/// Adds `B` to the state and moves the barrier by [`choose_lower_shift`].
pub fn lower_step(state: &LowerBarrierState, b: &SymMatrix, s: f64) -> Result<LowerStep> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidConfig(format!("step parameter s must lie in (0, 1), got {s}")));
    }
    check_psd_input(b, state.a.dim())?;
    let step = state.step_count + 1;
    let (q1, q2) = functionals_from_diag(state, &state.spectrum.diag_in_basis(b)?, 0.0)?;
    let delta = shift_from_functionals(q1, q2, s, state.phi_budget);
    let potential_before = state.potential()?;

    let a_next = state.a.add(b)?;
    let spectrum = sym_eig(&a_next)?;
    let l_next = state.l + delta;
    let lmin = spectrum.min();
    if !(lmin > l_next) {
        return Err(Error::CertificateBroken {
            step,
            reason: format!("lambda_min = {lmin} is not above the new lower barrier {l_next}"),
        });
    }
    let potential_after: f64 = spectrum.eigenvalues.iter().map(|&x| 1.0 / (x - l_next)).sum();
    if potential_after > potential_before + CERT_SLACK * potential_before.max(1.0) {
        return Err(Error::CertificateBroken {
            step,
            reason: format!("lower potential rose from {potential_before} to {potential_after}"),
        });
    }
    let certificate_ok = lmin > l_next && potential_after <= potential_before;
    Ok(LowerStep {
        state: LowerBarrierState {
            a: a_next,
            l: l_next,
            phi_budget: state.phi_budget,
            spectrum,
            step_count: step,
        },
        delta,
        q1,
        q2,
        potential_before,
        potential_after,
        certificate_ok,
    })
}
