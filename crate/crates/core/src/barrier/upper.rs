use serde::Serialize;

use super::{check_psd_input, psd_sqrt_factor, smallest_feasible, CERT_SLACK, SHIFT_TOL};
use crate::error::{Error, Result};
use crate::linalg::{sym_eig, sym_eigvals, Matrix, SpectralDecomp, SymMatrix};

/// Accumulated sum `A` with an upper barrier `u > lambda_max(A)` and
/// potential `Tr (u I - A)^{-1}` kept below `psi_budget`.
#[derive(Debug, Clone)]
pub struct UpperBarrierState {
    a: SymMatrix,
    u: f64,
    psi_budget: f64,
    spectrum: SpectralDecomp,
    step_count: usize,
}

impl UpperBarrierState {
    pub fn new(a: SymMatrix, u: f64, psi_budget: f64) -> Result<Self> {
        if !(psi_budget > 0.0 && psi_budget.is_finite()) {
            return Err(Error::InvalidConfig(format!("psi budget must be positive, got {psi_budget}")));
        }
        let spectrum = sym_eig(&a)?;
        let state = UpperBarrierState {
            a,
            u,
            psi_budget,
            spectrum,
            step_count: 0,
        };
        let pot = state.potential()?;
        if pot > psi_budget + 1e-9 * psi_budget.max(1.0) {
            return Err(Error::BarrierViolated(format!(
                "upper potential {pot} exceeds budget {psi_budget}"
            )));
        }
        Ok(state)
    }

    /// `A = 0`, `u = n / psi`, so that the potential equals `psi`.
    pub fn initial(n: usize, psi: f64) -> Result<Self> {
        UpperBarrierState::new(SymMatrix::zeros(n), n as f64 / psi, psi)
    }

    pub fn a(&self) -> &SymMatrix {
        &self.a
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn psi_budget(&self) -> f64 {
        self.psi_budget
    }

    pub fn spectrum(&self) -> &SpectralDecomp {
        &self.spectrum
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    pub fn lambda_max(&self) -> f64 {
        self.spectrum.max()
    }

    /// `Tr (u I - A)^{-1}`.
    pub fn potential(&self) -> Result<f64> {
        crate::linalg::upper_potential_from_spectrum(&self.spectrum.eigenvalues, self.u)
    }
}

/// `B` expressed in the eigenbasis of `A`: `G = V^t B^{1/2}` and the
/// diagonal `b_i = <B v_i, v_i>`.
struct Prepared<'a> {
    state: &'a UpperBarrierState,
    g: Matrix,
    b_diag: Vec<f64>,
}

impl<'a> Prepared<'a> {
    fn new(state: &'a UpperBarrierState, b: &SymMatrix) -> Result<Self> {
        check_psd_input(b, state.a.dim())?;
        let f = psd_sqrt_factor(b)?;
        let g = state.spectrum.eigenvectors.transpose().matmul(&f)?;
        let b_diag = (0..g.rows())
            .map(|i| (0..g.cols()).map(|c| g.get(i, c).powi(2)).sum())
            .collect();
        Ok(Prepared { state, g, b_diag })
    }

    fn gaps(&self, t: f64) -> Result<Vec<f64>> {
        let top = self.state.u + t;
        self.state
            .spectrum
            .eigenvalues
            .iter()
            .map(|&lam| {
                let d = top - lam;
                if d > 0.0 {
                    Ok(d)
                } else {
                    Err(Error::BarrierViolated(format!(
                        "eigenvalue {lam} is not below shifted barrier {top}"
                    )))
                }
            })
            .collect()
    }

    /// `||B^{1/2} U_t^{-1} B^{1/2}|| = lambda_max(G^t U_t^{-1} G)` in the basis of `A`.
    fn q1(&self, t: f64) -> Result<f64> {
        let gaps = self.gaps(t)?;
        let (n, r) = (self.g.rows(), self.g.cols());
        if r == 0 {
            return Ok(0.0);
        }
        if r == 1 {
            return Ok((0..n).map(|i| self.g.get(i, 0).powi(2) / gaps[i]).sum());
        }
        let mut m = vec![0.0; r * r];
        for a in 0..r {
            for b in a..r {
                m[a * r + b] = (0..n).map(|i| self.g.get(i, a) * self.g.get(i, b) / gaps[i]).sum();
            }
        }
        let vals = sym_eigvals(&SymMatrix::from_raw(r, m))?;
        Ok(vals[r - 1].max(0.0))
    }

    /// `<U_t^{-2}, B> / (psi_u(A) - psi_{u+t}(A))`, with the denominator
    /// written as `t Tr(U_0^{-1} U_t^{-1})`.
    fn q2(&self, t: f64) -> Result<f64> {
        let gaps_t = self.gaps(t)?;
        let gaps_0 = self.gaps(0.0)?;
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..gaps_t.len() {
            num += self.b_diag[i] / (gaps_t[i] * gaps_t[i]);
            den += 1.0 / (gaps_t[i] * gaps_0[i]);
        }
        Ok(num / (t * den))
    }

    fn p2(&self, t: f64) -> Result<f64> {
        let gaps_t = self.gaps(t)?;
        let gaps_0 = self.gaps(0.0)?;
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..gaps_t.len() {
            let w = 1.0 / (gaps_t[i] * gaps_0[i]);
            num += self.b_diag[i] * w;
            den += w;
        }
        Ok(num / den)
    }
}

/// `(Q1, Q2, P2)` at shift `t > 0`, with `U_t = (u + t) I - A`:
/// `Q1 = ||B^{1/2} U_t^{-1} B^{1/2}||`,
/// `Q2 = <U_t^{-2}, B> / (psi_u(A) - psi_{u+t}(A))` and
/// `P2 = sum_i w_i <B v_i, v_i>` with weights `w_i` proportional to
/// `1 / ((u + t - lambda_i)(u - lambda_i))`, so that `Q2 <= P2 / t`.
pub fn upper_functionals(state: &UpperBarrierState, t: f64, b: &SymMatrix) -> Result<(f64, f64, f64)> {
    if !(t > 0.0) {
        return Err(Error::BarrierViolated(format!("upper shift must be positive, got {t}")));
    }
    let prep = Prepared::new(state, b)?;
    Ok((prep.q1(t)?, prep.q2(t)?, prep.p2(t)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UpperShift {
    pub delta: f64,
    /// Smallest shift with `Q1 <= theta`.
    pub delta1: f64,
    /// Smallest shift with `Q2 <= 1 - theta`.
    pub delta2: f64,
}

fn shift_for(prep: &Prepared<'_>, theta: f64) -> Result<UpperShift> {
    if !(theta > 0.0 && theta < 0.5) {
        return Err(Error::InvalidConfig(format!("theta must lie in (0, 1/2), got {theta}")));
    }
    let delta1 = smallest_feasible(|t| prep.q1(t), theta, 0.0)?;
    let delta2 = if prep.b_diag.iter().all(|&b| b <= 0.0) {
        0.0
    } else {
        smallest_feasible(|t| prep.q2(t), 1.0 - theta, SHIFT_TOL)?
    };
    Ok(UpperShift {
        delta: delta1 + delta2,
        delta1,
        delta2,
    })
}

/// `Delta = Delta1 + Delta2`, which makes `Q1(Delta) + Q2(Delta) <= 1`.
pub fn choose_upper_shift(state: &UpperBarrierState, b: &SymMatrix, theta: f64) -> Result<UpperShift> {
    shift_for(&Prepared::new(state, b)?, theta)
}

#[derive(Debug, Clone, Serialize)]
pub struct UpperStep {
    #[serde(skip)]
    pub state: UpperBarrierState,
    pub shift: UpperShift,
    pub potential_before: f64,
    pub potential_after: f64,
    /// `lambda_max(A + B) < u + Delta` and the potential did not increase,
    /// checked against a fresh eigendecomposition.
    pub certificate_ok: bool,
}

/// Adds `B` to the state and moves the barrier by [`choose_upper_shift`].
pub fn upper_step(state: &UpperBarrierState, b: &SymMatrix, theta: f64) -> Result<UpperStep> {
    let shift = shift_for(&Prepared::new(state, b)?, theta)?;
    let step = state.step_count + 1;
    let potential_before = state.potential()?;

    let a_next = state.a.add(b)?;
    let spectrum = sym_eig(&a_next)?;
    let u_next = state.u + shift.delta;
    let lmax = spectrum.max();
    if !(lmax < u_next) {
        return Err(Error::CertificateBroken {
            step,
            reason: format!("lambda_max = {lmax} is not below the new upper barrier {u_next}"),
        });
    }
    let potential_after: f64 = spectrum.eigenvalues.iter().map(|&x| 1.0 / (u_next - x)).sum();
    if potential_after > potential_before + CERT_SLACK * potential_before.max(1.0) {
        return Err(Error::CertificateBroken {
            step,
            reason: format!("upper potential rose from {potential_before} to {potential_after}"),
        });
    }
    Ok(UpperStep {
        state: UpperBarrierState {
            a: a_next,
            u: u_next,
            psi_budget: state.psi_budget,
            spectrum,
            step_count: step,
        },
        shift,
        potential_before,
        potential_after,
        certificate_ok: potential_after <= potential_before,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_update_functionals() {
        let a = SymMatrix::from_diag(&[0.5, 1.0, 2.0]);
        let st = UpperBarrierState::new(a, 4.0, 10.0).unwrap();
        let (q1, _, p2) = upper_functionals(&st, 0.5, &SymMatrix::identity(3)).unwrap();
        assert!((q1 - 1.0 / (4.5 - 2.0)).abs() < 1e-14);
        assert!((p2 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn scalar_functionals() {
        let st = UpperBarrierState::new(SymMatrix::zeros(1), 2.0, 0.5).unwrap();
        let b = 0.7;
        let (q1, q2, _) = upper_functionals(&st, 1.0, &SymMatrix::from_diag(&[b])).unwrap();
        assert!((q1 - b / 3.0).abs() < 1e-15);
        assert!((q2 - 2.0 * b / 3.0).abs() < 1e-14);
        assert!(upper_functionals(&st, 0.0, &SymMatrix::from_diag(&[b])).is_err());
    }

    #[test]
    fn scalar_shift_roots() {
        let st = UpperBarrierState::new(SymMatrix::zeros(1), 2.0, 0.5).unwrap();
        let sh = choose_upper_shift(&st, &SymMatrix::identity(1), 0.25).unwrap();
        assert!((sh.delta1 - 2.0).abs() < 1e-8);
        // 2 / (t (2 + t)) = 3/4
        let root = (-6.0 + 132.0_f64.sqrt()) / 6.0;
        assert!((sh.delta2 - root).abs() < 1e-8);
        let out = upper_step(&st, &SymMatrix::identity(1), 0.25).unwrap();
        assert!(1.0 < 2.0 + out.shift.delta);
        assert!(1.0 / (2.0 + out.shift.delta - 1.0) <= 0.5);
        assert!(out.certificate_ok);
    }

    #[test]
    fn zero_update_has_zero_shift() {
        let st = UpperBarrierState::initial(3, 0.2).unwrap();
        let out = upper_step(&st, &SymMatrix::zeros(3), 0.1).unwrap();
        assert_eq!(out.shift.delta, 0.0);
        assert_eq!(out.potential_after, out.potential_before);
    }
}
