use serde::{Deserialize, Serialize};

use super::{lower_step, upper_step, LowerBarrierState, UpperBarrierState};
use crate::ensembles::{self, EnsembleSpec};
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Lower,
    Upper,
}

/// Moment and tail constants for the conservative budgets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrictConstants {
    /// Moment order with `E <Bx, x>^p <= c_p`.
    pub p: f64,
    pub c_p: f64,
    /// Tail constants with `P(||PBP|| >= t) <= c / t^(1 + eta)`.
    pub c: f64,
    pub eta: f64,
}

/// Chain knobs. Unset fields fall back to `phi = eps / 4`, `psi = eps / 6`,
/// `s = eps / 4` and `theta = eps / 8`; with `strict` set, unset budgets use
/// the conservative constants instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainParams {
    pub epsilon: f64,
    #[serde(default)]
    pub phi: Option<f64>,
    #[serde(default)]
    pub psi: Option<f64>,
    #[serde(default)]
    pub s: Option<f64>,
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default)]
    pub strict: Option<StrictConstants>,
    /// Fitted tail constant, used only to report whether `theta > 4 c psi`.
    #[serde(default)]
    pub msr_c: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolvedChain {
    pub epsilon: f64,
    pub phi: f64,
    pub psi: f64,
    pub s: f64,
    pub theta: f64,
}

/// `eps^(p/(p-1)) / (4 (8 c_p)^(1/(p-1)))`.
pub fn strict_phi(epsilon: f64, p: f64, c_p: f64) -> f64 {
    epsilon.powf(p / (p - 1.0)) / (4.0 * (8.0 * c_p).powf(1.0 / (p - 1.0)))
}

/// `C3 eps^(1 + 2/eta)` with
/// `C3 = min([8 (2c)^(1/eta) (16 + 16/eta)^(1 + 3/eta)]^-1,
///           [16 (2c)^(3/2 + 2/eta) (8 + 8/eta)^(4/eta)]^-1)`.
pub fn strict_psi(epsilon: f64, c: f64, eta: f64) -> f64 {
    let first = 8.0 * (2.0 * c).powf(1.0 / eta) * (16.0 + 16.0 / eta).powf(1.0 + 3.0 / eta);
    let second = 16.0 * (2.0 * c).powf(1.5 + 2.0 / eta) * (8.0 + 8.0 / eta).powf(4.0 / eta);
    (1.0 / first).min(1.0 / second) * epsilon.powf(1.0 + 2.0 / eta)
}

impl ChainParams {
    pub fn new(epsilon: f64) -> Self {
        ChainParams {
            epsilon,
            phi: None,
            psi: None,
            s: None,
            theta: None,
            strict: None,
            msr_c: None,
        }
    }

    pub fn resolve(&self) -> Result<ResolvedChain> {
        let eps = self.epsilon;
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidConfig(format!("epsilon must lie in (0, 1), got {eps}")));
        }
        if let Some(k) = &self.strict {
            if !(k.p > 1.0 && k.c_p > 0.0 && k.c > 0.0 && k.eta > 0.0) {
                return Err(Error::InvalidConfig(
                    "strict constants need p > 1 and positive c_p, c, eta".into(),
                ));
            }
        }
        let phi = self
            .phi
            .or(self.strict.map(|k| strict_phi(eps, k.p, k.c_p)))
            .unwrap_or(eps / 4.0);
        let psi = self
            .psi
            .or(self.strict.map(|k| strict_psi(eps, k.c, k.eta)))
            .unwrap_or(eps / 6.0);
        let s = self.s.unwrap_or(eps / 4.0);
        let theta = self.theta.unwrap_or(eps / 8.0);
        if !(phi > 0.0 && phi.is_finite() && psi > 0.0 && psi.is_finite()) {
            return Err(Error::InvalidConfig("budgets phi and psi must be positive".into()));
        }
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::InvalidConfig(format!("s must lie in (0, 1), got {s}")));
        }
        if !(theta > 0.0 && theta < 0.5) {
            return Err(Error::InvalidConfig(format!("theta must lie in (0, 1/2), got {theta}")));
        }
        Ok(ResolvedChain {
            epsilon: eps,
            phi,
            psi,
            s,
            theta,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub shift: f64,
    pub potential_before: f64,
    pub potential_after: f64,
    pub barrier: f64,
    /// `lambda_min(A_i)` for the lower chain, `lambda_max(A_i)` for the upper.
    pub true_extreme: f64,
    pub certificate_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub direction: Direction,
    pub n: usize,
    pub samples: usize,
    pub params: ResolvedChain,
    pub initial_barrier: f64,
    pub steps: Vec<StepRecord>,
    pub final_barrier: f64,
    /// `final_barrier / N`.
    pub certified_bound: f64,
    /// Extreme eigenvalue of `(1/N) sum_i B_i`.
    pub true_extreme: f64,
    pub all_certificates_ok: bool,
    /// Whether `theta > 4 c psi` for the supplied tail constant `c`.
    pub theta_exceeds_msr_bound: Option<bool>,
}

impl ChainReport {
    /// The certified bound lies on the correct side of the true eigenvalue.
    pub fn bound_holds(&self) -> bool {
        match self.direction {
            Direction::Lower => self.certified_bound <= self.true_extreme,
            Direction::Upper => self.certified_bound >= self.true_extreme,
        }
    }

    /// Every step kept its potential within `tol` (relative) of the previous one.
    pub fn potentials_nonincreasing(&self, tol: f64) -> bool {
        self.steps
            .iter()
            .all(|s| s.potential_after <= s.potential_before + tol * s.potential_before.max(1.0))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("chain report serializes")
    }

    /// Columns `step,shift,potential,barrier,true_extreme`.
    pub fn to_csv(&self) -> String {
        let rows: Vec<(usize, f64, f64, f64, f64)> = self
            .steps
            .iter()
            .map(|s| (s.step, s.shift, s.potential_after, s.barrier, s.true_extreme))
            .collect();
        crate::table::to_csv(&["step", "shift", "potential", "barrier", "true_extreme"], &rows)
    }
}

/// Runs the barrier chain over the given samples, starting from `A_0 = 0`
/// with `l_0 = -n / phi` (lower) or `u_0 = n / psi` (upper).
pub fn run_chain_on<I>(n: usize, samples: I, direction: Direction, params: &ChainParams) -> Result<ChainReport>
where
    I: IntoIterator<Item = SymMatrix>,
{
    let p = params.resolve()?;
    let theta_exceeds_msr_bound = params.msr_c.map(|c| {
        let ok = p.theta > 4.0 * c * p.psi;
        if direction == Direction::Upper && !ok {
            log::warn!("theta = {} does not exceed 4 c psi = {}", p.theta, 4.0 * c * p.psi);
        }
        ok
    });
    let mut steps = Vec::new();
    let (initial_barrier, final_barrier, extreme) = match direction {
        Direction::Lower => {
            let mut state = LowerBarrierState::initial(n, p.phi)?;
            let initial = state.l();
            for b in samples {
                let out = lower_step(&state, &b, p.s)?;
                steps.push(StepRecord {
                    step: out.state.step_count(),
                    shift: out.delta,
                    potential_before: out.potential_before,
                    potential_after: out.potential_after,
                    barrier: out.state.l(),
                    true_extreme: out.state.lambda_min(),
                    certificate_ok: out.certificate_ok,
                });
                state = out.state;
            }
            (initial, state.l(), state.lambda_min())
        }
        Direction::Upper => {
            let mut state = UpperBarrierState::initial(n, p.psi)?;
            let initial = state.u();
            for b in samples {
                let out = upper_step(&state, &b, p.theta)?;
                steps.push(StepRecord {
                    step: out.state.step_count(),
                    shift: out.shift.delta,
                    potential_before: out.potential_before,
                    potential_after: out.potential_after,
                    barrier: out.state.u(),
                    true_extreme: out.state.lambda_max(),
                    certificate_ok: out.certificate_ok,
                });
                state = out.state;
            }
            (initial, state.u(), state.lambda_max())
        }
    };
    let samples = steps.len();
    if samples == 0 {
        return Err(Error::InvalidConfig("chain needs at least one sample".into()));
    }
    let all_certificates_ok = steps.iter().all(|s| s.certificate_ok);
    Ok(ChainReport {
        direction,
        n,
        samples,
        params: p,
        initial_barrier,
        steps,
        final_barrier,
        certified_bound: final_barrier / samples as f64,
        true_extreme: extreme / samples as f64,
        all_certificates_ok,
        theta_exceeds_msr_bound,
    })
}

/// Draws `N` samples of `spec` from `stream` and runs the chain on them.
pub fn run_chain(
    spec: &EnsembleSpec,
    samples: usize,
    direction: Direction,
    params: &ChainParams,
    stream: RngStream,
) -> Result<ChainReport> {
    spec.validate()?;
    if samples == 0 {
        return Err(Error::InvalidConfig("chain needs N >= 1".into()));
    }
    let mut rng = stream.generator();
    let draws = (0..samples).map(move |_| ensembles::sample(spec, &mut rng));
    run_chain_on(spec.dim(), draws, direction, params)
}
