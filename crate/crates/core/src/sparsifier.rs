//! Deterministic spectral sparsification of a sum of PSD matrices.
//!
//! Given `B_1, ..., B_m` with positive definite total `B`, [`sparsify`]
//! returns weights `y >= 0` with at most `ceil(SUPPORT_FACTOR * n / eps^2)`
//! nonzeros such that `B <= sum_i y_i B_i <= (1 + eps) B`.
//!
//! The inputs are whitened to `C_i = B^{-1/2} B_i B^{-1/2}` (so `sum C_i = I`)
//! and a weighted sum `A` is grown one term per round while a lower barrier
//! `l` and an upper barrier `u` advance by fixed increments. Each round takes
//! the lowest index whose upper quotient does not exceed its lower quotient;
//! the quotients use traces, which bound the operator norms in the exact
//! single-step conditions, so every step keeps both potentials from growing.
//!
//! A singular total is rejected with [`Error::SingularTotal`]. To sparsify
//! such a family, restrict it to the range of `B` first: take an orthonormal
//! basis `V` of that range and pass `V^t B_i V`; the weights carry over.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{sym_eig, sym_eigvals, trace_inner, SymMatrix, EIG_TOL};

/// The support never exceeds `ceil(SUPPORT_FACTOR * n / eps^2)`.
///
/// The run performs `ceil(d n)` rounds with `d = (1 + sqrt(1 + eps))^4 / eps^2`,
/// and `(1 + sqrt(1 + eps))^4 < (1 + sqrt 2)^4 < 34` for `eps < 1`.
pub const SUPPORT_FACTOR: f64 = 34.0;

/// Slack used when verifying the sandwich.
pub const SANDWICH_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsifyStep {
    pub round: usize,
    pub index: usize,
    /// Weight added to the whitened `C_index` before final normalization.
    pub weight: f64,
    pub lower_barrier: f64,
    pub upper_barrier: f64,
    pub lower_potential: f64,
    pub upper_potential: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsifyResult {
    pub weights: Vec<f64>,
    pub support_size: usize,
    pub sandwich_lo: f64,
    pub sandwich_hi: f64,
    pub pass: bool,
    pub epsilon: f64,
    pub steps: Vec<SparsifyStep>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichCheck {
    pub lo: f64,
    pub hi: f64,
    pub pass: bool,
}

/// Fixed schedule derived from `eps`.
#[derive(Debug, Clone, Copy)]
struct Schedule {
    rounds: usize,
    delta_l: f64,
    delta_u: f64,
    l0: f64,
    u0: f64,
}

impl Schedule {
    fn new(n: usize, eps: f64) -> Self {
        let r = (1.0 + eps).sqrt();
        // ((sqrt d + 1) / (sqrt d - 1))^2 = 1 + eps
        let sd = (r + 1.0) / (r - 1.0);
        let d = sd * sd;
        let nf = n as f64;
        let eps_u = (sd - 1.0) / (d + sd);
        Schedule {
            rounds: (d * nf).ceil() as usize,
            delta_l: 1.0,
            delta_u: (sd + 1.0) / (sd - 1.0),
            l0: -nf * sd,
            u0: nf / eps_u,
        }
    }
}

fn check_inputs(b_list: &[SymMatrix]) -> Result<usize> {
    let first = b_list
        .first()
        .ok_or_else(|| Error::InvalidConfig("need at least one matrix".into()))?;
    let n = first.dim();
    for b in b_list {
        if b.dim() != n {
            return Err(Error::DimMismatch {
                expected: n,
                found: b.dim(),
            });
        }
    }
    Ok(n)
}

/// `B^{-1/2}` for the total `B`, or [`Error::SingularTotal`].
fn inverse_sqrt_of_total(b_list: &[SymMatrix], n: usize) -> Result<SymMatrix> {
    let mut total = SymMatrix::zeros(n);
    for b in b_list {
        total.add_assign(b)?;
    }
    let eig = sym_eig(&total)?;
    if !(eig.min() > n as f64 * EIG_TOL) {
        return Err(Error::SingularTotal { lambda_min: eig.min() });
    }
    Ok(eig.map(|x| 1.0 / x.sqrt()))
}

fn whiten(w: &SymMatrix, b: &SymMatrix) -> Result<SymMatrix> {
    b.congruence(&w.to_matrix())
}

/// Extreme eigenvalues of `B^{-1/2} (sum_i y_i B_i) B^{-1/2}`, with `pass` iff
/// they lie in `[1 - 1e-8, 1 + eps + 1e-8]`.
pub fn verify_sandwich(b_list: &[SymMatrix], weights: &[f64], epsilon: f64) -> Result<SandwichCheck> {
    let n = check_inputs(b_list)?;
    if weights.len() != b_list.len() {
        return Err(Error::DimMismatch {
            expected: b_list.len(),
            found: weights.len(),
        });
    }
    let w = inverse_sqrt_of_total(b_list, n)?;
    let mut sum = SymMatrix::zeros(n);
    for (b, &y) in b_list.iter().zip(weights) {
        if y != 0.0 {
            sum.add_assign(&b.scaled(y))?;
        }
    }
    let vals = sym_eigvals(&whiten(&w, &sum)?)?;
    let (lo, hi) = (vals[0], vals[n - 1]);
    Ok(SandwichCheck {
        lo,
        hi,
        pass: lo >= 1.0 - SANDWICH_TOL && hi <= 1.0 + epsilon + SANDWICH_TOL,
    })
}

/// Weights `y` with `B <= sum_i y_i B_i <= (1 + eps) B` and support at most
/// `ceil(SUPPORT_FACTOR * n / eps^2)`. Deterministic: ties go to the lowest
/// index. Weights are scaled so that the lower sandwich edge sits at one.
pub fn sparsify(b_list: &[SymMatrix], epsilon: f64) -> Result<SparsifyResult> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidConfig(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let n = check_inputs(b_list)?;
    let w = inverse_sqrt_of_total(b_list, n)?;
    let whitened: Vec<SymMatrix> = b_list.iter().map(|b| whiten(&w, b)).collect::<Result<_>>()?;

    let sched = Schedule::new(n, epsilon);
    let mut a = SymMatrix::zeros(n);
    let mut spectrum = sym_eig(&a)?;
    let (mut l, mut u) = (sched.l0, sched.u0);
    let mut raw = vec![0.0; b_list.len()];
    let mut steps = Vec::with_capacity(sched.rounds);
    let mut upper_pot: f64 = spectrum.eigenvalues.iter().map(|x| 1.0 / (u - x)).sum();
    let mut lower_pot: f64 = spectrum.eigenvalues.iter().map(|x| 1.0 / (x - l)).sum();

    for round in 1..=sched.rounds {
        let (u_next, l_next) = (u + sched.delta_u, l + sched.delta_l);
        let lam = &spectrum.eigenvalues;
        let up_drop: f64 = lam
            .iter()
            .map(|x| sched.delta_u / ((u - x) * (u_next - x)))
            .sum();
        let low_rise: f64 = lam
            .iter()
            .map(|x| sched.delta_l / ((x - l_next) * (x - l)))
            .sum();
        if lam.iter().any(|&x| !(x - l_next > 0.0)) {
            return Err(Error::StepStall { round });
        }
        let m_u = spectrum.map(|x| 1.0 / (u_next - x));
        let m_u2 = spectrum.map(|x| 1.0 / (u_next - x).powi(2));
        let m_l = spectrum.map(|x| 1.0 / (x - l_next));
        let m_l2 = spectrum.map(|x| 1.0 / (x - l_next).powi(2));

        let quotients: Vec<(f64, f64)> = whitened
            .par_iter()
            .map(|c| {
                let upper = trace_inner(&m_u2, c)? / up_drop + trace_inner(&m_u, c)?;
                let lower = trace_inner(&m_l2, c)? / low_rise - trace_inner(&m_l, c)?;
                Ok((upper, lower))
            })
            .collect::<Result<_>>()?;
        let (index, (uq, lq)) = quotients
            .iter()
            .copied()
            .enumerate()
            .find(|&(_, (uq, lq))| lq > 0.0 && uq <= lq)
            .ok_or(Error::StepStall { round })?;
        let weight = 2.0 / (uq + lq);

        a.add_assign(&whitened[index].scaled(weight))?;
        raw[index] += weight;
        spectrum = sym_eig(&a)?;
        u = u_next;
        l = l_next;
        let (lmin, lmax) = (spectrum.min(), spectrum.max());
        if !(lmin > l && lmax < u) {
            return Err(Error::CertificateBroken {
                step: round,
                reason: format!("spectrum [{lmin}, {lmax}] left the barriers ({l}, {u})"),
            });
        }
        let new_upper: f64 = spectrum.eigenvalues.iter().map(|x| 1.0 / (u - x)).sum();
        let new_lower: f64 = spectrum.eigenvalues.iter().map(|x| 1.0 / (x - l)).sum();
        if new_upper > upper_pot * (1.0 + SANDWICH_TOL) || new_lower > lower_pot * (1.0 + SANDWICH_TOL) {
            return Err(Error::CertificateBroken {
                step: round,
                reason: "a barrier potential increased".into(),
            });
        }
        upper_pot = new_upper;
        lower_pot = new_lower;
        steps.push(SparsifyStep {
            round,
            index,
            weight,
            lower_barrier: l,
            upper_barrier: u,
            lower_potential: lower_pot,
            upper_potential: upper_pot,
        });
    }

    let scale = spectrum.min();
    let weights: Vec<f64> = raw.iter().map(|y| y / scale).collect();
    let check = verify_sandwich(b_list, &weights, epsilon)?;
    Ok(SparsifyResult {
        support_size: weights.iter().filter(|&&y| y != 0.0).count(),
        weights,
        sandwich_lo: check.lo,
        sandwich_hi: check.hi,
        pass: check.pass,
        epsilon,
        steps,
    })
}

/// Upper bound on the support returned by [`sparsify`].
pub fn support_bound(n: usize, epsilon: f64) -> usize {
    (SUPPORT_FACTOR * n as f64 / (epsilon * epsilon)).ceil() as usize
}

/// Reads every `*.json` matrix archive in `dir`, ordered by file name.
pub fn load_archive_dir(dir: &Path) -> Result<Vec<SymMatrix>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|entry| entry.map(|e| e.path()).map_err(|e| Error::io(dir, e)))
        .collect::<Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|ext| ext == "json"));
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            SymMatrix::from_json(&text)
        })
        .collect()
}
