//! Monte Carlo diagnostics for projection regularity of a matrix ensemble:
//! power-law tails of `||PBP||` and `Tr(PB)`, directional moments and
//! concentration of `Tr(PB)` for Gaussian-entry matrices.
//!
//! Trial `j` of every estimator draws from `stream.child(j)`, so results do
//! not depend on the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensembles::{self, sample_haar_frame, sample_haar_projection, sample_unit_vector, EnsembleSpec};
use crate::error::{Error, Result};
use crate::linalg::{operator_norm, EIG_TOL, Matrix, Projection, SymMatrix};
use crate::rng::RngStream;

/// Normal quantile for a two-sided 95% band.
const Z95: f64 = 1.96;

/// Minimum number of grid points inside the regression window.
pub const MIN_TAIL_POINTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailMode {
    /// `||PBP||`.
    OperatorNorm,
    /// `Tr(PB)`.
    Trace,
}

/// How each trial picks its rank-`k` projection.
#[derive(Debug, Clone, PartialEq)]
pub enum ProjectionChoice {
    /// Fresh Haar-random projection per trial.
    Haar,
    /// Coordinate projections `e_j, ..., e_{j+k-1}` (indices mod `n`),
    /// cycling `j` over trials.
    Canonical,
    /// The same projection in every trial.
    Fixed(Projection),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub mode: TailMode,
    pub rank: usize,
    pub t_grid: Vec<f64>,
    pub survival: Vec<f64>,
    pub trials: usize,
    pub fitted_c: Option<f64>,
    pub fitted_eta: Option<f64>,
    /// Half-width of the 95% normal-approximation band at each grid point.
    pub ci_width: Vec<f64>,
    pub stream: RngStream,
}

impl TailEstimate {
    /// Builds an estimate from raw statistics; `survival[j]` is the fraction
    /// of `stats` that are `>= t_grid[j]`, up to a relative rounding slack of
    /// [`EIG_TOL`].
    pub fn from_statistics(
        mode: TailMode,
        rank: usize,
        t_grid: &[f64],
        stats: &[f64],
        stream: RngStream,
    ) -> Result<Self> {
        check_grid(t_grid)?;
        if stats.is_empty() {
            return Err(Error::InvalidConfig("tail estimate needs at least one trial".into()));
        }
        let mut sorted = stats.to_vec();
        sorted.sort_by(f64::total_cmp);
        let trials = sorted.len();
        let survival: Vec<f64> = t_grid
            .iter()
            .map(|&t| {
                let below = sorted.partition_point(|&x| x < t * (1.0 - EIG_TOL));
                (trials - below) as f64 / trials as f64
            })
            .collect();
        let ci_width = survival.iter().map(|&p| binomial_half_width(p, trials)).collect();
        let mut est = TailEstimate {
            mode,
            rank,
            t_grid: t_grid.to_vec(),
            survival,
            trials,
            fitted_c: None,
            fitted_eta: None,
            ci_width,
            stream,
        };
        if let Ok((c, eta)) = fit_power_tail(&est) {
            est.fitted_c = Some(c);
            est.fitted_eta = Some(eta);
        }
        Ok(est)
    }

    /// Columns `t,survival,ci_low,ci_high`.
    pub fn to_csv(&self) -> String {
        let rows: Vec<(f64, f64, f64, f64)> = self
            .t_grid
            .iter()
            .zip(&self.survival)
            .zip(&self.ci_width)
            .map(|((&t, &s), &w)| (t, s, (s - w).max(0.0), (s + w).min(1.0)))
            .collect();
        crate::table::to_csv(&["t", "survival", "ci_low", "ci_high"], &rows)
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "mode": self.mode,
            "rank": self.rank,
            "trials": self.trials,
            "fitted_c": self.fitted_c,
            "fitted_eta": self.fitted_eta,
            "seed": self.stream.master_seed,
            "stream_index": self.stream.stream_index,
        })
    }

    /// Empirical survival at `t`, interpolating nothing: `t` must be a grid point.
    pub fn survival_at(&self, t: f64) -> Option<f64> {
        self.t_grid
            .iter()
            .position(|&g| g == t)
            .map(|j| self.survival[j])
    }
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::InvalidConfig("t grid is empty".into()));
    }
    if !t_grid.iter().all(|t| t.is_finite() && *t > 0.0) {
        return Err(Error::InvalidConfig("t grid must be positive and finite".into()));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig("t grid must be strictly increasing".into()));
    }
    Ok(())
}

pub fn binomial_half_width(p: f64, trials: usize) -> f64 {
    Z95 * (p * (1.0 - p) / trials as f64).sqrt()
}

/// `n` points geometrically spaced from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let ratio = (hi / lo).powf(1.0 / (n - 1) as f64);
    (0..n).map(|j| lo * ratio.powi(j as i32)).collect()
}

fn projection_for_trial(
    choice: &ProjectionChoice,
    n: usize,
    k: usize,
    trial: usize,
    rng: &mut crate::rng::StreamRng,
) -> Projection {
    match choice {
        ProjectionChoice::Haar => sample_haar_projection(n, k, rng),
        ProjectionChoice::Canonical => {
            let mut basis = Matrix::zeros(n, k);
            for c in 0..k {
                basis.set((trial + c) % n, c, 1.0);
            }
            Projection::from_orthonormal(basis)
        }
        ProjectionChoice::Fixed(p) => p.clone(),
    }
}

/// Statistic of one compressed sample `V^t B V`.
fn projected_statistic(mode: TailMode, compressed: &SymMatrix) -> Result<f64> {
    match mode {
        TailMode::Trace => Ok(compressed.trace()),
        TailMode::OperatorNorm if compressed.dim() == 1 => Ok(compressed.get(0, 0).abs()),
        TailMode::OperatorNorm => operator_norm(compressed),
    }
}

/// Raw per-trial statistics `||PBP||` or `Tr(PB)`.
pub fn sample_projection_statistics(
    spec: &EnsembleSpec,
    mode: TailMode,
    k: usize,
    projection: &ProjectionChoice,
    trials: usize,
    stream: RngStream,
) -> Result<Vec<f64>> {
    spec.validate()?;
    let n = spec.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidConfig(format!("projection rank {k} must lie in 1..={n}")));
    }
    if let ProjectionChoice::Fixed(p) = projection {
        if p.dim() != n || p.rank() != k {
            return Err(Error::DimMismatch {
                expected: n,
                found: p.dim(),
            });
        }
    }
    (0..trials)
        .into_par_iter()
        .map(|j| {
            let mut rng = stream.child(j as u64).generator();
            let p = projection_for_trial(projection, n, k, j, &mut rng);
            let b = ensembles::sample(spec, &mut rng);
            projected_statistic(mode, &p.compress(&b)?)
        })
        .collect()
}

/// Empirical survival function of `||PBP||` or `Tr(PB)` over rank-`k`
/// projections, followed by a power-law fit when the tail allows one.
pub fn estimate_projection_tail(
    spec: &EnsembleSpec,
    mode: TailMode,
    k: usize,
    t_grid: &[f64],
    trials: usize,
    projection: &ProjectionChoice,
    stream: RngStream,
) -> Result<TailEstimate> {
    check_grid(t_grid)?;
    if t_grid[0] < k as f64 {
        return Err(Error::InvalidConfig(format!(
            "tail grid must start at or above the projection rank {k}"
        )));
    }
    let stats = sample_projection_statistics(spec, mode, k, projection, trials, stream)?;
    TailEstimate::from_statistics(mode, k, t_grid, &stats, stream)
}

/// Least-squares fit of `ln S(t) = ln c - (1 + eta) ln t` over grid points
/// with survival in `(10 / trials, 0.5)`. Returns `(c, eta)` with `eta`
/// floored at zero.
pub fn fit_power_tail(estimate: &TailEstimate) -> Result<(f64, f64)> {
    let floor = 10.0 / estimate.trials as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = estimate
        .t_grid
        .iter()
        .zip(&estimate.survival)
        .filter(|(_, &s)| s > floor && s < 0.5)
        .map(|(&t, &s)| (t.ln(), s.ln()))
        .unzip();
    if xs.len() < MIN_TAIL_POINTS {
        return Err(Error::InsufficientTail { points: xs.len() });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    Ok((intercept.exp(), (slope.abs() - 1.0).max(0.0)))
}

/// Test directions for [`check_mwr`].
#[derive(Debug, Clone, PartialEq)]
pub enum Directions {
    /// This many Haar-random unit vectors.
    Haar(usize),
    /// Explicit vectors; each must have unit norm.
    Fixed(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub p: f64,
    pub direction_count: usize,
    pub max_empirical_moment: f64,
    pub c_p: f64,
    pub pass: bool,
    /// Empirical `E <Bx, x>^p` per direction.
    pub moments: Vec<f64>,
}

/// Empirical `max_x E <Bx, x>^p` over the given directions, compared with the
/// declared bound `c_p`.
pub fn check_mwr(
    spec: &EnsembleSpec,
    p: f64,
    directions: &Directions,
    trials: usize,
    c_p: f64,
    stream: RngStream,
) -> Result<MomentCheck> {
    spec.validate()?;
    if !(p > 1.0) {
        return Err(Error::InvalidConfig(format!("moment order p must exceed 1, got {p}")));
    }
    if trials == 0 {
        return Err(Error::InvalidConfig("moment check needs at least one trial".into()));
    }
    let n = spec.dim();
    let dirs: Vec<Vec<f64>> = match directions {
        Directions::Haar(count) => {
            let mut rng = stream.child(u64::MAX).generator();
            (0..*count).map(|_| sample_unit_vector(n, &mut rng)).collect()
        }
        Directions::Fixed(v) => {
            for x in v {
                if x.len() != n {
                    return Err(Error::DimMismatch {
                        expected: n,
                        found: x.len(),
                    });
                }
                let norm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
                if (norm - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidConfig(format!("direction has norm {norm}, expected 1")));
                }
            }
            v.clone()
        }
    };
    if dirs.is_empty() {
        return Err(Error::InvalidConfig("need at least one direction".into()));
    }
    let per_trial: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|j| {
            let mut rng = stream.child(j as u64).generator();
            let b = ensembles::sample(spec, &mut rng);
            dirs.iter().map(|x| b.quad_form(x).max(0.0).powf(p)).collect()
        })
        .collect();
    let moments: Vec<f64> = (0..dirs.len())
        .map(|d| per_trial.iter().map(|row| row[d]).sum::<f64>() / trials as f64)
        .collect();
    let max_empirical_moment = moments.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(MomentCheck {
        p,
        direction_count: dirs.len(),
        max_empirical_moment,
        c_p,
        pass: max_empirical_moment <= c_p,
        moments,
    })
}

/// `Tr(PB)` for `B = A A^t` evaluated through the stacked vector
/// `A' = sqrt(m) vec(A)` and `P' = I_m (x) P`, as `||P' A'||^2 / m`.
pub fn stacked_projection_trace(a: &Matrix, p: &Projection) -> Result<f64> {
    let (n, m) = (a.rows(), a.cols());
    if p.dim() != n {
        return Err(Error::DimMismatch {
            expected: n,
            found: p.dim(),
        });
    }
    let scale = (m as f64).sqrt();
    let stacked: Vec<f64> = (0..m)
        .flat_map(|j| a.column(j).into_iter().map(move |x| scale * x))
        .collect();
    let v = p.basis();
    let mut total = 0.0;
    // P' acts blockwise: block j of P'A' is P applied to block j of A'.
    for block in stacked.chunks(n) {
        for c in 0..p.rank() {
            let coef: f64 = (0..n).map(|i| v.get(i, c) * block[i]).sum();
            total += coef * coef;
        }
    }
    Ok(total / m as f64)
}

/// One probability curve with its reference bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    pub probability: f64,
    pub reference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThinShellParams {
    pub n: usize,
    pub m: usize,
    pub rank: usize,
    /// Relative deviations `t` for `P{|Tr(PB) - k| >= t k}`.
    pub t_grid: Vec<f64>,
    /// Levels `t` for `P{Tr(PB) >= c1 t}`.
    pub large_deviation_grid: Vec<f64>,
    /// Levels `eps` for `P{Tr(PB) <= c2 eps k}`.
    pub small_ball_grid: Vec<f64>,
    pub c1: f64,
    pub c2: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThinShellStats {
    /// Two-sided deviation survival, mode `Trace`, grid in relative units.
    pub deviation: TailEstimate,
    /// Reference `exp(-sqrt(t m))`.
    pub large_deviation: Vec<CurvePoint>,
    /// Reference `eps^(c2 sqrt(m k))`.
    pub small_ball: Vec<CurvePoint>,
}

/// Concentration of `Tr(PB)` for `B = A A^t` with `A` an `n x m` matrix of
/// i.i.d. `N(0, 1/m)` entries and `P` a Haar (or fixed) rank-`k` projection.
pub fn thin_shell_stats(
    params: &ThinShellParams,
    projection: &ProjectionChoice,
    stream: RngStream,
) -> Result<ThinShellStats> {
    let ThinShellParams { n, m, rank: k, .. } = *params;
    EnsembleSpec::IsotropicGaussianMatrix { n, m }.validate()?;
    if k == 0 || k > n {
        return Err(Error::InvalidConfig(format!("projection rank {k} must lie in 1..={n}")));
    }
    check_grid(&params.t_grid)?;
    let traces: Vec<f64> = (0..params.trials)
        .into_par_iter()
        .map(|j| {
            let mut rng = stream.child(j as u64).generator();
            let (a, _) = ensembles::sample_isotropic_gaussian_matrix(n, m, &mut rng);
            let v = match projection {
                ProjectionChoice::Haar => sample_haar_frame(n, k, &mut rng),
                other => projection_for_trial(other, n, k, j, &mut rng).basis().clone(),
            };
            // Tr(PB) = ||V^t A||_F^2
            let mut total = 0.0;
            for c in 0..k {
                for col in 0..m {
                    let dot: f64 = (0..n).map(|i| v.get(i, c) * a.get(i, col)).sum();
                    total += dot * dot;
                }
            }
            total
        })
        .collect();
    let kf = k as f64;
    let deviations: Vec<f64> = traces.iter().map(|t| (t - kf).abs() / kf).collect();
    let deviation =
        TailEstimate::from_statistics(TailMode::Trace, k, &params.t_grid, &deviations, stream)?;
    let trials = traces.len() as f64;
    let fraction = |pred: &dyn Fn(f64) -> bool| traces.iter().filter(|&&x| pred(x)).count() as f64 / trials;
    let large_deviation = params
        .large_deviation_grid
        .iter()
        .map(|&t| CurvePoint {
            x: t,
            probability: fraction(&|x| x >= params.c1 * t),
            reference: (-(t * m as f64).sqrt()).exp(),
        })
        .collect();
    let small_ball = params
        .small_ball_grid
        .iter()
        .map(|&eps| CurvePoint {
            x: eps,
            probability: fraction(&|x| x <= params.c2 * eps * kf),
            reference: eps.powf(params.c2 * (m as f64 * kf).sqrt()),
        })
        .collect();
    Ok(ThinShellStats {
        deviation,
        large_deviation,
        small_ball,
    })
}
