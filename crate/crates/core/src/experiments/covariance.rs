use serde::{Deserialize, Serialize};

use super::{map_cells, ExperimentConfig, Summary};
use crate::ensembles;
use crate::error::Result;
use crate::linalg::{sym_eigvals, SymMatrix};

/// Relative slack for the per-replica inequalities.
const CHECK_TOL: f64 = 1e-12;

/// Statistics of one replica: `M = (1/N) sum_i B_i` and `tau = Tr(M) / n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceReplica {
    /// `||M - I||`.
    pub error: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// `||M - tau I|| = max(lambda_max - tau, tau - lambda_min)`.
    pub alpha: f64,
    /// `|tau - 1|`.
    pub beta: f64,
    /// `|(1/N) sum_i Z_i - 1|` with `Z_i = Tr(B_i) / n`, accumulated per sample.
    pub beta_z: f64,
}

impl CovarianceReplica {
    /// `error <= alpha + beta` up to rounding.
    pub fn triangle_holds(&self) -> bool {
        self.error <= (self.alpha + self.beta) * (1.0 + CHECK_TOL) + CHECK_TOL
    }

    /// `alpha <= lambda_max - lambda_min` up to rounding.
    pub fn alpha_bound_holds(&self) -> bool {
        self.alpha <= (self.lambda_max - self.lambda_min) * (1.0 + CHECK_TOL) + CHECK_TOL
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceRow {
    pub n_samples: usize,
    /// `n / N`.
    pub h: f64,
    pub error: Summary,
    pub lambda_min: Summary,
    pub lambda_max: Summary,
    pub alpha: Summary,
    pub beta: Summary,
    pub beta_z: Summary,
    /// `sqrt(sum_ij Var(B_ij) / N)`.
    pub clt_bound: f64,
    pub triangle_violations: usize,
    pub alpha_violations: usize,
    pub replicas: Vec<CovarianceReplica>,
}

/// Replica statistics for `N` draws of the configured ensemble.
fn one_replica(config: &ExperimentConfig, count: usize, grid: usize, replica: usize) -> Result<CovarianceReplica> {
    let spec = &config.spec;
    let n = spec.dim();
    let mut rng = config.cell_stream(grid, replica).generator();
    let mut sum = SymMatrix::zeros(n);
    let mut z_sum = 0.0;
    for _ in 0..count {
        let b = ensembles::sample(spec, &mut rng);
        z_sum += b.trace() / n as f64;
        sum.add_assign(&b)?;
    }
    let mean = sum.scaled(1.0 / count as f64);
    let vals = sym_eigvals(&mean)?;
    let (lo, hi) = (vals[0], vals[n - 1]);
    let tau = mean.trace() / n as f64;
    Ok(CovarianceReplica {
        error: (hi - 1.0).abs().max((lo - 1.0).abs()),
        lambda_min: lo,
        lambda_max: hi,
        alpha: (hi - tau).max(tau - lo),
        beta: (tau - 1.0).abs(),
        beta_z: (z_sum / count as f64 - 1.0).abs(),
    })
}

fn summarize(reps: &[CovarianceReplica], f: impl Fn(&CovarianceReplica) -> f64) -> Summary {
    Summary::of(&reps.iter().map(f).collect::<Vec<_>>())
}

/// Error of the empirical mean against `I` and its trace/traceless split,
/// for every `N` in the grid.
pub fn run_covariance(config: &ExperimentConfig) -> Result<Vec<CovarianceRow>> {
    let grid = &config.n_grid;
    let n = config.spec.dim();
    let cells = map_cells(config, grid.len(), |i, r| one_replica(config, grid[i], i, r))?;
    Ok(grid
        .iter()
        .zip(cells)
        .map(|(&count, reps)| CovarianceRow {
            n_samples: count,
            h: n as f64 / count as f64,
            error: summarize(&reps, |r| r.error),
            lambda_min: summarize(&reps, |r| r.lambda_min),
            lambda_max: summarize(&reps, |r| r.lambda_max),
            alpha: summarize(&reps, |r| r.alpha),
            beta: summarize(&reps, |r| r.beta),
            beta_z: summarize(&reps, |r| r.beta_z),
            clt_bound: config.spec.clt_bound(count),
            triangle_violations: reps.iter().filter(|r| !r.triangle_holds()).count(),
            alpha_violations: reps.iter().filter(|r| !r.alpha_bound_holds()).count(),
            replicas: reps,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::EnsembleSpec;
    use crate::experiments::Mode;

    #[test]
    fn identity_has_zero_error() {
        let cfg = ExperimentConfig::new(Mode::CovarianceError, EnsembleSpec::Identity { n: 4 }, vec![1, 7], 3, 0.5);
        for row in run_covariance(&cfg).unwrap() {
            assert_eq!(row.error.mean, 0.0);
            assert_eq!(row.alpha.mean, 0.0);
            assert_eq!(row.triangle_violations, 0);
        }
    }

    #[test]
    fn split_is_consistent() {
        let cfg = ExperimentConfig::new(
            Mode::CovarianceError,
            EnsembleSpec::RankOneGaussian { n: 5 },
            vec![10, 40],
            8,
            0.5,
        );
        for row in run_covariance(&cfg).unwrap() {
            assert_eq!(row.triangle_violations + row.alpha_violations, 0);
            for r in &row.replicas {
                assert!((r.beta - r.beta_z).abs() < 1e-9);
            }
        }
    }
}
