use serde::{Deserialize, Serialize};

use super::{map_cells, ExperimentConfig, Proportion, SumSampler};
use crate::ensembles::{self, EnsembleSpec};
use crate::error::{Error, Result};
use crate::linalg::sym_eigvals;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogConcaveRow {
    pub n_samples: usize,
    pub h: f64,
    /// This row is the `N = ceil(96 n / eps^2)` point.
    pub at_n_star: bool,
    /// `1 + eps + 6n / (eps N)`.
    pub upper_threshold: f64,
    /// `1 - eps - 3n / (eps N)`.
    pub lower_threshold: f64,
    /// `lambda_max > upper_threshold`.
    pub upper_failure: Proportion,
    /// `lambda_min < lower_threshold`.
    pub lower_failure: Proportion,
    /// `||M - I|| > eps`.
    pub norm_failure: Proportion,
    /// `m >= (C / eps^6) log(C n N)^2` for the configured `C`.
    pub large_m_regime: Option<bool>,
}

/// `m >= (C / eps^6) (ln(C n N))^2`.
pub fn large_m_regime(m: usize, n: usize, count: usize, epsilon: f64, c: f64) -> bool {
    let log = (c * n as f64 * count as f64).ln();
    m as f64 >= c / epsilon.powi(6) * log * log
}

/// `ceil(96 n / eps^2)`.
pub fn n_star(n: usize, epsilon: f64) -> usize {
    (96.0 * n as f64 / (epsilon * epsilon)).ceil() as usize
}

/// Per replica `(lambda_min, lambda_max)` of the empirical mean.
fn extremes(config: &ExperimentConfig, count: usize, grid: usize, replica: usize) -> Result<(f64, f64)> {
    let fast = config.logconcave.sampler == SumSampler::Wishart;
    let mut rng = config.cell_stream(grid, replica).generator();
    let mean = ensembles::sample_sum(&config.spec, count, fast, &mut rng).scaled(1.0 / count as f64);
    let vals = sym_eigvals(&mean)?;
    Ok((vals[0], vals[vals.len() - 1]))
}

/// Failure frequencies of the high-probability eigenvalue bounds over the
/// grid, plus the norm event at `N = ceil(96 n / eps^2)`. The last row is
/// the `N*` point unless the grid already contains it.
pub fn run_logconcave(config: &ExperimentConfig) -> Result<Vec<LogConcaveRow>> {
    let (n, m) = match config.spec {
        EnsembleSpec::IsotropicGaussianMatrix { n, m } => (n, m),
        ref other => {
            return Err(Error::InvalidConfig(format!(
                "log-concave mode needs an IsotropicGaussianMatrix ensemble, got {}",
                other.kind_name()
            )))
        }
    };
    let eps = config.epsilon;
    let star = n_star(n, eps);
    let mut counts = config.n_grid.clone();
    if !counts.contains(&star) {
        counts.push(star);
    }
    let cells = map_cells(config, counts.len(), |i, r| extremes(config, counts[i], i, r))?;
    Ok(counts
        .iter()
        .zip(cells)
        .map(|(&count, reps)| {
            let upper_threshold = 1.0 + eps + 6.0 * n as f64 / (eps * count as f64);
            let lower_threshold = 1.0 - eps - 3.0 * n as f64 / (eps * count as f64);
            LogConcaveRow {
                n_samples: count,
                h: n as f64 / count as f64,
                at_n_star: count == star,
                upper_threshold,
                lower_threshold,
                upper_failure: Proportion::count(reps.iter().map(|&(_, hi)| hi > upper_threshold)),
                lower_failure: Proportion::count(reps.iter().map(|&(lo, _)| lo < lower_threshold)),
                norm_failure: Proportion::count(
                    reps.iter().map(|&(lo, hi)| (hi - 1.0).abs().max((1.0 - lo).abs()) > eps),
                ),
                large_m_regime: config
                    .logconcave
                    .large_m_constant
                    .map(|c| large_m_regime(m, n, count, eps, c)),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::Mode;

    #[test]
    fn degenerate_m_still_reports() {
        let cfg = ExperimentConfig::new(
            Mode::LogConcave,
            EnsembleSpec::IsotropicGaussianMatrix { n: 4, m: 1 },
            vec![2, 8],
            5,
            0.5,
        );
        let rows = run_logconcave(&cfg).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows[2].at_n_star && rows[2].n_samples == 1536);
        for r in &rows {
            for p in [r.upper_failure, r.lower_failure, r.norm_failure] {
                assert!((0.0..=1.0).contains(&p.estimate));
                assert_eq!(p.trials, 5);
            }
        }
    }

    #[test]
    fn wrong_kind_rejected() {
        let cfg = ExperimentConfig::new(Mode::LogConcave, EnsembleSpec::Identity { n: 2 }, vec![2], 1, 0.5);
        assert!(matches!(run_logconcave(&cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn regime_flag() {
        assert!(large_m_regime(10_000, 4, 100, 0.9, 1.0));
        assert!(!large_m_regime(10, 4, 100, 0.5, 1.0));
    }
}
