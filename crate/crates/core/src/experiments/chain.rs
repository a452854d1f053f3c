use serde::{Deserialize, Serialize};

use super::{map_cells, ExperimentConfig, Summary};
use crate::barrier::{run_chain_on, ChainReport, Direction};
use crate::ensembles;
use crate::error::Result;

/// Both chains of one replica, run over the same samples.
struct ReplicaPair {
    lower: ChainReport,
    upper: ChainReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRow {
    pub n_samples: usize,
    pub h: f64,
    /// `l_N / N`.
    pub lower_certified: Summary,
    /// `lambda_min` of the empirical mean.
    pub lower_true: Summary,
    /// `u_N / N`.
    pub upper_certified: Summary,
    pub upper_true: Summary,
    /// Replicas whose certified bound lies on the wrong side of the truth.
    pub lower_bound_violations: usize,
    pub upper_bound_violations: usize,
    /// Replicas with a step whose potential rose within the numerical slack.
    pub certificate_warnings: usize,
    /// `max(h^((p-1)/(2p-1)), h)`.
    pub lower_scaling: f64,
    /// `max(h^(eta/(2+2eta)), h)`.
    pub upper_scaling: f64,
}

fn one_replica(config: &ExperimentConfig, count: usize, grid: usize, replica: usize) -> Result<ReplicaPair> {
    let spec = &config.spec;
    let mut rng = config.cell_stream(grid, replica).generator();
    let samples: Vec<_> = (0..count).map(|_| ensembles::sample(spec, &mut rng)).collect();
    let params = config.chain.params(config.epsilon);
    let n = spec.dim();
    Ok(ReplicaPair {
        lower: run_chain_on(n, samples.iter().cloned(), Direction::Lower, &params)?,
        upper: run_chain_on(n, samples, Direction::Upper, &params)?,
    })
}

/// Certified versus true extreme eigenvalues of the empirical mean.
pub fn run_chain_experiment(config: &ExperimentConfig) -> Result<Vec<ChainRow>> {
    config.chain.params(config.epsilon).resolve()?;
    let grid = &config.n_grid;
    let n = config.spec.dim() as f64;
    let (p, eta) = (config.chain.scaling_p, config.chain.scaling_eta);
    let cells = map_cells(config, grid.len(), |i, r| one_replica(config, grid[i], i, r))?;
    Ok(grid
        .iter()
        .zip(cells)
        .map(|(&count, reps)| {
            let col = |f: &dyn Fn(&ReplicaPair) -> f64| Summary::of(&reps.iter().map(f).collect::<Vec<_>>());
            let h = n / count as f64;
            ChainRow {
                n_samples: count,
                h,
                lower_certified: col(&|r| r.lower.certified_bound),
                lower_true: col(&|r| r.lower.true_extreme),
                upper_certified: col(&|r| r.upper.certified_bound),
                upper_true: col(&|r| r.upper.true_extreme),
                lower_bound_violations: reps.iter().filter(|r| !r.lower.bound_holds()).count(),
                upper_bound_violations: reps.iter().filter(|r| !r.upper.bound_holds()).count(),
                certificate_warnings: reps
                    .iter()
                    .filter(|r| !(r.lower.all_certificates_ok && r.upper.all_certificates_ok))
                    .count(),
                lower_scaling: h.powf((p - 1.0) / (2.0 * p - 1.0)).max(h),
                upper_scaling: h.powf(eta / (2.0 + 2.0 * eta)).max(h),
            }
        })
        .collect())
}
