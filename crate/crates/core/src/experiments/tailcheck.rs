use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, ProjectionKind};
use crate::ensembles::EnsembleSpec;
use crate::error::{Error, Result};
use crate::regularity::{
    check_mwr, estimate_projection_tail, geometric_grid, thin_shell_stats, Directions, MomentCheck,
    ProjectionChoice, TailEstimate, ThinShellParams, ThinShellStats,
};
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCheckResults {
    pub tail: TailEstimate,
    pub moments: Option<MomentCheck>,
    pub thin_shell: Option<ThinShellStats>,
}

/// Survival curve of `||PBP||` or `Tr(PB)`, with the optional moment and
/// thin-shell checks. The three parts use streams 0, 1 and 2 of the seed.
pub fn run_tailcheck(config: &ExperimentConfig) -> Result<TailCheckResults> {
    let t = &config.tail;
    let grid = if t.t_grid.is_empty() {
        geometric_grid(t.rank as f64, t.t_max, t.points)
    } else {
        t.t_grid.clone()
    };
    let choice = match t.projection {
        ProjectionKind::Haar => ProjectionChoice::Haar,
        ProjectionKind::Canonical => ProjectionChoice::Canonical,
    };
    let seed = config.master_seed;
    let tail = estimate_projection_tail(
        &config.spec,
        t.mode,
        t.rank,
        &grid,
        t.trials,
        &choice,
        RngStream::new(seed, 0),
    )?;
    let moments = t
        .moments
        .as_ref()
        .map(|m| {
            check_mwr(
                &config.spec,
                m.p,
                &Directions::Haar(m.directions),
                m.trials,
                m.c_p,
                RngStream::new(seed, 1),
            )
        })
        .transpose()?;
    let thin_shell = match &t.thin_shell {
        None => None,
        Some(ts) => {
            let (n, m) = match config.spec {
                EnsembleSpec::IsotropicGaussianMatrix { n, m } => (n, m),
                ref other => {
                    return Err(Error::InvalidConfig(format!(
                        "thin-shell check needs an IsotropicGaussianMatrix ensemble, got {}",
                        other.kind_name()
                    )))
                }
            };
            let params = ThinShellParams {
                n,
                m,
                rank: ts.rank,
                t_grid: ts.t_grid.clone(),
                large_deviation_grid: ts.large_deviation_grid.clone(),
                small_ball_grid: ts.small_ball_grid.clone(),
                c1: ts.c1,
                c2: ts.c2,
                trials: ts.trials,
            };
            Some(thin_shell_stats(&params, &choice, RngStream::new(seed, 2))?)
        }
    };
    Ok(TailCheckResults {
        tail,
        moments,
        thin_shell,
    })
}
