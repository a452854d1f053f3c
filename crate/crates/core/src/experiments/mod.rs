//! Monte Carlo experiment harness.
//!
//! An [`ExperimentConfig`] fixes an ensemble, a grid of sample counts `N`, a
//! replica count and a master seed. Cell `(i, r)` (grid point `i`, replica
//! `r`) draws from stream `i * replicas + r`, so every statistic is a pure
//! function of the configuration. See `docs/config-schema.md` for the JSON
//! layout.

mod aubrun;
mod chain;
mod covariance;
mod logconcave;
mod report;
mod sparsify;
mod stats;
mod svg;
mod tailcheck;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use aubrun::{exact_hit_all_probability, exact_miss_probability, run_aubrun, union_miss_bound, AubrunRow};
pub use chain::{run_chain_experiment, ChainRow};
pub use covariance::{run_covariance, CovarianceReplica, CovarianceRow};
pub use logconcave::{large_m_regime, n_star, run_logconcave, LogConcaveRow};
pub use report::{emit_report, ExperimentReport, ModeResults, OutputFormat};
pub use sparsify::{run_sparsify, SparsifyOutcome};
pub use stats::{Proportion, Summary};
pub use tailcheck::{run_tailcheck, TailCheckResults};

use crate::barrier::{ChainParams, StrictConstants};
use crate::ensembles::EnsembleSpec;
use crate::error::{Error, Result};
use crate::regularity::TailMode;
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    CovarianceError,
    Chain,
    LogConcave,
    Aubrun,
    TailCheck,
    Sparsify,
}

impl Mode {
    /// Stem used for artifact file names.
    pub fn file_stem(&self) -> &'static str {
        match self {
            Mode::CovarianceError => "estimate",
            Mode::Chain => "chain",
            Mode::LogConcave => "logconcave",
            Mode::Aubrun => "aubrun",
            Mode::TailCheck => "tailcheck",
            Mode::Sparsify => "sparsify",
        }
    }

    fn uses_grid(&self) -> bool {
        matches!(
            self,
            Mode::CovarianceError | Mode::Chain | Mode::LogConcave | Mode::Aubrun
        )
    }
}

/// Chain knobs other than `epsilon`, which comes from the experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSettings {
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
    #[serde(default)]
    pub msr_c: Option<f64>,
    /// Moment order `p` in the lower scaling column `max(h^((p-1)/(2p-1)), h)`.
    #[serde(default = "default_scaling_p")]
    pub scaling_p: f64,
    /// Tail exponent `eta` in the upper scaling column `max(h^(eta/(2+2eta)), h)`.
    #[serde(default = "default_scaling_eta")]
    pub scaling_eta: f64,
}

fn default_scaling_p() -> f64 {
    2.0
}

fn default_scaling_eta() -> f64 {
    1.0
}

impl Default for ChainSettings {
    fn default() -> Self {
        ChainSettings {
            phi: None,
            psi: None,
            s: None,
            theta: None,
            strict: None,
            msr_c: None,
            scaling_p: default_scaling_p(),
            scaling_eta: default_scaling_eta(),
        }
    }
}

impl ChainSettings {
    pub fn params(&self, epsilon: f64) -> ChainParams {
        ChainParams {
            epsilon,
            phi: self.phi,
            psi: self.psi,
            s: self.s,
            theta: self.theta,
            strict: self.strict,
            msr_c: self.msr_c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SumSampler {
    /// Draw `sum_i A_i A_i^t` as one Wishart matrix (Gaussian entries only).
    Wishart,
    /// Draw and add the `N` samples one by one.
    Direct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogConcaveSettings {
    #[serde(default = "default_sampler")]
    pub sampler: SumSampler,
    /// Constant `C` in the large-`m` condition `m >= (C / eps^6) log(C n N)^2`.
    #[serde(default)]
    pub large_m_constant: Option<f64>,
}

fn default_sampler() -> SumSampler {
    SumSampler::Wishart
}

impl Default for LogConcaveSettings {
    fn default() -> Self {
        LogConcaveSettings {
            sampler: SumSampler::Wishart,
            large_m_constant: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProjectionKind {
    Haar,
    Canonical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentSettings {
    pub p: f64,
    pub c_p: f64,
    #[serde(default = "default_directions")]
    pub directions: usize,
    #[serde(default = "default_moment_trials")]
    pub trials: usize,
}

fn default_directions() -> usize {
    20
}

fn default_moment_trials() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThinShellSettings {
    pub rank: usize,
    pub t_grid: Vec<f64>,
    #[serde(default)]
    pub large_deviation_grid: Vec<f64>,
    #[serde(default)]
    pub small_ball_grid: Vec<f64>,
    #[serde(default = "one")]
    pub c1: f64,
    #[serde(default = "one")]
    pub c2: f64,
    pub trials: usize,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailSettings {
    #[serde(default = "default_tail_mode")]
    pub mode: TailMode,
    #[serde(default = "default_rank")]
    pub rank: usize,
    /// Explicit grid; when empty a geometric grid from `rank` to `t_max`
    /// with `points` entries is used.
    #[serde(default)]
    pub t_grid: Vec<f64>,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_tail_trials")]
    pub trials: usize,
    #[serde(default = "default_projection")]
    pub projection: ProjectionKind,
    #[serde(default)]
    pub moments: Option<MomentSettings>,
    #[serde(default)]
    pub thin_shell: Option<ThinShellSettings>,
}

fn default_tail_mode() -> TailMode {
    TailMode::OperatorNorm
}

fn default_rank() -> usize {
    1
}

fn default_t_max() -> f64 {
    30.0
}

fn default_points() -> usize {
    24
}

fn default_tail_trials() -> usize {
    100_000
}

fn default_projection() -> ProjectionKind {
    ProjectionKind::Haar
}

impl Default for TailSettings {
    fn default() -> Self {
        TailSettings {
            mode: default_tail_mode(),
            rank: default_rank(),
            t_grid: Vec::new(),
            t_max: default_t_max(),
            points: default_points(),
            trials: default_tail_trials(),
            projection: default_projection(),
            moments: None,
            thin_shell: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SparsifySettings {
    /// Directory of matrix archives, read in file-name order.
    #[serde(default)]
    pub input_dir: Option<PathBuf>,
    /// Without an input directory, this many samples of `spec` are used.
    #[serde(default)]
    pub count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional in files; the CLI subcommand fills it in.
    #[serde(default)]
    pub mode: Option<Mode>,
    pub spec: EnsembleSpec,
    #[serde(default, alias = "N_grid")]
    pub n_grid: Vec<usize>,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    pub epsilon: f64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub chain: ChainSettings,
    #[serde(default)]
    pub logconcave: LogConcaveSettings,
    #[serde(default)]
    pub tail: TailSettings,
    #[serde(default)]
    pub sparsify: SparsifySettings,
}

fn default_replicas() -> usize {
    50
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn new(mode: Mode, spec: EnsembleSpec, n_grid: Vec<usize>, replicas: usize, epsilon: f64) -> Self {
        ExperimentConfig {
            mode: Some(mode),
            spec,
            n_grid,
            replicas,
            epsilon,
            master_seed: 0,
            output_dir: default_output_dir(),
            chain: ChainSettings::default(),
            logconcave: LogConcaveSettings::default(),
            tail: TailSettings::default(),
            sparsify: SparsifySettings::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::json("experiment config", e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn mode(&self) -> Result<Mode> {
        self.mode
            .ok_or_else(|| Error::InvalidConfig("experiment mode is not set".into()))
    }

    pub fn validate(&self) -> Result<()> {
        let mode = self.mode()?;
        self.spec.validate()?;
        if self.replicas == 0 {
            return Err(Error::InvalidConfig("replicas must be at least 1".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        if mode.uses_grid() {
            if self.n_grid.is_empty() {
                return Err(Error::InvalidConfig("N grid is empty".into()));
            }
            if self.n_grid[0] == 0 || self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidConfig(
                    "N grid must be positive and strictly increasing".into(),
                ));
            }
        }
        Ok(())
    }

    /// Stream for replica `r` at grid point `i`.
    pub fn cell_stream(&self, grid_index: usize, replica: usize) -> RngStream {
        RngStream::new(self.master_seed, (grid_index * self.replicas + replica) as u64)
    }
}

/// Validates `config` and runs the experiment its mode selects.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let results = match config.mode()? {
        Mode::CovarianceError => ModeResults::CovarianceError(run_covariance(config)?),
        Mode::Chain => ModeResults::Chain(run_chain_experiment(config)?),
        Mode::LogConcave => ModeResults::LogConcave(run_logconcave(config)?),
        Mode::Aubrun => ModeResults::Aubrun(run_aubrun(config)?),
        Mode::TailCheck => ModeResults::TailCheck(run_tailcheck(config)?),
        Mode::Sparsify => ModeResults::Sparsify(run_sparsify(config)?),
    };
    Ok(ExperimentReport {
        config: config.clone(),
        results,
    })
}

/// Runs `f` over every `(grid index, replica)` cell in parallel and returns
/// results in cell order.
pub(crate) fn map_cells<T, F>(config: &ExperimentConfig, grid_len: usize, f: F) -> Result<Vec<Vec<T>>>
where
    T: Send,
    F: Fn(usize, usize) -> Result<T> + Sync,
{
    use rayon::prelude::*;
    let reps = config.replicas;
    let flat: Vec<T> = (0..grid_len * reps)
        .into_par_iter()
        .map(|cell| {
            let start = std::time::Instant::now();
            let out = f(cell / reps, cell % reps);
            log::debug!(
                "cell {} (grid {}, replica {}) took {:.3} s",
                cell,
                cell / reps,
                cell % reps,
                start.elapsed().as_secs_f64()
            );
            out
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(grid_len);
    let mut it = flat.into_iter();
    for _ in 0..grid_len {
        rows.push(it.by_ref().take(reps).collect());
    }
    Ok(rows)
}
