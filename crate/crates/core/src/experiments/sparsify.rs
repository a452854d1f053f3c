use serde::{Deserialize, Serialize};

use super::ExperimentConfig;
use crate::ensembles;
use crate::error::Result;
use crate::sparsifier::{load_archive_dir, sparsify, support_bound, SparsifyResult};

/// Sample count used when neither an input directory nor a count is given.
pub const DEFAULT_SPARSIFY_COUNT: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsifyOutcome {
    pub n: usize,
    pub input_count: usize,
    /// `ceil(support_factor * n / eps^2)`.
    pub support_bound: usize,
    pub within_support_bound: bool,
    pub result: SparsifyResult,
}

/// Sparsifies the matrices in `sparsify.input_dir`, or `sparsify.count`
/// draws of the ensemble from stream 0 when no directory is set.
pub fn run_sparsify(config: &ExperimentConfig) -> Result<SparsifyOutcome> {
    let list = match &config.sparsify.input_dir {
        Some(dir) => load_archive_dir(dir)?,
        None => {
            let count = config.sparsify.count.unwrap_or(DEFAULT_SPARSIFY_COUNT);
            let mut rng = config.cell_stream(0, 0).generator();
            (0..count).map(|_| ensembles::sample(&config.spec, &mut rng)).collect()
        }
    };
    let result = sparsify(&list, config.epsilon)?;
    let n = list.first().map_or(config.spec.dim(), |b| b.dim());
    let bound = support_bound(n, config.epsilon);
    Ok(SparsifyOutcome {
        n,
        input_count: list.len(),
        support_bound: bound,
        within_support_bound: result.support_size <= bound,
        result,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::EnsembleSpec;
    use crate::experiments::Mode;

    #[test]
    fn sampled_instance_passes() {
        let mut cfg = ExperimentConfig::new(
            Mode::Sparsify,
            EnsembleSpec::IsotropicGaussianMatrix { n: 3, m: 2 },
            vec![],
            1,
            0.5,
        );
        cfg.sparsify.count = Some(30);
        let out = run_sparsify(&cfg).unwrap();
        assert_eq!(out.input_count, 30);
        assert!(out.result.pass && out.within_support_bound);
    }
}
