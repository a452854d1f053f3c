use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{map_cells, ExperimentConfig, Proportion};
use crate::ensembles::EnsembleSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AubrunRow {
    pub n: usize,
    pub n_samples: usize,
    /// `||M - I|| >= 1`.
    pub error_at_least_one: Proportion,
    /// Every coordinate drawn at least once.
    pub hit_all: Proportion,
    /// Exact probability that some coordinate is never drawn.
    pub exact_miss: f64,
    /// `min(1, n (1 - 1/n)^N)`.
    pub union_bound: f64,
    /// Empirical hit-all frequency within three binomial standard errors of
    /// `1 - exact_miss`.
    pub within_3_sigma: bool,
}

/// Number of maps `[N] -> [n]` that are onto, by inclusion-exclusion.
fn onto_count(n: usize, draws: usize) -> BigInt {
    let mut total = BigInt::zero();
    let mut binom = BigInt::one();
    for k in 0..=n {
        let term = &binom * BigInt::from(n - k).pow(draws as u32);
        if k % 2 == 0 {
            total += term;
        } else {
            total -= term;
        }
        binom = binom * BigInt::from(n - k) / BigInt::from(k + 1);
    }
    total
}

fn ratio_to_f64(num: BigInt, den: BigInt) -> f64 {
    BigRational::new(num, den).to_f64().unwrap_or(f64::NAN)
}

/// Probability that `N` uniform draws from `n` coordinates hit all of them.
pub fn exact_hit_all_probability(n: usize, draws: usize) -> f64 {
    if draws < n {
        return 0.0;
    }
    ratio_to_f64(onto_count(n, draws), BigInt::from(n).pow(draws as u32))
}

/// Probability that some coordinate is missed, computed from the exact
/// complement so that values near zero keep full relative precision.
pub fn exact_miss_probability(n: usize, draws: usize) -> f64 {
    if draws < n {
        return 1.0;
    }
    let all = BigInt::from(n).pow(draws as u32);
    let missed = &all - onto_count(n, draws);
    ratio_to_f64(missed, all)
}

pub fn union_miss_bound(n: usize, draws: usize) -> f64 {
    (n as f64 * (1.0 - 1.0 / n as f64).powf(draws as f64)).min(1.0)
}

/// `(error, hit_all)` for one replica. The mean of `N` draws of `n e_i e_i^t`
/// is `diag(n c_j / N)` with counts `c_j`, so only the indices are sampled.
fn one_replica(config: &ExperimentConfig, n: usize, draws: usize, grid: usize, replica: usize) -> (f64, bool) {
    let mut rng = config.cell_stream(grid, replica).generator();
    let mut counts = vec![0usize; n];
    for _ in 0..draws {
        counts[rng.random_range(0..n)] += 1;
    }
    let scale = n as f64 / draws as f64;
    let error = counts
        .iter()
        .map(|&c| (scale * c as f64 - 1.0).abs())
        .fold(0.0, f64::max);
    (error, counts.iter().all(|&c| c > 0))
}

/// Coupon-collector obstruction: how often the empirical mean is at
/// distance one or more from `I`, against the exact miss probability.
pub fn run_aubrun(config: &ExperimentConfig) -> Result<Vec<AubrunRow>> {
    let n = match config.spec {
        EnsembleSpec::AubrunBasis { n } => n,
        ref other => {
            return Err(Error::InvalidConfig(format!(
                "aubrun mode needs an AubrunBasis ensemble, got {}",
                other.kind_name()
            )))
        }
    };
    let grid = &config.n_grid;
    let cells = map_cells(config, grid.len(), |i, r| Ok(one_replica(config, n, grid[i], i, r)))?;
    Ok(grid
        .iter()
        .zip(cells)
        .map(|(&draws, reps)| {
            let hit_all = Proportion::count(reps.iter().map(|r| r.1));
            let exact_miss = exact_miss_probability(n, draws);
            let p = 1.0 - exact_miss;
            let sigma = (p * (1.0 - p) / hit_all.trials as f64).sqrt();
            AubrunRow {
                n,
                n_samples: draws,
                error_at_least_one: Proportion::count(reps.iter().map(|r| r.0 >= 1.0)),
                hit_all,
                exact_miss,
                union_bound: union_miss_bound(n, draws),
                within_3_sigma: (hit_all.estimate - p).abs() <= 3.0 * sigma,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::Mode;

    #[test]
    fn small_exact_values() {
        // 3 draws onto 3 coordinates: 3! / 3^3.
        assert!((exact_hit_all_probability(3, 3) - 6.0 / 27.0).abs() < 1e-15);
        assert!((exact_miss_probability(3, 4) - (1.0 - 36.0 / 81.0)).abs() < 1e-15);
        assert_eq!(exact_miss_probability(5, 4), 1.0);
    }

    #[test]
    fn factorial_ratio_at_n_equals_draws() {
        let p = exact_hit_all_probability(50, 50);
        let log_p: f64 = (1..=50).map(|k| (k as f64 / 50.0).ln()).sum();
        assert!((p.ln() - log_p).abs() < 1e-9);
        assert!(p < 1e-19);
    }

    #[test]
    fn too_few_draws_always_miss() {
        let cfg = ExperimentConfig::new(Mode::Aubrun, EnsembleSpec::AubrunBasis { n: 6 }, vec![3, 5], 20, 0.5);
        for row in run_aubrun(&cfg).unwrap() {
            assert_eq!(row.error_at_least_one.hits, 20);
            assert_eq!(row.hit_all.hits, 0);
            assert!(row.within_3_sigma);
        }
    }
}
