use serde::{Deserialize, Serialize};

/// Normal quantile for two-sided 95% intervals.
pub const Z95: f64 = 1.96;

/// Replica summary of one scalar statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation (zero for a single replica).
    pub std: f64,
    /// Half-width of the 95% CLT interval for the mean.
    pub ci_half: f64,
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        assert!(!values.is_empty(), "summary of an empty sample");
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Summary {
            mean,
            std,
            ci_half: Z95 * std / n.sqrt(),
            q05: quantile(&sorted, 0.05),
            q50: quantile(&sorted, 0.5),
            q95: quantile(&sorted, 0.95),
        }
    }

    pub fn ci_low(&self) -> f64 {
        self.mean - self.ci_half
    }

    pub fn ci_high(&self) -> f64 {
        self.mean + self.ci_half
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Empirical frequency with its 95% normal-approximation half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub hits: usize,
    pub trials: usize,
    pub estimate: f64,
    pub ci_half: f64,
}

impl Proportion {
    pub fn new(hits: usize, trials: usize) -> Proportion {
        let p = hits as f64 / trials as f64;
        Proportion {
            hits,
            trials,
            estimate: p,
            ci_half: Z95 * (p * (1.0 - p) / trials as f64).sqrt(),
        }
    }

    pub fn count(flags: impl IntoIterator<Item = bool>) -> Proportion {
        let (mut hits, mut trials) = (0, 0);
        for f in flags {
            trials += 1;
            hits += f as usize;
        }
        Proportion::new(hits, trials)
    }
}
