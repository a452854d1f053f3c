use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::svg::{line_chart, Axes, Series};
use super::{
    AubrunRow, ChainRow, CovarianceRow, ExperimentConfig, LogConcaveRow, Mode, SparsifyOutcome, TailCheckResults,
};
use crate::error::{Error, Result};
use crate::table::to_csv;

/// Largest accepted failure frequency of the norm event at `N*`.
pub const LOGCONCAVE_FAILURE_LEVEL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "results")]
#[allow(clippy::large_enum_variant)]
pub enum ModeResults {
    CovarianceError(Vec<CovarianceRow>),
    Chain(Vec<ChainRow>),
    LogConcave(Vec<LogConcaveRow>),
    Aubrun(Vec<AubrunRow>),
    TailCheck(TailCheckResults),
    Sparsify(SparsifyOutcome),
}

impl ModeResults {
    pub fn mode(&self) -> Mode {
        match self {
            ModeResults::CovarianceError(_) => Mode::CovarianceError,
            ModeResults::Chain(_) => Mode::Chain,
            ModeResults::LogConcave(_) => Mode::LogConcave,
            ModeResults::Aubrun(_) => Mode::Aubrun,
            ModeResults::TailCheck(_) => Mode::TailCheck,
            ModeResults::Sparsify(_) => Mode::Sparsify,
        }
    }
}

/// Configuration echo plus results. Timing is logged, never stored, so the
/// archive is a pure function of the configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub results: ModeResults,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OutputFormat {
    Json,
    Csv,
    Svg,
}

impl OutputFormat {
    pub const ALL: [OutputFormat; 3] = [OutputFormat::Json, OutputFormat::Csv, OutputFormat::Svg];

    pub fn extension(&self) -> &'static str {
        match self {
            OutputFormat::Json => "json",
            OutputFormat::Csv => "csv",
            OutputFormat::Svg => "svg",
        }
    }

    /// Parses a comma-separated list such as `json,csv`.
    pub fn parse_list(text: &str) -> Result<Vec<OutputFormat>> {
        let mut out = Vec::new();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let f = part.parse()?;
            if !out.contains(&f) {
                out.push(f);
            }
        }
        if out.is_empty() {
            return Err(Error::InvalidConfig("no output format given".into()));
        }
        Ok(out)
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            "svg" => Ok(OutputFormat::Svg),
            other => Err(Error::InvalidConfig(format!("unknown output format {other:?}"))),
        }
    }
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::json("experiment report", e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
    }

    /// Checked properties that failed; empty when everything held.
    pub fn assertion_failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        match &self.results {
            ModeResults::CovarianceError(rows) => {
                for r in rows {
                    if r.triangle_violations > 0 {
                        out.push(format!("N = {}: error > alpha + beta in {} replicas", r.n_samples, r.triangle_violations));
                    }
                    if r.alpha_violations > 0 {
                        out.push(format!(
                            "N = {}: alpha > lambda_max - lambda_min in {} replicas",
                            r.n_samples, r.alpha_violations
                        ));
                    }
                }
            }
            ModeResults::Chain(rows) => {
                for r in rows {
                    if r.lower_bound_violations + r.upper_bound_violations > 0 {
                        out.push(format!(
                            "N = {}: certified bound on the wrong side in {} lower and {} upper replicas",
                            r.n_samples, r.lower_bound_violations, r.upper_bound_violations
                        ));
                    }
                }
            }
            ModeResults::LogConcave(rows) => {
                for r in rows.iter().filter(|r| r.at_n_star) {
                    if r.norm_failure.estimate > LOGCONCAVE_FAILURE_LEVEL {
                        out.push(format!(
                            "N* = {}: norm failure frequency {} exceeds {LOGCONCAVE_FAILURE_LEVEL}",
                            r.n_samples, r.norm_failure.estimate
                        ));
                    }
                }
            }
            ModeResults::Aubrun(rows) => {
                for r in rows.iter().filter(|r| !r.within_3_sigma) {
                    out.push(format!(
                        "N = {}: hit-all frequency {} is outside 3 sigma of {}",
                        r.n_samples,
                        r.hit_all.estimate,
                        1.0 - r.exact_miss
                    ));
                }
            }
            ModeResults::TailCheck(t) => {
                if let Some(m) = t.moments.as_ref().filter(|m| !m.pass) {
                    out.push(format!(
                        "empirical moment {} exceeds c_p = {}",
                        m.max_empirical_moment, m.c_p
                    ));
                }
            }
            ModeResults::Sparsify(s) => {
                if !s.result.pass {
                    out.push(format!(
                        "sandwich failed: generalized eigenvalues in [{}, {}]",
                        s.result.sandwich_lo, s.result.sandwich_hi
                    ));
                }
                if !s.within_support_bound {
                    out.push(format!("support {} exceeds bound {}", s.result.support_size, s.support_bound));
                }
            }
        }
        out
    }

    /// Per-mode table; column sets are fixed and listed in the docs.
    pub fn to_csv(&self) -> String {
        match &self.results {
            ModeResults::CovarianceError(rows) => {
                let data: Vec<_> = rows
                    .iter()
                    .map(|r| {
                        (
                            r.n_samples,
                            r.h,
                            r.error.mean,
                            r.error.ci_half,
                            r.error.q05,
                            r.error.q50,
                            r.error.q95,
                            r.lambda_min.mean,
                            r.lambda_max.mean,
                            r.alpha.mean,
                            r.beta.mean,
                            r.beta_z.mean,
                            r.clt_bound,
                            r.triangle_violations,
                            r.alpha_violations,
                        )
                    })
                    .collect();
                to_csv(
                    &[
                        "N",
                        "h",
                        "error_mean",
                        "error_ci_half",
                        "error_q05",
                        "error_q50",
                        "error_q95",
                        "lambda_min_mean",
                        "lambda_max_mean",
                        "alpha_mean",
                        "beta_mean",
                        "beta_z_mean",
                        "clt_bound",
                        "triangle_violations",
                        "alpha_violations",
                    ],
                    &data,
                )
            }
            ModeResults::Chain(rows) => {
                let data: Vec<_> = rows
                    .iter()
                    .map(|r| {
                        (
                            r.n_samples,
                            r.h,
                            r.lower_certified.mean,
                            r.lower_certified.ci_half,
                            r.lower_true.mean,
                            r.lower_true.ci_half,
                            r.upper_certified.mean,
                            r.upper_certified.ci_half,
                            r.upper_true.mean,
                            r.upper_true.ci_half,
                            r.lower_bound_violations,
                            r.upper_bound_violations,
                            r.certificate_warnings,
                            r.lower_scaling,
                            r.upper_scaling,
                        )
                    })
                    .collect();
                to_csv(
                    &[
                        "N",
                        "h",
                        "lower_certified_mean",
                        "lower_certified_ci_half",
                        "lower_true_mean",
                        "lower_true_ci_half",
                        "upper_certified_mean",
                        "upper_certified_ci_half",
                        "upper_true_mean",
                        "upper_true_ci_half",
                        "lower_bound_violations",
                        "upper_bound_violations",
                        "certificate_warnings",
                        "lower_scaling",
                        "upper_scaling",
                    ],
                    &data,
                )
            }
            ModeResults::LogConcave(rows) => {
                let data: Vec<_> = rows
                    .iter()
                    .map(|r| {
                        (
                            r.n_samples,
                            r.h,
                            r.at_n_star,
                            r.upper_threshold,
                            r.lower_threshold,
                            r.upper_failure.estimate,
                            r.upper_failure.ci_half,
                            r.lower_failure.estimate,
                            r.lower_failure.ci_half,
                            r.norm_failure.estimate,
                            r.norm_failure.ci_half,
                            r.large_m_regime,
                        )
                    })
                    .collect();
                to_csv(
                    &[
                        "N",
                        "h",
                        "at_n_star",
                        "upper_threshold",
                        "lower_threshold",
                        "upper_failure",
                        "upper_failure_ci_half",
                        "lower_failure",
                        "lower_failure_ci_half",
                        "norm_failure",
                        "norm_failure_ci_half",
                        "large_m_regime",
                    ],
                    &data,
                )
            }
            ModeResults::Aubrun(rows) => {
                let data: Vec<_> = rows
                    .iter()
                    .map(|r| {
                        (
                            r.n,
                            r.n_samples,
                            r.error_at_least_one.estimate,
                            r.hit_all.estimate,
                            r.hit_all.ci_half,
                            r.exact_miss,
                            r.union_bound,
                            r.within_3_sigma,
                        )
                    })
                    .collect();
                to_csv(
                    &[
                        "n",
                        "N",
                        "error_ge_1",
                        "hit_all",
                        "hit_all_ci_half",
                        "exact_miss",
                        "union_bound",
                        "within_3_sigma",
                    ],
                    &data,
                )
            }
            ModeResults::TailCheck(t) => t.tail.to_csv(),
            ModeResults::Sparsify(s) => {
                let data: Vec<(usize, f64)> = s
                    .result
                    .weights
                    .iter()
                    .enumerate()
                    .filter(|(_, &w)| w > 0.0)
                    .map(|(i, &w)| (i, w))
                    .collect();
                to_csv(&["index", "weight"], &data)
            }
        }
    }

    pub fn to_svg(&self) -> String {
        let log_log = Axes { log_x: true, log_y: true };
        let log_x = Axes { log_x: true, log_y: false };
        match &self.results {
            ModeResults::CovarianceError(rows) => {
                let pts = |f: &dyn Fn(&CovarianceRow) -> f64| rows.iter().map(|r| (r.n_samples as f64, f(r))).collect();
                line_chart(
                    "Covariance error",
                    "N",
                    "mean error",
                    log_log,
                    &[
                        Series::new("||M - I||", pts(&|r| r.error.mean)),
                        Series::new("alpha", pts(&|r| r.alpha.mean)),
                        Series::new("beta", pts(&|r| r.beta.mean)),
                        Series::new("CLT bound", pts(&|r| r.clt_bound)),
                    ],
                )
            }
            ModeResults::Chain(rows) => {
                let pts = |f: &dyn Fn(&ChainRow) -> f64| rows.iter().map(|r| (r.n_samples as f64, f(r))).collect();
                line_chart(
                    "Certified and true extreme eigenvalues",
                    "N",
                    "eigenvalue of the mean",
                    log_x,
                    &[
                        Series::new("lower certified", pts(&|r| r.lower_certified.mean)),
                        Series::new("lambda_min", pts(&|r| r.lower_true.mean)),
                        Series::new("upper certified", pts(&|r| r.upper_certified.mean)),
                        Series::new("lambda_max", pts(&|r| r.upper_true.mean)),
                    ],
                )
            }
            ModeResults::LogConcave(rows) => {
                let pts = |f: &dyn Fn(&LogConcaveRow) -> f64| rows.iter().map(|r| (r.n_samples as f64, f(r))).collect();
                line_chart(
                    "Failure frequencies",
                    "N",
                    "frequency",
                    log_x,
                    &[
                        Series::new("upper", pts(&|r| r.upper_failure.estimate)),
                        Series::new("lower", pts(&|r| r.lower_failure.estimate)),
                        Series::new("norm", pts(&|r| r.norm_failure.estimate)),
                    ],
                )
            }
            ModeResults::Aubrun(rows) => {
                let pts = |f: &dyn Fn(&AubrunRow) -> f64| rows.iter().map(|r| (r.n_samples as f64, f(r))).collect();
                line_chart(
                    "Coordinate coverage",
                    "N",
                    "probability",
                    log_x,
                    &[
                        Series::new("P(error >= 1)", pts(&|r| r.error_at_least_one.estimate)),
                        Series::new("exact miss", pts(&|r| r.exact_miss)),
                        Series::new("union bound", pts(&|r| r.union_bound)),
                    ],
                )
            }
            ModeResults::TailCheck(t) => {
                let mut series = vec![Series::new(
                    "survival",
                    t.tail.t_grid.iter().copied().zip(t.tail.survival.iter().copied()).collect(),
                )];
                if let (Some(c), Some(eta)) = (t.tail.fitted_c, t.tail.fitted_eta) {
                    series.push(Series::new(
                        "fit c / t^(1+eta)",
                        t.tail.t_grid.iter().map(|&x| (x, c / x.powf(1.0 + eta))).collect(),
                    ));
                }
                line_chart("Projection tail", "t", "survival", log_log, &series)
            }
            ModeResults::Sparsify(s) => {
                let steps = &s.result.steps;
                line_chart(
                    "Sparsifier barriers",
                    "round",
                    "barrier",
                    Axes { log_x: false, log_y: false },
                    &[
                        Series::new("lower", steps.iter().map(|st| (st.round as f64, st.lower_barrier)).collect()),
                        Series::new("upper", steps.iter().map(|st| (st.round as f64, st.upper_barrier)).collect()),
                    ],
                )
            }
        }
    }
}

/// Writes `<stem>.<ext>` for each requested format into `dir`, creating the
/// directory if needed. Returns the written paths.
pub fn emit_report(report: &ExperimentReport, formats: &[OutputFormat], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let stem = report.results.mode().file_stem();
    let mut written = Vec::new();
    for format in formats {
        let path = dir.join(format!("{stem}.{}", format.extension()));
        let body = match format {
            OutputFormat::Json => report.to_json() + "\n",
            OutputFormat::Csv => report.to_csv(),
            OutputFormat::Svg => report.to_svg(),
        };
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        if let (OutputFormat::Json, ModeResults::Sparsify(s)) = (format, &report.results) {
            let path = dir.join("weights.json");
            let body = serde_json::to_string(&s.result.weights).expect("weights serialize") + "\n";
            std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::EnsembleSpec;
    use crate::experiments::run_experiment;

    #[test]
    fn format_list_parsing() {
        assert_eq!(
            OutputFormat::parse_list("json, CSV,json").unwrap(),
            vec![OutputFormat::Json, OutputFormat::Csv]
        );
        assert!(OutputFormat::parse_list("png").is_err());
        assert!(OutputFormat::parse_list("").is_err());
    }

    #[test]
    fn json_round_trip_is_identity() {
        let cfg = ExperimentConfig::new(Mode::CovarianceError, EnsembleSpec::RankOneGaussian { n: 3 }, vec![4, 9], 3, 0.5);
        let report = run_experiment(&cfg).unwrap();
        let back = ExperimentReport::from_json(&report.to_json()).unwrap();
        assert_eq!(back, report);
        assert!(report.assertion_failures().is_empty());
    }

    #[test]
    fn csv_columns_are_fixed() {
        let cfg = ExperimentConfig::new(Mode::Aubrun, EnsembleSpec::AubrunBasis { n: 4 }, vec![2, 20], 4, 0.5);
        let csv = run_experiment(&cfg).unwrap().to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "n,N,error_ge_1,hit_all,hit_all_ci_half,exact_miss,union_bound,within_3_sigma"
        );
        assert!(lines.all(|l| l.split(',').count() == 8));
    }
}
