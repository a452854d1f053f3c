//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

mod common;

use std::error::Error as StdError;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use common::*;
use matcov::barrier::{lower_conclusion_holds, lower_premise_margin, run_chain, ChainParams, Direction};
use matcov::ensembles::{sample_rank_one, ColumnDist, EnsembleSpec};
use matcov::experiments::{
    exact_hit_all_probability, exact_miss_probability, n_star, run_experiment, union_miss_bound, ExperimentConfig, Mode, ModeResults,
};
use matcov::linalg::{lower_potential, smw_update, sym_eigvals, upper_potential};
use matcov::regularity::{
    estimate_projection_tail, fit_power_tail, geometric_grid, thin_shell_stats, ProjectionChoice, TailMode,
    ThinShellParams,
};
use matcov::sparsifier::{sparsify, support_bound, verify_sandwich, SUPPORT_FACTOR};
use matcov::{Projection, RngStream, SymMatrix};
use nalgebra::DMatrix;
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

type Outcome = Result<(bool, String), Box<dyn StdError>>;
type Criterion = (&'static str, fn() -> Outcome);

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn smw_correctness() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1001);
    let n = 6;
    let mut worst = 0.0f64;
    for i in 0..100 {
        // E^{-1} for E = G G^t / n + I, update U C U^t with C positive definite.
        let e = random_psd(n, n, &mut r).shifted(1.0);
        let k = 1 + i % 4;
        let u = gaussian_matrix(n, k, &mut r);
        let c = random_psd(k, k + 1, &mut r).shifted(0.5);
        let e_inv_na = to_na(&e).try_inverse().ok_or("singular E")?;
        let e_inv = SymMatrix::from_rows(&(0..n).map(|i| (0..n).map(|j| e_inv_na[(i, j)]).collect()).collect::<Vec<_>>())?;
        let out = smw_update(&e_inv, &u, &c.to_matrix(), &u.transpose())?;
        let full = to_na(&e) + mat_to_na(&u) * to_na(&c) * mat_to_na(&u).transpose();
        let direct = full.try_inverse().ok_or("singular update")?;
        worst = worst.max(max_abs(&mat_to_na(&out), &direct));
    }
    let elapsed = start.elapsed();
    Ok((
        worst <= 1e-10 && elapsed < Duration::from_secs(1),
        format!("max entry error {worst:.2e} (limit 1e-10), {}", secs(elapsed)),
    ))
}

fn potential_identities() -> Outcome {
    let mut r = rng(1002);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = 2 + r.random_range(0..6);
        let a = random_psd(n, n + 1, &mut r);
        let vals = sym_eigvals(&a)?;
        let l = vals[0] - 0.05 - r.random::<f64>();
        let u = vals[n - 1] + 0.05 + r.random::<f64>();
        let id = DMatrix::<f64>::identity(n, n);
        let lower = (to_na(&a) - &id * l).try_inverse().ok_or("singular")?.trace();
        let upper = (&id * u - to_na(&a)).try_inverse().ok_or("singular")?.trace();
        worst = worst.max((lower_potential(&a, l)? - lower).abs());
        worst = worst.max((upper_potential(&a, u)? - upper).abs());
    }
    Ok((worst <= 1e-9, format!("max error {worst:.2e} (limit 1e-9)")))
}

fn lower_step_brute_force() -> Outcome {
    let mut r = rng(1003);
    let (mut held, mut violations, mut attempts) = (0, 0, 0usize);
    while held < 1000 {
        attempts += 1;
        if attempts > 1_000_000 {
            return Ok((false, format!("premise held only {held} times")));
        }
        let n = 2 + r.random_range(0..4);
        let a = random_psd(n, n + 2, &mut r);
        let gap0 = sym_eigvals(&a)?[0];
        let l = gap0 - 0.2 - r.random::<f64>();
        let gap = gap0 - l;
        let b = random_psd(n, 1 + r.random_range(0..n), &mut r).scaled(gap * r.random::<f64>());
        let delta = gap * r.random::<f64>() * 0.5;
        if delta <= 0.0 || lower_premise_margin(&a, l, &b, delta)? < 0.0 {
            continue;
        }
        held += 1;
        if !lower_conclusion_holds(&a, l, &b, delta, 1e-8)? {
            violations += 1;
        }
    }
    Ok((
        violations == 0,
        format!("{held} instances with the premise, {violations} violations ({attempts} drawn)"),
    ))
}

fn chain_certificates() -> Outcome {
    let start = Instant::now();
    let spec = EnsembleSpec::RankOneGaussian { n: 10 };
    let params = ChainParams::new(0.5);
    let (mut broken, mut steps) = (0usize, 0usize);
    for direction in [Direction::Lower, Direction::Upper] {
        for replica in 0..20 {
            let report = run_chain(&spec, 500, direction, &params, RngStream::new(1004, replica))?;
            for s in &report.steps {
                steps += 1;
                let strict = match direction {
                    Direction::Lower => s.true_extreme > s.barrier,
                    Direction::Upper => s.true_extreme < s.barrier,
                };
                let monotone = s.potential_after <= s.potential_before * (1.0 + 1e-8);
                if !(strict && monotone && s.certificate_ok) {
                    broken += 1;
                }
            }
            if !report.all_certificates_ok || !report.bound_holds() {
                broken += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    Ok((
        broken == 0 && elapsed < Duration::from_secs(60),
        format!("{steps} steps over 40 chains, {broken} broken, {}", secs(elapsed)),
    ))
}

fn covariance_trend() -> Outcome {
    let mut config = ExperimentConfig::new(
        Mode::CovarianceError,
        EnsembleSpec::RankOneGaussian { n: 20 },
        vec![250, 1000, 4000],
        50,
        0.5,
    );
    config.master_seed = 1005;
    let ModeResults::CovarianceError(rows) = run_experiment(&config)?.results else {
        return Err("unexpected result kind".into());
    };
    let separated = rows
        .windows(2)
        .all(|w| w[1].error.mean + w[1].error.ci_half < w[0].error.mean - w[0].error.ci_half);
    let split_ok = rows.iter().all(|r| r.triangle_violations == 0);
    let means: Vec<String> = rows
        .iter()
        .map(|r| format!("{:.3}+-{:.3}", r.error.mean, r.error.ci_half))
        .collect();
    Ok((
        separated && split_ok,
        format!("mean error {} ; split violations {}", means.join(" > "), rows.iter().map(|r| r.triangle_violations).sum::<usize>()),
    ))
}

fn aubrun_necessity() -> Outcome {
    let mut config = ExperimentConfig::new(Mode::Aubrun, EnsembleSpec::AubrunBasis { n: 50 }, vec![50, 587], 100, 0.5);
    config.master_seed = 1006;
    let ModeResults::Aubrun(rows) = run_experiment(&config)?.results else {
        return Err("unexpected result kind".into());
    };
    let (small, large) = (&rows[0], &rows[1]);
    let hit_50 = exact_hit_all_probability(50, 50);
    // At N = n every coordinate is hit only by a permutation: n!/n^n.
    let ratio: f64 = (1..=50).map(|k| (k as f64 / 50.0).ln()).sum::<f64>().exp();
    let oracle_ok = (hit_50 - ratio).abs() <= 1e-12 * ratio && hit_50 < 1e-19 && exact_miss_probability(50, 50) == 1.0;
    let union = union_miss_bound(50, 587);
    let pass = small.error_at_least_one.hits == 100
        && oracle_ok
        && large.hit_all.estimate >= 0.99
        && (union - 4e-4).abs() < 1e-4
        && large.exact_miss <= union;
    Ok((
        pass,
        format!(
            "N=50: error>=1 in {}/100, hit-all prob {:.2e}; N=587: hit-all {:.2}, exact miss {:.2e}, union bound {:.2e}",
            small.error_at_least_one.hits,
            hit_50,
            large.hit_all.estimate,
            large.exact_miss,
            union
        ),
    ))
}

fn msr_tail_sanity() -> Outcome {
    let mut grid = geometric_grid(1.0, 30.0, 23);
    grid.push(4.0);
    grid.sort_by(f64::total_cmp);
    let est = estimate_projection_tail(
        &EnsembleSpec::RankOneGaussian { n: 4 },
        TailMode::OperatorNorm,
        1,
        &grid,
        100_000,
        &ProjectionChoice::Haar,
        RngStream::new(1007, 0),
    )?;
    let at4 = est.survival_at(4.0).ok_or("t = 4 missing from grid")?;
    let oracle = 1.0 - ChiSquared::new(1.0)?.cdf(4.0);
    let (_, eta) = fit_power_tail(&est)?;
    Ok((
        (at4 - 0.0455).abs() <= 0.01 && (oracle - 0.0455).abs() < 1e-4 && eta >= 1.0,
        format!("survival at 4 = {at4:.4} (chi-square {oracle:.4}), fitted eta {eta:.2}"),
    ))
}

fn thin_shell() -> Outcome {
    let start = Instant::now();
    let (n, m, trials) = (16, 400, 10_000);
    let params = ThinShellParams {
        n,
        m,
        rank: n,
        t_grid: vec![0.2],
        large_deviation_grid: vec![],
        small_ball_grid: vec![],
        c1: 1.0,
        c2: 1.0,
        trials,
    };
    let fixed = ProjectionChoice::Fixed(Projection::canonical(n, n)?);
    let out = thin_shell_stats(&params, &fixed, RngStream::new(1008, 0))?;
    let p = out.deviation.survival[0];
    // Tr(B) m is chi-square with n m degrees of freedom.
    let dof = (n * m) as f64;
    let chi = ChiSquared::new(dof)?;
    let oracle = chi.cdf(0.8 * dof) + chi.sf(1.2 * dof);
    let elapsed = start.elapsed();
    Ok((
        p <= 1e-3 && oracle <= 1e-3 && elapsed < Duration::from_secs(60),
        format!("P(|Tr B - n| >= 0.2n) = {p:.1e} over {trials} trials (chi-square {oracle:.1e}), {}", secs(elapsed)),
    ))
}

fn sparsifier() -> Outcome {
    let (n, m, eps) = (8, 100, 0.5);
    let bound = support_bound(n, eps);
    let (mut failures, mut max_support) = (0, 0);
    for seed in 0..20 {
        let mut r = rng(1009 + seed);
        let list: Vec<SymMatrix> = (0..m).map(|_| sample_rank_one(n, ColumnDist::Gaussian, &mut r)).collect();
        let first = sparsify(&list, eps)?;
        let second = sparsify(&list, eps)?;
        let same = serde_json::to_string(&first)? == serde_json::to_string(&second)?;
        let check = verify_sandwich(&list, &first.weights, eps)?;
        max_support = max_support.max(first.support_size);
        if !(check.pass && first.pass && first.support_size <= bound && same) {
            failures += 1;
        }
    }
    Ok((
        failures == 0,
        format!("20 instances, {failures} failures, max support {max_support} <= {bound} (factor {SUPPORT_FACTOR})"),
    ))
}

fn logconcave_events() -> Outcome {
    let (n, eps) = (16, 0.5);
    let count = n_star(n, eps);
    let mut config =
        ExperimentConfig::new(Mode::LogConcave, EnsembleSpec::IsotropicGaussianMatrix { n, m: 400 }, vec![count], 200, eps);
    config.master_seed = 1010;
    let ModeResults::LogConcave(rows) = run_experiment(&config)?.results else {
        return Err("unexpected result kind".into());
    };
    let row = rows.iter().find(|r| r.at_n_star).ok_or("no row at N*")?;
    Ok((
        count == 6144 && row.norm_failure.estimate <= 0.05,
        format!(
            "N* = {count}: failure {} / {} (upper {}, lower {})",
            row.norm_failure.hits, row.norm_failure.trials, row.upper_failure.hits, row.lower_failure.hits
        ),
    ))
}

fn reproducibility() -> Outcome {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let tmp = tempfile::tempdir()?;
    let modes = [
        ("estimate", "estimate"),
        ("chain", "chain"),
        ("logconcave", "logconcave"),
        ("aubrun", "aubrun"),
        ("tailcheck", "tailcheck"),
        ("sparsify", "sparsify"),
    ];
    let mut mismatched = Vec::new();
    for (command, stem) in modes {
        let out = tmp.path().join(command);
        let mut runs = Vec::new();
        for _ in 0..2 {
            let status = Command::new(env!("CARGO_BIN_EXE_matcov"))
                .args([command, "--config"])
                .arg(configs.join(format!("{command}.json")))
                .arg("--out")
                .arg(&out)
                .args(["--format", "json,csv"])
                .output()?;
            if !status.status.success() {
                return Ok((false, format!("{command} exited with {}", status.status)));
            }
            runs.push((
                std::fs::read(out.join(format!("{stem}.json")))?,
                std::fs::read(out.join(format!("{stem}.csv")))?,
            ));
        }
        if runs[0] != runs[1] {
            mismatched.push(command);
        }
    }
    Ok((
        mismatched.is_empty(),
        format!("6 subcommands run twice, differing artifacts: {mismatched:?}"),
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("SMW correctness", smw_correctness),
        ("potential identities", potential_identities),
        ("lower step brute force", lower_step_brute_force),
        ("chain certificates", chain_certificates),
        ("covariance error trend", covariance_trend),
        ("coordinate coverage necessity", aubrun_necessity),
        ("projection tail sanity", msr_tail_sanity),
        ("thin shell", thin_shell),
        ("sparsifier", sparsifier),
        ("log-concave events", logconcave_events),
        ("reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (pass, detail) = match check() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!("{} {:>2} {name}: {detail}", if pass { "PASS" } else { "FAIL" }, i + 1);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
