mod common;

use common::*;
use matcov::barrier::{
    choose_lower_shift, choose_upper_shift, lower_conclusion_holds, lower_functionals, lower_premise_margin,
    lower_step, psd_sqrt, run_chain, smw_lower_potential, smw_upper_potential, upper_conclusion_holds,
    upper_functionals, upper_premise_margin, ChainParams, Direction, LowerBarrierState,
    UpperBarrierState,
};
use matcov::ensembles::EnsembleSpec;
use matcov::linalg::{lower_potential, sym_eigvals, trace_inner, upper_potential};
use matcov::{Error, RngStream, SymMatrix};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

fn inv(m: DMatrix<f64>) -> DMatrix<f64> {
    m.try_inverse().expect("invertible")
}

fn from_na(m: &DMatrix<f64>) -> SymMatrix {
    let n = m.nrows();
    SymMatrix::from_rows(&(0..n).map(|i| (0..n).map(|j| 0.5 * (m[(i, j)] + m[(j, i)])).collect()).collect::<Vec<_>>())
        .unwrap()
}

/// Random `(A, l)` with the lower barrier strictly below the spectrum.
fn lower_instance(n: usize, r: &mut impl Rng) -> (SymMatrix, f64) {
    let a = random_psd(n, n + 2, r);
    let lmin = sym_eigvals(&a).unwrap()[0];
    (a, lmin - 0.2 - r.random::<f64>())
}

#[test]
fn lower_functionals_match_dense_inverse() {
    let mut r = rng(61);
    for _ in 0..50 {
        let n = 5;
        let (a, l) = lower_instance(n, &mut r);
        let b = random_psd(n, 2, &mut r);
        let phi = lower_potential(&a, l).unwrap();
        let st = LowerBarrierState::new(a.clone(), l, phi).unwrap();
        let (q1, q2) = lower_functionals(&st, 0.0, &b).unwrap();
        let l0 = inv(to_na(&a) - DMatrix::identity(n, n) * l);
        let oracle_q1 = trace_inner(&from_na(&l0), &b).unwrap();
        let l0sq = &l0 * &l0;
        let oracle_q2 = trace_inner(&from_na(&l0sq), &b).unwrap() / l0sq.trace();
        assert!((q1 - oracle_q1).abs() <= 1e-9 * oracle_q1.max(1.0));
        assert!((q2 - oracle_q2).abs() <= 1e-9 * oracle_q2.max(1.0));

        let t = 0.5 / phi;
        let (q1, q2) = lower_functionals(&st, t, &SymMatrix::identity(n)).unwrap();
        assert!((q1 - lower_potential(&a, l + t).unwrap()).abs() < 1e-10 * q1);
        assert!((q2 - 1.0).abs() < 1e-12);
    }
    let st = LowerBarrierState::new(SymMatrix::zeros(3), -1.0, 3.0).unwrap();
    let b = SymMatrix::from_diag(&[0.5, 1.0, 2.5]);
    let (q1, q2) = lower_functionals(&st, 0.0, &b).unwrap();
    assert!((q1 - 4.0).abs() < 1e-14 && (q2 - 4.0 / 3.0).abs() < 1e-14);
    assert!(matches!(lower_functionals(&st, 0.5, &b), Err(Error::BarrierViolated(_))));
}

#[test]
fn lower_shift_closed_form_branches() {
    let n = 4;
    for (phi, expected) in [(0.4, 0.125), (0.6, 0.0)] {
        let st = LowerBarrierState::initial(n, phi).unwrap();
        let (q1, q2) = lower_functionals(&st, 0.0, &SymMatrix::identity(n)).unwrap();
        assert!((q1 - phi).abs() < 1e-14 && (q2 - 1.0).abs() < 1e-14);
        let delta = choose_lower_shift(&st, &SymMatrix::identity(n), 0.5).unwrap();
        assert!((delta - expected).abs() < 1e-14);
    }
    // q1 above s switches the shift off.
    let st = LowerBarrierState::initial(2, 0.5).unwrap();
    assert_eq!(choose_lower_shift(&st, &SymMatrix::identity(2).scaled(10.0), 0.5).unwrap(), 0.0);
    // s near zero drives the shift to zero.
    let d = choose_lower_shift(&st, &SymMatrix::identity(2).scaled(1e-6), 1e-9).unwrap();
    assert!(d < 1e-5);
}

#[test]
fn upper_functionals_match_dense_inverse() {
    let mut r = rng(62);
    for _ in 0..50 {
        let n = 5;
        let a = random_psd(n, n + 2, &mut r);
        let u = sym_eigvals(&a).unwrap()[n - 1] + 0.2 + r.random::<f64>();
        let b = random_psd(n, 2, &mut r);
        let t = 0.05 + r.random::<f64>();
        let st = UpperBarrierState::new(a.clone(), u, 1e6).unwrap();
        let (q1, q2, p2) = upper_functionals(&st, t, &b).unwrap();

        let ut = inv(DMatrix::identity(n, n) * (u + t) - to_na(&a));
        let half = to_na(&psd_sqrt(&b).unwrap());
        let sandwich = &half * &ut * &half;
        let oracle_q1 = na_eigvals(&from_na(&sandwich))[n - 1];
        assert!((q1 - oracle_q1).abs() <= 1e-9 * oracle_q1.max(1.0));

        let drop = upper_potential(&a, u).unwrap() - upper_potential(&a, u + t).unwrap();
        let oracle = trace_inner(&from_na(&(&ut * &ut)), &b).unwrap();
        assert!((q2 * drop - oracle).abs() <= 1e-9 * oracle.max(1.0));
        assert!(q2 <= p2 / t * (1.0 + 1e-12));
    }
    let st = UpperBarrierState::new(SymMatrix::from_diag(&[0.0, 1.5, 3.0]), 4.0, 10.0).unwrap();
    let (q1, _, p2) = upper_functionals(&st, 0.25, &SymMatrix::identity(3)).unwrap();
    assert!((q1 - 1.0 / 1.25).abs() < 1e-14 && (p2 - 1.0).abs() < 1e-14);
    assert!(matches!(
        upper_functionals(&st, 0.0, &SymMatrix::identity(3)),
        Err(Error::BarrierViolated(_))
    ));
}

#[test]
fn upper_shift_meets_premise_and_is_monotone() {
    let mut r = rng(63);
    for _ in 0..100 {
        let n = 4;
        let a = random_psd(n, 3, &mut r);
        let u = sym_eigvals(&a).unwrap()[n - 1] + 0.5 + r.random::<f64>();
        let st = UpperBarrierState::new(a.clone(), u, 1e6).unwrap();
        let b = random_psd(n, 1 + r.random_range(0..3), &mut r);
        let theta = 0.125;
        let sh = choose_upper_shift(&st, &b, theta).unwrap();
        let (q1, q2, _) = upper_functionals(&st, sh.delta, &b).unwrap();
        assert!(q1 + q2 <= 1.0 + 1e-10);
        assert!(upper_premise_margin(&a, u, &b, sh.delta).unwrap() >= -1e-9);
        assert!(upper_conclusion_holds(&a, u, &b, sh.delta, 1e-8).unwrap());
        let doubled = choose_upper_shift(&st, &b.scaled(2.0), theta).unwrap();
        assert!(doubled.delta >= sh.delta * (1.0 - 1e-9));
    }
    let st = UpperBarrierState::initial(3, 0.5).unwrap();
    let sh = choose_upper_shift(&st, &SymMatrix::zeros(3), 0.25).unwrap();
    assert_eq!((sh.delta1, sh.delta2), (0.0, 0.0));
}

/// Lower premise instances with the brute-force conclusion check.
#[test]
fn lower_premise_implies_conclusion() {
    let mut r = rng(64);
    let (mut held, mut attempts) = (0, 0);
    while held < 1000 {
        attempts += 1;
        assert!(attempts < 200_000, "premise rarely holds");
        let n = 2 + r.random_range(0..4);
        let (a, l) = lower_instance(n, &mut r);
        let gap = sym_eigvals(&a).unwrap()[0] - l;
        let b = random_psd(n, 1 + r.random_range(0..n), &mut r).scaled(gap * r.random::<f64>());
        let delta = gap * r.random::<f64>() * 0.5;
        if delta <= 0.0 {
            continue;
        }
        if lower_premise_margin(&a, l, &b, delta).unwrap() >= 0.0 {
            held += 1;
            assert!(lower_conclusion_holds(&a, l, &b, delta, 1e-8).unwrap());
        }
    }
}

#[test]
fn upper_premise_implies_conclusion() {
    let mut r = rng(65);
    let (mut held, mut attempts) = (0, 0);
    while held < 1000 {
        attempts += 1;
        assert!(attempts < 200_000, "premise rarely holds");
        let n = 2 + r.random_range(0..4);
        let a = random_psd(n, n + 1, &mut r);
        let u = sym_eigvals(&a).unwrap()[n - 1] + 0.2 + r.random::<f64>();
        let b = random_psd(n, 1 + r.random_range(0..n), &mut r).scaled(r.random::<f64>());
        let delta = 3.0 * r.random::<f64>() + 1e-3;
        if upper_premise_margin(&a, u, &b, delta).unwrap() >= 0.0 {
            held += 1;
            assert!(upper_conclusion_holds(&a, u, &b, delta, 1e-8).unwrap());
        }
    }
}

#[test]
fn resolvent_identity_and_smw_route() {
    let mut r = rng(66);
    for _ in 0..100 {
        let n = 4;
        let (a, l) = lower_instance(n, &mut r);
        let gap = sym_eigvals(&a).unwrap()[0] - l;
        let delta = 0.5 * gap * r.random::<f64>();
        let l0 = inv(to_na(&a) - DMatrix::identity(n, n) * l);
        let ld = inv(to_na(&a) - DMatrix::identity(n, n) * (l + delta));
        let lhs = lower_potential(&a, l + delta).unwrap() - lower_potential(&a, l).unwrap();
        let rhs = delta * (&ld * &l0).trace();
        assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0));

        let b = random_psd(n, 2, &mut r);
        let via_smw = smw_lower_potential(&a, l, &b, delta).unwrap();
        let via_eig = lower_potential(&a.add(&b).unwrap(), l + delta).unwrap();
        assert!((via_smw - via_eig).abs() <= 1e-8 * via_eig.max(1.0));

        let u = sym_eigvals(&a.add(&b).unwrap()).unwrap()[n - 1] + 0.3;
        let via_smw = smw_upper_potential(&a, u, &b, 0.2).unwrap();
        let via_eig = upper_potential(&a.add(&b).unwrap(), u + 0.2).unwrap();
        assert!((via_smw - via_eig).abs() <= 1e-8 * via_eig.max(1.0));
    }
}

#[test]
fn scalar_lower_step() {
    let st = LowerBarrierState::new(SymMatrix::zeros(1), -2.0, 0.5).unwrap();
    let b = SymMatrix::identity(1);
    let (q1, q2) = lower_functionals(&st, 0.0, &b).unwrap();
    assert_eq!((q1, q2), (0.5, 1.0));
    let out = lower_step(&st, &b, 0.5).unwrap();
    assert_eq!(out.delta, 0.125);
    assert!(1.0 > -2.0 + out.delta);
    assert!(out.certificate_ok);
}

#[test]
fn zero_update_keeps_lower_barrier() {
    let st = LowerBarrierState::initial(3, 0.25).unwrap();
    let out = lower_step(&st, &SymMatrix::zeros(3), 0.25).unwrap();
    assert_eq!(out.delta, 0.0);
    assert!(out.potential_after <= out.potential_before);
}

#[test]
fn long_chains_keep_every_certificate() {
    let spec = EnsembleSpec::RankOneGaussian { n: 10 };
    let mut params = ChainParams::new(0.5);
    params.theta = Some(0.125);
    for direction in [Direction::Lower, Direction::Upper] {
        let report = run_chain(&spec, 1000, direction, &params, RngStream::new(67, 0)).unwrap();
        assert!(report.all_certificates_ok);
        assert!(report.potentials_nonincreasing(1e-8));
        for step in &report.steps {
            match direction {
                Direction::Lower => assert!(step.true_extreme > step.barrier),
                Direction::Upper => assert!(step.true_extreme < step.barrier),
            }
        }
        assert!(report.bound_holds());
    }
    let upper = run_chain(
        &EnsembleSpec::RankOneGaussian { n: 20 },
        2000,
        Direction::Upper,
        &ChainParams::new(0.5),
        RngStream::new(68, 0),
    )
    .unwrap();
    assert!(upper.certified_bound >= upper.true_extreme);
}

#[test]
fn chain_json_and_csv() {
    let report = run_chain(
        &EnsembleSpec::RankOneGaussian { n: 3 },
        5,
        Direction::Lower,
        &ChainParams::new(0.5),
        RngStream::new(69, 0),
    )
    .unwrap();
    let csv = report.to_csv();
    assert!(csv.starts_with("step,shift,potential,barrier,true_extreme\n"));
    assert_eq!(csv.lines().count(), 6);
    let v: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(v["steps"].as_array().unwrap().len(), 5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lower_shift_respects_budget(seed in any::<u64>(), s in 0.01f64..0.99, phi in 0.05f64..2.0) {
        let mut r = rng(seed);
        let n = 3;
        let st = LowerBarrierState::initial(n, phi).unwrap();
        let b = random_psd(n, 1, &mut r);
        let delta = choose_lower_shift(&st, &b, s).unwrap();
        prop_assert!(delta >= 0.0 && delta <= 1.0 / phi);
        let out = lower_step(&st, &b, s).unwrap();
        prop_assert!(out.state.lambda_min() > out.state.l());
    }
}
