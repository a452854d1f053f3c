mod common;

use common::*;
use matcov::ensembles::{sample_rank_one, ColumnDist};
use matcov::linalg::{sym_eig, sym_eigvals};
use matcov::sparsifier::{sparsify, support_bound, verify_sandwich, SUPPORT_FACTOR};
use matcov::{Error, SymMatrix};
use nalgebra::DMatrix;

fn instance(n: usize, m: usize, seed: u64) -> Vec<SymMatrix> {
    let mut r = rng(seed);
    (0..m).map(|_| sample_rank_one(n, ColumnDist::Gaussian, &mut r)).collect()
}

fn total(list: &[SymMatrix]) -> SymMatrix {
    let mut acc = SymMatrix::zeros(list[0].dim());
    for b in list {
        acc.add_assign(b).unwrap();
    }
    acc
}

/// Generalized eigenvalues of `(sum y_i B_i, B)` from nalgebra.
fn oracle_sandwich(list: &[SymMatrix], y: &[f64]) -> (f64, f64) {
    let b = to_na(&total(list));
    let n = b.nrows();
    let mut s = DMatrix::zeros(n, n);
    for (bi, &w) in list.iter().zip(y) {
        s += to_na(bi) * w;
    }
    let chol = b.cholesky().unwrap();
    let l_inv = chol.l().try_inverse().unwrap();
    let whitened = &l_inv * s * l_inv.transpose();
    let sym = (&whitened + whitened.transpose()) * 0.5;
    let vals = sym.symmetric_eigenvalues();
    (vals.min(), vals.max())
}

#[test]
fn random_instances_pass_with_bounded_support() {
    let (n, m, eps) = (8, 100, 0.5);
    for seed in 0..5 {
        let list = instance(n, m, 70 + seed);
        let out = sparsify(&list, eps).unwrap();
        assert!(out.pass);
        assert!(out.support_size <= support_bound(n, eps));
        assert!(out.weights.iter().all(|&w| w >= 0.0));
        let check = verify_sandwich(&list, &out.weights, eps).unwrap();
        assert!(check.pass);
        let (lo, hi) = oracle_sandwich(&list, &out.weights);
        assert!((lo - check.lo).abs() < 1e-9 && (hi - check.hi).abs() < 1e-9);
        assert!(lo >= 1.0 - 1e-8 && hi <= 1.0 + eps + 1e-8);
    }
    assert_eq!(support_bound(8, 0.5), (SUPPORT_FACTOR * 32.0) as usize);
}

#[test]
fn sparsify_is_deterministic() {
    let list = instance(5, 60, 80);
    let a = sparsify(&list, 0.4).unwrap();
    let b = sparsify(&list, 0.4).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn whitened_input_gives_the_same_sandwich() {
    let list = instance(4, 40, 81);
    let w = sym_eig(&total(&list)).unwrap().map(|x| 1.0 / x.sqrt());
    let wm = w.to_matrix();
    let whitened: Vec<SymMatrix> = list.iter().map(|b| b.congruence(&wm).unwrap()).collect();
    assert!(total(&whitened).max_abs_diff(&SymMatrix::identity(4)) < 1e-10);
    let a = sparsify(&list, 0.5).unwrap();
    let b = sparsify(&whitened, 0.5).unwrap();
    assert!((a.sandwich_lo - b.sandwich_lo).abs() < 1e-8);
    assert!((a.sandwich_hi - b.sandwich_hi).abs() < 1e-8);
}

#[test]
fn every_step_keeps_barriers() {
    let list = instance(5, 50, 82);
    let out = sparsify(&list, 0.5).unwrap();
    let mut a = SymMatrix::zeros(5);
    let w = sym_eig(&total(&list)).unwrap().map(|x| 1.0 / x.sqrt()).to_matrix();
    for step in &out.steps {
        a.add_assign(&list[step.index].congruence(&w).unwrap().scaled(step.weight)).unwrap();
        let vals = sym_eigvals(&a).unwrap();
        assert!(vals[0] > step.lower_barrier);
        assert!(vals[4] < step.upper_barrier);
    }
}

#[test]
fn verifier_closed_forms() {
    let list = instance(3, 10, 83);
    let ones = verify_sandwich(&list, &[1.0; 10], 0.1).unwrap();
    assert!((ones.lo - 1.0).abs() < 1e-12 && (ones.hi - 1.0).abs() < 1e-12 && ones.pass);
    let twos = verify_sandwich(&list, &[2.0; 10], 0.9).unwrap();
    assert!((twos.lo - 2.0).abs() < 1e-12 && !twos.pass);
}

#[test]
fn isotropic_pieces_and_singular_totals() {
    let list = vec![SymMatrix::scaled_identity(2, 0.01); 100];
    let out = sparsify(&list, 0.5).unwrap();
    let sum: f64 = out.weights.iter().sum::<f64>() * 0.01;
    assert!(out.pass && (1.0 - 1e-8..=1.5 + 1e-8).contains(&sum));

    let singular = vec![SymMatrix::from_diag(&[1.0, 0.0]); 3];
    assert!(matches!(sparsify(&singular, 0.5), Err(Error::SingularTotal { .. })));
}
