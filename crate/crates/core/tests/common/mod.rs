#![allow(dead_code)]

use matcov::{Matrix, SymMatrix};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    Matrix::new(rows, cols, (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect()).unwrap()
}

pub fn random_symmetric(n: usize, rng: &mut impl Rng) -> SymMatrix {
    gaussian_matrix(n, n, rng).symmetrize().unwrap()
}

/// `G G^t / cols` for a Gaussian `n x cols` matrix `G`; rank `min(n, cols)`.
pub fn random_psd(n: usize, cols: usize, rng: &mut impl Rng) -> SymMatrix {
    let g = gaussian_matrix(n, cols, rng);
    g.matmul(&g.transpose()).unwrap().symmetrize().unwrap().scaled(1.0 / cols as f64)
}

pub fn to_na(m: &SymMatrix) -> DMatrix<f64> {
    let n = m.dim();
    DMatrix::from_fn(n, n, |i, j| m.get(i, j))
}

pub fn mat_to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m.get(i, j))
}

pub fn max_abs(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}

pub fn na_eigvals(m: &SymMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = to_na(m).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}
