//! Random positive semidefinite matrix ensembles normalized to `E B = I_n`.
//!
//! JSON form: `{"kind": "<Kind>", "params": {...}}`, for example
//! `{"kind": "SpectralDiag", "params": {"n": 8, "alpha": {"dist": "ShiftedExponential", "shift": 0.0}}}`.

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_ur, ln_gamma};

use crate::error::{Error, Result};
use crate::linalg::{householder_qr_frame, Matrix, Projection, SymMatrix};

/// Nonnegative scalar law with mean one, used for the spectrum of
/// [`EnsembleSpec::SpectralDiag`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist")]
pub enum AlphaDist {
    /// `shift + (1 - shift) * Exp(1)`, `shift` in `[0, 1)`.
    ShiftedExponential { shift: f64 },
    /// `chi^2_dof / dof`.
    ScaledChiSquare { dof: f64 },
    /// `high` with probability `p_high`, otherwise `low`.
    TwoPoint { low: f64, high: f64, p_high: f64 },
}

/// Isotropic column law in `R^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnDist {
    Gaussian,
    /// Uniform on the unit ball, scaled by `sqrt(n + 2)`.
    UniformBall,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params")]
pub enum EnsembleSpec {
    /// The constant matrix `I_n`.
    Identity { n: usize },
    /// `X X^t` with `X` standard Gaussian.
    RankOneGaussian { n: usize },
    /// `n e_i e_i^t` with `i` uniform.
    AubrunBasis { n: usize },
    /// `U diag(alpha) U^t`, `U` Haar, `alpha_i` i.i.d.
    SpectralDiag { n: usize, alpha: AlphaDist },
    /// `A A^t` with `A` an `n x m` matrix of i.i.d. `N(0, 1/m)` entries.
    IsotropicGaussianMatrix { n: usize, m: usize },
    /// `(1/m) sum_j X_j X_j^t` over `m` independent isotropic columns.
    ColumnAverage { n: usize, m: usize, column: ColumnDist },
}

impl AlphaDist {
    pub fn point_mass() -> Self {
        AlphaDist::TwoPoint {
            low: 1.0,
            high: 1.0,
            p_high: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            AlphaDist::ShiftedExponential { shift } => {
                if !(0.0..1.0).contains(&shift) {
                    return Err(Error::InvalidSpec(format!(
                        "exponential shift must lie in [0, 1), got {shift}"
                    )));
                }
            }
            AlphaDist::ScaledChiSquare { dof } => {
                if !(dof > 0.0 && dof.is_finite()) {
                    return Err(Error::InvalidSpec(format!("chi-square dof must be positive, got {dof}")));
                }
            }
            AlphaDist::TwoPoint { low, high, p_high } => {
                if !(low >= 0.0 && high >= 0.0 && low.is_finite() && high.is_finite()) {
                    return Err(Error::InvalidSpec("two-point support must be nonnegative".into()));
                }
                if !(0.0..=1.0).contains(&p_high) {
                    return Err(Error::InvalidSpec(format!("p_high must lie in [0, 1], got {p_high}")));
                }
            }
        }
        let mean = self.mean();
        if (mean - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidSpec(format!("alpha distribution has mean {mean}, expected 1")));
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        match *self {
            AlphaDist::ShiftedExponential { .. } | AlphaDist::ScaledChiSquare { .. } => 1.0,
            AlphaDist::TwoPoint { low, high, p_high } => (1.0 - p_high) * low + p_high * high,
        }
    }

    /// `E alpha^p` for `p > 0`, in closed form.
    pub fn moment(&self, p: f64) -> f64 {
        match *self {
            AlphaDist::ShiftedExponential { shift } => {
                if shift == 0.0 {
                    return ln_gamma(p + 1.0).exp();
                }
                // E (s + (1-s)X)^p = (1-s)^p e^c Gamma(p+1, c), c = s / (1-s)
                let c = shift / (1.0 - shift);
                let upper = gamma_ur(p + 1.0, c) * ln_gamma(p + 1.0).exp();
                (1.0 - shift).powf(p) * c.exp() * upper
            }
            AlphaDist::ScaledChiSquare { dof } => {
                let half = dof / 2.0;
                ((2.0 / dof).ln() * p + ln_gamma(half + p) - ln_gamma(half)).exp()
            }
            AlphaDist::TwoPoint { low, high, p_high } => {
                (1.0 - p_high) * low.powf(p) + p_high * high.powf(p)
            }
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            AlphaDist::ShiftedExponential { shift } => (1.0 - shift).powi(2),
            AlphaDist::ScaledChiSquare { dof } => 2.0 / dof,
            AlphaDist::TwoPoint { low, high, p_high } => {
                (1.0 - p_high) * low * low + p_high * high * high - self.mean().powi(2)
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            AlphaDist::ShiftedExponential { shift } => {
                let x: f64 = Exp1.sample(rng);
                shift + (1.0 - shift) * x
            }
            AlphaDist::ScaledChiSquare { dof } => {
                let chi = ChiSquared::new(dof).expect("validated dof");
                chi.sample(rng) / dof
            }
            AlphaDist::TwoPoint { low, high, p_high } => {
                if rng.random::<f64>() < p_high {
                    high
                } else {
                    low
                }
            }
        }
    }
}

impl ColumnDist {
    /// `E ||X||^4`.
    fn fourth_moment_of_norm(&self, n: usize) -> f64 {
        let n = n as f64;
        match self {
            ColumnDist::Gaussian => n * n + 2.0 * n,
            ColumnDist::UniformBall => (n + 2.0).powi(2) * n / (n + 4.0),
        }
    }
}

impl EnsembleSpec {
    pub fn dim(&self) -> usize {
        match *self {
            EnsembleSpec::Identity { n }
            | EnsembleSpec::RankOneGaussian { n }
            | EnsembleSpec::AubrunBasis { n }
            | EnsembleSpec::SpectralDiag { n, .. }
            | EnsembleSpec::IsotropicGaussianMatrix { n, .. }
            | EnsembleSpec::ColumnAverage { n, .. } => n,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            EnsembleSpec::Identity { .. } => "Identity",
            EnsembleSpec::RankOneGaussian { .. } => "RankOneGaussian",
            EnsembleSpec::AubrunBasis { .. } => "AubrunBasis",
            EnsembleSpec::SpectralDiag { .. } => "SpectralDiag",
            EnsembleSpec::IsotropicGaussianMatrix { .. } => "IsotropicGaussianMatrix",
            EnsembleSpec::ColumnAverage { .. } => "ColumnAverage",
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(Error::InvalidSpec("dimension n must be positive".into()));
        }
        match self {
            EnsembleSpec::SpectralDiag { alpha, .. } => alpha.validate(),
            EnsembleSpec::IsotropicGaussianMatrix { m, .. } | EnsembleSpec::ColumnAverage { m, .. } => {
                if *m == 0 {
                    Err(Error::InvalidSpec("column count m must be positive".into()))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: EnsembleSpec =
            serde_json::from_str(text).map_err(|e| Error::json("ensemble spec", e))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("ensemble spec serializes")
    }

    /// `sum_ij Var(B_ij) = E ||B||_F^2 - n`.
    pub fn entry_variance_sum(&self) -> f64 {
        match *self {
            EnsembleSpec::Identity { .. } => 0.0,
            EnsembleSpec::RankOneGaussian { n } => (n * n + n) as f64,
            EnsembleSpec::AubrunBasis { n } => (n * n - n) as f64,
            EnsembleSpec::SpectralDiag { n, alpha } => n as f64 * alpha.variance(),
            EnsembleSpec::IsotropicGaussianMatrix { n, m } => (n * (n + 1)) as f64 / m as f64,
            EnsembleSpec::ColumnAverage { n, m, column } => {
                (column.fourth_moment_of_norm(n) - n as f64) / m as f64
            }
        }
    }

    /// Root-mean-square Frobenius distance between the mean of `trials`
    /// samples and `I_n`; bounds the expected operator-norm distance.
    pub fn clt_bound(&self, trials: usize) -> f64 {
        (self.entry_variance_sum() / trials as f64).sqrt()
    }
}

fn gaussian_vec<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// One isotropic column.
pub fn sample_column<R: Rng + ?Sized>(n: usize, dist: ColumnDist, rng: &mut R) -> Vec<f64> {
    match dist {
        ColumnDist::Gaussian => gaussian_vec(n, rng),
        ColumnDist::UniformBall => {
            let dir = sample_unit_vector(n, rng);
            let radius = rng.random::<f64>().powf(1.0 / n as f64);
            let scale = radius * ((n + 2) as f64).sqrt();
            dir.into_iter().map(|x| x * scale).collect()
        }
    }
}

/// Uniform point on the unit sphere `S^{n-1}`.
pub fn sample_unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let g = gaussian_vec(n, rng);
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            return g.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// `X X^t` for one draw of the column law.
pub fn sample_rank_one<R: Rng + ?Sized>(n: usize, dist: ColumnDist, rng: &mut R) -> SymMatrix {
    SymMatrix::outer(&sample_column(n, dist, rng), 1.0)
}

/// First `k` columns of a Haar orthogonal matrix.
pub fn sample_haar_frame<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Matrix {
    let g = Matrix::from_raw(n, k, (0..n * k).map(|_| rng.sample(StandardNormal)).collect());
    householder_qr_frame(&g)
}

/// Haar orthogonal `n x n` matrix (QR of a Gaussian matrix with the signs of
/// the triangular diagonal absorbed).
pub fn sample_haar_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Matrix {
    sample_haar_frame(n, n, rng)
}

/// Projection onto the span of the first `k` columns of a Haar matrix.
pub fn sample_haar_projection<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Projection {
    Projection::from_orthonormal(sample_haar_frame(n, k, rng))
}

/// `U diag(alpha) U^t` with `U` Haar and `alpha_i` i.i.d. from `alpha`.
pub fn sample_spectral_diag<R: Rng + ?Sized>(n: usize, alpha: AlphaDist, rng: &mut R) -> SymMatrix {
    let u = sample_haar_orthogonal(n, rng);
    let diag: Vec<f64> = (0..n).map(|_| alpha.sample(rng)).collect();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            out[i * n + j] = (0..n).map(|k| u.get(i, k) * diag[k] * u.get(j, k)).sum();
        }
    }
    SymMatrix::from_raw(n, out)
}

/// `A` with i.i.d. `N(0, 1/m)` entries together with `B = A A^t`.
pub fn sample_isotropic_gaussian_matrix<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    rng: &mut R,
) -> (Matrix, SymMatrix) {
    let scale = 1.0 / (m as f64).sqrt();
    let a = Matrix::from_raw(
        n,
        m,
        (0..n * m)
            .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
            .collect(),
    );
    let b = gram_of_rows(&a);
    (a, b)
}

/// `A A^t`.
pub(crate) fn gram_of_rows(a: &Matrix) -> SymMatrix {
    let (n, m) = (a.rows(), a.cols());
    let data = a.as_slice();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        let ri = &data[i * m..(i + 1) * m];
        for j in i..n {
            let rj = &data[j * m..(j + 1) * m];
            out[i * n + j] = ri.iter().zip(rj).map(|(x, y)| x * y).sum();
        }
    }
    SymMatrix::from_raw(n, out)
}

/// `(1/m) sum_j X_j X_j^t`.
pub fn average_outer_products(columns: &[Vec<f64>]) -> Result<SymMatrix> {
    let first = columns
        .first()
        .ok_or_else(|| Error::InvalidSpec("need at least one column".into()))?;
    let n = first.len();
    let mut acc = SymMatrix::zeros(n);
    let w = 1.0 / columns.len() as f64;
    for c in columns {
        if c.len() != n {
            return Err(Error::DimMismatch {
                expected: n,
                found: c.len(),
            });
        }
        acc.add_outer(c, w);
    }
    Ok(acc)
}

pub fn sample_column_average<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    dist: ColumnDist,
    rng: &mut R,
) -> SymMatrix {
    let cols: Vec<Vec<f64>> = (0..m).map(|_| sample_column(n, dist, rng)).collect();
    average_outer_products(&cols).expect("m >= 1 columns of equal length")
}

/// One draw from `spec`.
pub fn sample<R: Rng + ?Sized>(spec: &EnsembleSpec, rng: &mut R) -> SymMatrix {
    match *spec {
        EnsembleSpec::Identity { n } => SymMatrix::identity(n),
        EnsembleSpec::RankOneGaussian { n } => sample_rank_one(n, ColumnDist::Gaussian, rng),
        EnsembleSpec::AubrunBasis { n } => {
            let i = rng.random_range(0..n);
            let mut b = SymMatrix::zeros(n);
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            b.add_outer(&e, n as f64);
            b
        }
        EnsembleSpec::SpectralDiag { n, alpha } => sample_spectral_diag(n, alpha, rng),
        EnsembleSpec::IsotropicGaussianMatrix { n, m } => sample_isotropic_gaussian_matrix(n, m, rng).1,
        EnsembleSpec::ColumnAverage { n, m, column } => sample_column_average(n, m, column, rng),
    }
}

/// `sum_{i <= count} B_i` for i.i.d. draws from `spec`.
///
/// For the Gaussian-entry ensemble the sum is `W / m` with `W` a Wishart
/// matrix on `count * m` degrees of freedom, drawn directly by the Bartlett
/// decomposition when `fast_gaussian` is set.
pub fn sample_sum<R: Rng + ?Sized>(
    spec: &EnsembleSpec,
    count: usize,
    fast_gaussian: bool,
    rng: &mut R,
) -> SymMatrix {
    if let (true, EnsembleSpec::IsotropicGaussianMatrix { n, m }) = (fast_gaussian, spec) {
        if count * m >= *n {
            return sample_wishart(*n, count * m, rng).scaled(1.0 / *m as f64);
        }
    }
    let n = spec.dim();
    let mut acc = SymMatrix::zeros(n);
    for _ in 0..count {
        acc.add_assign(&sample(spec, rng)).expect("same dimension");
    }
    acc
}

/// Wishart `W_n(I, dof)` by the Bartlett decomposition; needs `dof >= n`.
pub fn sample_wishart<R: Rng + ?Sized>(n: usize, dof: usize, rng: &mut R) -> SymMatrix {
    assert!(dof >= n, "Bartlett decomposition needs dof >= n");
    let mut t = vec![0.0; n * n];
    for i in 0..n {
        let chi = ChiSquared::new((dof - i) as f64).expect("positive dof");
        t[i * n + i] = chi.sample(rng).sqrt();
        for j in 0..i {
            t[i * n + j] = rng.sample(StandardNormal);
        }
    }
    gram_of_rows(&Matrix::from_raw(n, n, t))
}
