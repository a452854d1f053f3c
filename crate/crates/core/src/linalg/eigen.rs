//! Symmetric eigensolver: Householder reduction to tridiagonal form followed
//! by the implicit QL iteration with Wilkinson-style shifts.

use crate::error::{Error, Result};

use super::matrix::{Matrix, SymMatrix};
use super::EIG_TOL;

/// QL sweeps allowed per eigenvalue before giving up.
const MAX_SWEEPS_PER_EIGENVALUE: usize = 60;

/// Eigen-decomposition `M = V diag(lambda) V^t`.
#[derive(Debug, Clone)]
pub struct SpectralDecomp {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthogonal; column `i` pairs with `eigenvalues[i]`.
    pub eigenvectors: Matrix,
    /// Frobenius norm of `V diag(lambda) V^t - M`.
    pub recon_error: f64,
}

impl SpectralDecomp {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }

    /// `V diag(f(lambda)) V^t`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.dim();
        let fl: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let v = &self.eigenvectors;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += v.get(i, k) * fl[k] * v.get(j, k);
                }
                out[i * n + j] = s;
            }
        }
        SymMatrix::from_raw(n, out)
    }

    /// `<B v_i, v_i>` for every eigenvector `v_i`.
    pub fn diag_in_basis(&self, b: &SymMatrix) -> Result<Vec<f64>> {
        let n = self.dim();
        if b.dim() != n {
            return Err(Error::DimMismatch {
                expected: n,
                found: b.dim(),
            });
        }
        let bv = b.to_matrix().matmul(&self.eigenvectors)?;
        Ok((0..n)
            .map(|i| (0..n).map(|r| self.eigenvectors.get(r, i) * bv.get(r, i)).sum())
            .collect())
    }
}

/// Full eigen-decomposition with eigenvalues ascending.
pub fn sym_eig(m: &SymMatrix) -> Result<SpectralDecomp> {
    let n = m.dim();
    let mut v = m.as_slice().to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(n, &mut v, &mut d, &mut e, true);
    ql_implicit(n, &mut d, &mut e, Some(&mut v))?;
    let order = ascending_order(&d);
    let eigenvalues: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut vecs = vec![0.0; n * n];
    for (new_col, &old_col) in order.iter().enumerate() {
        for r in 0..n {
            vecs[r * n + new_col] = v[r * n + old_col];
        }
    }
    let eigenvectors = Matrix::from_raw(n, n, vecs);
    let mut decomp = SpectralDecomp {
        eigenvalues,
        eigenvectors,
        recon_error: 0.0,
    };
    let rebuilt = decomp.map(|l| l);
    decomp.recon_error = rebuilt.sub(m)?.frobenius_norm();
    let scale = decomp
        .eigenvalues
        .iter()
        .fold(1.0_f64, |acc, l| acc.max(l.abs()));
    if decomp.recon_error > EIG_TOL * scale {
        return Err(Error::NonConvergence {
            iterations: MAX_SWEEPS_PER_EIGENVALUE * n,
        });
    }
    Ok(decomp)
}

/// Eigenvalues only, ascending. Skips eigenvector accumulation.
pub fn sym_eigvals(m: &SymMatrix) -> Result<Vec<f64>> {
    let n = m.dim();
    let mut v = m.as_slice().to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(n, &mut v, &mut d, &mut e, false);
    ql_implicit(n, &mut d, &mut e, None)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

fn ascending_order(d: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    order
}

/// Householder tridiagonalization. On return `d` holds the diagonal, `e[1..]`
/// the subdiagonal, and (when `accumulate`) `v` the orthogonal transform.
fn tridiagonalize(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64], accumulate: bool) {
    let at = |i: usize, j: usize| i * n + j;
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = 0.0;
                v[at(j, i)] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for j in 0..i {
                e[j] = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[at(j, i)] = f;
                g = e[j] + v[at(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[at(k, j)] * d[k];
                    e[k] += v[at(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[at(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    if !accumulate {
        // The diagonal of the tridiagonal form sits on the diagonal of the
        // workspace; the accumulation pass below would only copy it out.
        for i in 0..n {
            d[i] = v[at(i, i)];
        }
        e[0] = 0.0;
        return;
    }

    for i in 0..n.saturating_sub(1) {
        v[at(n - 1, i)] = v[at(i, i)];
        v[at(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[at(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[at(k, i + 1)] * v[at(k, j)];
                }
                for k in 0..=i {
                    v[at(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[at(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
        v[at(n - 1, j)] = 0.0;
    }
    v[at(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

/// Implicit QL on the tridiagonal `(d, e)`; rotations are applied to `v`
/// when supplied.
fn ql_implicit(n: usize, d: &mut [f64], e: &mut [f64], mut v: Option<&mut [f64]>) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1 = 0.0_f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > MAX_SWEEPS_PER_EIGENVALUE {
                    return Err(Error::NonConvergence {
                        iterations: MAX_SWEEPS_PER_EIGENVALUE,
                    });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(v) = v.as_deref_mut() {
                        for k in 0..n {
                            let row = k * n;
                            let hk = v[row + i + 1];
                            v[row + i + 1] = s * v[row + i] + c * hk;
                            v[row + i] = c * v[row + i] - s * hk;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if !(e[l].abs() > eps * tst1) {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    if d.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonConvergence {
            iterations: MAX_SWEEPS_PER_EIGENVALUE,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg_matrix(n: usize, seed: u64) -> SymMatrix {
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let data: Vec<f64> = (0..n * n).map(|_| next()).collect();
        SymMatrix::new(n, data).unwrap()
    }

    #[test]
    fn identity_has_unit_spectrum() {
        let d = sym_eig(&SymMatrix::identity(3)).unwrap();
        assert_eq!(d.eigenvalues, vec![1.0, 1.0, 1.0]);
        let vtv = d.eigenvectors.transpose().matmul(&d.eigenvectors).unwrap();
        assert!(vtv.max_abs_diff(&Matrix::identity(3)) < 1e-15);
    }

    #[test]
    fn diagonal_is_sorted() {
        let d = sym_eig(&SymMatrix::from_diag(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(d.eigenvalues, vec![1.0, 2.0, 3.0]);
        assert_eq!(d.eigenvectors.get(1, 0).abs(), 1.0);
    }

    #[test]
    fn one_by_one() {
        let d = sym_eig(&SymMatrix::from_diag(&[-4.5])).unwrap();
        assert_eq!(d.eigenvalues, vec![-4.5]);
        assert_eq!(d.eigenvectors.get(0, 0), 1.0);
    }

    #[test]
    fn values_only_path_agrees_with_full_path() {
        for seed in 0..40 {
            let n = 1 + (seed as usize % 9);
            let m = lcg_matrix(n, seed);
            let full = sym_eig(&m).unwrap().eigenvalues;
            let vals = sym_eigvals(&m).unwrap();
            for (a, b) in full.iter().zip(&vals) {
                assert!((a - b).abs() < 1e-12, "n={n} seed={seed}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn zero_and_rank_one_inputs() {
        let z = sym_eig(&SymMatrix::zeros(4)).unwrap();
        assert!(z.eigenvalues.iter().all(|&l| l == 0.0));
        let x = [1.0, 2.0, -2.0];
        let r1 = sym_eig(&SymMatrix::outer(&x, 1.0)).unwrap();
        assert!((r1.max() - 9.0).abs() < 1e-13);
        assert!(r1.min().abs() < 1e-13);
    }
}
