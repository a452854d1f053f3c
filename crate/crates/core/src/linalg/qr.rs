use super::matrix::Matrix;

/// Thin QR of an `n x k` matrix (`k <= n`) by Householder reflections.
///
/// Returns the `n x k` orthonormal factor with columns flipped so that the
/// triangular factor has a nonnegative diagonal. Applied to an i.i.d.
/// Gaussian matrix this yields the first `k` columns of a Haar orthogonal
/// matrix.
pub fn householder_qr_frame(a: &Matrix) -> Matrix {
    let n = a.rows();
    let k = a.cols();
    assert!(k <= n, "thin QR needs k <= n");
    let mut work = a.clone();
    let mut reflectors: Vec<Option<Vec<f64>>> = Vec::with_capacity(k);
    let mut r_diag = vec![0.0; k];

    for j in 0..k {
        let norm: f64 = (j..n).map(|i| work.get(i, j).powi(2)).sum::<f64>().sqrt();
        if norm == 0.0 {
            reflectors.push(None);
            continue;
        }
        let x0 = work.get(j, j);
        let alpha = if x0 > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (j..n).map(|i| work.get(i, j)).collect();
        v[0] -= alpha;
        let vnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            r_diag[j] = x0;
            reflectors.push(None);
            continue;
        }
        for x in &mut v {
            *x /= vnorm;
        }
        for c in j..k {
            let dot: f64 = (j..n).map(|i| v[i - j] * work.get(i, c)).sum();
            for i in j..n {
                work.set(i, c, work.get(i, c) - 2.0 * v[i - j] * dot);
            }
        }
        r_diag[j] = work.get(j, j);
        reflectors.push(Some(v));
    }

    // Q e_c = H_0 H_1 ... H_{k-1} e_c
    let mut q = Matrix::zeros(n, k);
    for c in 0..k {
        let mut col = vec![0.0; n];
        col[c] = 1.0;
        for j in (0..k).rev() {
            if let Some(v) = &reflectors[j] {
                let dot: f64 = (j..n).map(|i| v[i - j] * col[i]).sum();
                for i in j..n {
                    col[i] -= 2.0 * v[i - j] * dot;
                }
            }
        }
        let sign = if r_diag[c] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            q.set(i, c, sign * col[i]);
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_is_orthonormal_and_reproduces_input() {
        let a = Matrix::from_rows(&[
            vec![2.0, -1.0],
            vec![1.0, 3.0],
            vec![-2.0, 0.5],
            vec![0.0, 1.0],
        ])
        .unwrap();
        let q = householder_qr_frame(&a);
        let gram = q.transpose().matmul(&q).unwrap();
        assert!(gram.max_abs_diff(&Matrix::identity(2)) < 1e-14);
        // R = Q^t A must be upper triangular with a nonnegative diagonal.
        let r = q.transpose().matmul(&a).unwrap();
        assert!(r.get(1, 0).abs() < 1e-14);
        assert!(r.get(0, 0) > 0.0 && r.get(1, 1) > 0.0);
        let back = q.matmul(&r).unwrap();
        assert!(back.max_abs_diff(&a) < 1e-13);
    }

    #[test]
    fn one_by_one_sign() {
        let q = householder_qr_frame(&Matrix::from_rows(&[vec![-3.0]]).unwrap());
        assert_eq!(q.get(0, 0), -1.0);
        let q = householder_qr_frame(&Matrix::from_rows(&[vec![0.25]]).unwrap());
        assert_eq!(q.get(0, 0), 1.0);
    }
}
