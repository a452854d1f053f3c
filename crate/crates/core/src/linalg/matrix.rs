use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense real symmetric `n x n` matrix stored row-major.
///
/// Symmetry is exact: every constructor mirrors the upper triangle onto the
/// lower one, so `get(i, j) == get(j, i)` bit for bit. Entries are finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixArchive", into = "MatrixArchive")]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

/// Dense general matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// On-disk layout of a symmetric matrix: `{"dim": n, "entries": [...]}` with
/// `n * n` row-major values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixArchive {
    pub dim: usize,
    pub entries: Vec<f64>,
}

fn mirror_upper(n: usize, data: &mut [f64]) {
    for i in 0..n {
        for j in (i + 1)..n {
            data[j * n + i] = data[i * n + j];
        }
    }
}

impl SymMatrix {
    /// Builds a matrix from `n * n` row-major entries. The upper triangle is
    /// authoritative and is mirrored onto the lower triangle.
    pub fn new(n: usize, mut entries: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidMatrix("dimension must be positive".into()));
        }
        if entries.len() != n * n {
            return Err(Error::DimMismatch {
                expected: n * n,
                found: entries.len(),
            });
        }
        if let Some(pos) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix(format!(
                "non-finite entry at ({}, {})",
                pos / n,
                pos % n
            )));
        }
        mirror_upper(n, &mut entries);
        Ok(SymMatrix { n, data: entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        SymMatrix::new(n, data)
    }

    /// Internal constructor for data produced by trusted arithmetic.
    pub(crate) fn from_raw(n: usize, mut data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), n * n);
        mirror_upper(n, &mut data);
        SymMatrix { n, data }
    }

    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, value: f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = value;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    /// `w * x x^t`.
    pub fn outer(x: &[f64], w: f64) -> Self {
        let mut m = Self::zeros(x.len());
        m.add_outer(x, w);
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix {
            rows: self.n,
            cols: self.n,
            data: self.data.clone(),
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn check_dim(&self, other: usize) -> Result<()> {
        if self.n != other {
            return Err(Error::DimMismatch {
                expected: self.n,
                found: other,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &SymMatrix) -> Result<SymMatrix> {
        let mut out = self.clone();
        out.add_assign(other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &SymMatrix) -> Result<SymMatrix> {
        self.check_dim(other.n)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(SymMatrix { n: self.n, data })
    }

    pub fn add_assign(&mut self, other: &SymMatrix) -> Result<()> {
        self.check_dim(other.n)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> SymMatrix {
        SymMatrix {
            n: self.n,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    /// `M + shift * I`.
    pub fn shifted(&self, shift: f64) -> SymMatrix {
        let mut out = self.clone();
        for i in 0..self.n {
            out.data[i * self.n + i] += shift;
        }
        out
    }

    /// In-place `M += w x x^t`, keeping exact symmetry.
    pub fn add_outer(&mut self, x: &[f64], w: f64) {
        let n = self.n;
        assert_eq!(x.len(), n, "outer product dimension");
        for i in 0..n {
            let wi = w * x[i];
            for j in i..n {
                self.data[i * n + j] += wi * x[j];
            }
        }
        mirror_upper(n, &mut self.data);
    }

    /// `x^t M x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let n = self.n;
        let mut acc = 0.0;
        for i in 0..n {
            let row = self.row(i);
            let mut s = 0.0;
            for j in 0..n {
                s += row[j] * x[j];
            }
            acc += x[i] * s;
        }
        acc
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `V^t M V` for an `n x k` matrix `V`.
    pub fn congruence(&self, v: &Matrix) -> Result<SymMatrix> {
        self.check_dim(v.rows)?;
        let mv = self.to_matrix().matmul(v)?;
        let k = v.cols;
        let mut out = vec![0.0; k * k];
        for a in 0..k {
            for b in a..k {
                let mut s = 0.0;
                for i in 0..self.n {
                    s += v.get(i, a) * mv.get(i, b);
                }
                out[a * k + b] = s;
            }
        }
        Ok(SymMatrix::from_raw(k, out))
    }

    pub fn to_archive(&self) -> MatrixArchive {
        // The writer treats the lower triangle as authoritative.
        let n = self.n;
        let mut entries = self.data.clone();
        for i in 0..n {
            for j in (i + 1)..n {
                entries[i * n + j] = entries[j * n + i];
            }
        }
        MatrixArchive { dim: n, entries }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_archive()).expect("matrix archive serializes")
    }

    pub fn from_json(text: &str) -> Result<SymMatrix> {
        let archive: MatrixArchive =
            serde_json::from_str(text).map_err(|e| Error::json("matrix archive", e))?;
        SymMatrix::try_from(archive)
    }
}

impl TryFrom<MatrixArchive> for SymMatrix {
    type Error = Error;

    fn try_from(a: MatrixArchive) -> Result<Self> {
        SymMatrix::new(a.dim, a.entries)
    }
}

impl From<SymMatrix> for MatrixArchive {
    fn from(m: SymMatrix) -> Self {
        m.to_archive()
    }
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix("non-finite entry".into()));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::DimMismatch {
                    expected: c,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Matrix::new(r, c, data)
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Matrix { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols.max(1)).map(<[f64]>::to_vec).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.get(i, j);
            }
        }
        out
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let (n, m, p) = (self.rows, self.cols, other.cols);
        let mut out = vec![0.0; n * p];
        for i in 0..n {
            let orow = &mut out[i * p..(i + 1) * p];
            for k in 0..m {
                let a = self.data[i * m + k];
                if a == 0.0 {
                    continue;
                }
                let brow = &other.data[k * p..(k + 1) * p];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(Matrix::from_raw(n, p, out))
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimMismatch {
                expected: self.rows * self.cols,
                found: other.rows * other.cols,
            });
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Matrix::from_raw(self.rows, self.cols, data))
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `(A + A^t) / 2` as a symmetric matrix. Fails on non-square input.
    pub fn symmetrize(&self) -> Result<SymMatrix> {
        if self.rows != self.cols {
            return Err(Error::DimMismatch {
                expected: self.rows,
                found: self.cols,
            });
        }
        let n = self.rows;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                data[i * n + j] = 0.5 * (self.get(i, j) + self.get(j, i));
            }
        }
        Ok(SymMatrix::from_raw(n, data))
    }

    /// Inverse by LU with partial pivoting. `None` if a pivot vanishes.
    pub fn inverse(&self) -> Option<Matrix> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let mut lu = self.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[i * n + k].abs()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pmax == 0.0 || !pmax.is_finite() {
                return None;
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[k * n + k];
            for i in (k + 1)..n {
                let f = lu[i * n + k] / pivot;
                lu[i * n + k] = f;
                for j in (k + 1)..n {
                    lu[i * n + j] -= f * lu[k * n + j];
                }
            }
        }
        let mut inv = vec![0.0; n * n];
        let mut col = vec![0.0; n];
        for c in 0..n {
            for i in 0..n {
                col[i] = if perm[i] == c { 1.0 } else { 0.0 };
            }
            for i in 0..n {
                let mut s = col[i];
                for j in 0..i {
                    s -= lu[i * n + j] * col[j];
                }
                col[i] = s;
            }
            for i in (0..n).rev() {
                let mut s = col[i];
                for j in (i + 1)..n {
                    s -= lu[i * n + j] * col[j];
                }
                col[i] = s / lu[i * n + i];
            }
            for i in 0..n {
                inv[i * n + c] = col[i];
            }
        }
        if inv.iter().any(|v| !v.is_finite()) {
            return None;
        }
        Some(Matrix::from_raw(n, n, inv))
    }
}

impl From<&SymMatrix> for Matrix {
    fn from(m: &SymMatrix) -> Self {
        m.to_matrix()
    }
}
