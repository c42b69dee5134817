//! Dense matrices, Cholesky factors and Gaussian sampling.
//!
//! `Matrix` is a plain row-major buffer. Factorization, triangular
//! inversion and the `LᵀL` product are recursive blocked algorithms in
//! [`blocked`]; everything else is straightforward loops.

mod blocked;

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

pub(crate) use blocked::dot;

/// Row-major dense matrix of `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Wraps a row-major buffer.
    ///
    /// # Panics
    /// If `data.len() != rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(
            data.len(),
            rows * cols,
            "buffer length does not match shape"
        );
        Matrix { rows, cols, data }
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Single-column matrix.
    pub fn column(values: Vec<f64>) -> Self {
        let n = values.len();
        Matrix::from_vec(n, 1, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column_vec(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)])
            .collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scaled(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add_diagonal(&mut self, v: f64) {
        for i in 0..self.rows.min(self.cols) {
            self[(i, i)] += v;
        }
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        if self.rows == 0 || other.cols == 0 || self.cols == 0 {
            return Ok(out);
        }
        // SAFETY: all three buffers are distinct allocations of the stated shapes.
        unsafe {
            matrixmultiply::dgemm(
                self.rows,
                self.cols,
                other.cols,
                1.0,
                self.data.as_ptr(),
                self.cols as isize,
                1,
                other.data.as_ptr(),
                other.cols as isize,
                1,
                0.0,
                out.data.as_mut_ptr(),
                other.cols as isize,
                1,
            );
        }
        Ok(out)
    }

    /// Matrix–vector product.
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if self.cols != v.len() {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest absolute entrywise difference; infinite on shape mismatch.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        if self.shape() != other.shape() {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Lower Cholesky factor `L` with `L·Lᵀ = M`.
#[derive(Clone, Debug)]
pub struct SpdFactor {
    l: Matrix,
}

impl SpdFactor {
    pub fn dim(&self) -> usize {
        self.l.rows
    }

    /// The lower-triangular factor (upper triangle is zero).
    pub fn lower(&self) -> &Matrix {
        &self.l
    }

    /// Solves `(L·Lᵀ)·X = B`.
    pub fn solve(&self, b: &Matrix) -> Result<Matrix> {
        factor_solve(self, b)
    }

    /// Solves for a single right-hand side.
    pub fn solve_vec(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side has length {}, factor has dimension {n}",
                b.len()
            )));
        }
        let mut x = b.to_vec();
        self.forward_in_place(&mut x);
        self.backward_in_place(&mut x);
        Ok(x)
    }

    /// `L⁻¹ b`, used for whitening.
    pub fn forward_solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side has length {}, factor has dimension {}",
                b.len(),
                self.dim()
            )));
        }
        let mut x = b.to_vec();
        self.forward_in_place(&mut x);
        Ok(x)
    }

    fn forward_in_place(&self, x: &mut [f64]) {
        for i in 0..x.len() {
            let li = self.l.row(i);
            let s = dot(&li[..i], &x[..i]);
            x[i] = (x[i] - s) / li[i];
        }
    }

    fn backward_in_place(&self, x: &mut [f64]) {
        let n = x.len();
        for i in (0..n).rev() {
            let xi = x[i] / self.l[(i, i)];
            x[i] = xi;
            let li = self.l.row(i);
            for k in 0..i {
                x[k] -= li[k] * xi;
            }
        }
    }

    /// `log det(L·Lᵀ) = 2 Σ log L_ii`.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim()).map(|i| self.l[(i, i)].ln()).sum::<f64>()
    }

    /// Full symmetric inverse `(L·Lᵀ)⁻¹`.
    pub fn inverse(&self) -> Matrix {
        let n = self.dim();
        let mut a = self.l.clone();
        if n > 0 {
            // SAFETY: `a` is an n×n row-major buffer with leading dimension n.
            unsafe {
                blocked::trtri(a.data.as_mut_ptr(), n, n);
                blocked::lauum(a.data.as_mut_ptr(), n, n);
            }
        }
        a
    }

    /// Reconstructs `L·Lᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let lt = self.l.transpose();
        self.l.matmul(&lt).expect("square factor")
    }
}

/// Cholesky factorization of a symmetric matrix. Only the lower triangle is read.
pub fn spd_factor(m: &Matrix) -> Result<SpdFactor> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.rows, m.cols
        )));
    }
    let n = m.rows;
    let mut l = m.clone();
    if n > 0 {
        // SAFETY: `l` is an n×n row-major buffer with leading dimension n.
        unsafe { blocked::potrf(l.data.as_mut_ptr(), n, n, 0) }
            .map_err(|pivot| Error::NotPositiveDefinite { pivot })?;
    }
    for i in 0..n {
        for j in i + 1..n {
            l[(i, j)] = 0.0;
        }
    }
    Ok(SpdFactor { l })
}

/// Solves `(L·Lᵀ)·X = B` column by column.
pub fn factor_solve(f: &SpdFactor, b: &Matrix) -> Result<Matrix> {
    let n = f.dim();
    if b.rows != n {
        return Err(Error::DimensionMismatch(format!(
            "right-hand side has {} rows, factor has dimension {n}",
            b.rows
        )));
    }
    let mut out = Matrix::zeros(n, b.cols);
    let mut col = vec![0.0; n];
    for j in 0..b.cols {
        for i in 0..n {
            col[i] = b[(i, j)];
        }
        f.forward_in_place(&mut col);
        f.backward_in_place(&mut col);
        for i in 0..n {
            out[(i, j)] = col[i];
        }
    }
    Ok(out)
}

pub fn log_det(f: &SpdFactor) -> f64 {
    f.log_det()
}

/// Maps unit normals `z` to a draw from `N(0, L·Lᵀ)`.
pub fn sample_mvn(f: &SpdFactor, z: &[f64]) -> Result<Vec<f64>> {
    let n = f.dim();
    if z.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "normal vector has length {}, factor has dimension {n}",
            z.len()
        )));
    }
    Ok((0..n).map(|i| dot(&f.l.row(i)[..=i], &z[..=i])).collect())
}

/// Eigen-decomposition of a small symmetric matrix by cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvectors stored as columns.
pub fn symmetric_eigen(m: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.rows, m.cols
        )));
    }
    let n = m.rows;
    let mut a = m.clone();
    let mut v = Matrix::identity(n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off <= 1e-30 * a.frobenius_norm().powi(2).max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    Ok((a.diagonal(), v))
}
