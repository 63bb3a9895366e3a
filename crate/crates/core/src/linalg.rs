//! Small dense linear algebra: row-major matrices, LU with partial pivoting,
//! and power / inverse iteration for symmetric eigenvalue extremes.
//!
//! Matrices here are at most a few hundred rows.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, got: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| math::dot(self.row(i), x)).collect()
    }

    /// `xᵀ A`.
    pub fn vec_mul(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, xi) in x.iter().enumerate() {
            if *xi == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += xi * a;
            }
        }
        out
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        debug_assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    fn max_abs(&self) -> f64 {
        math::max_abs(&self.data)
    }
}

impl core::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Relative pivot threshold below which a matrix is declared singular.
const PIVOT_EPS: f64 = 1e-13;

/// LU factorization `PA = LU` with partial pivoting.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &Matrix) -> Result<Self> {
        if a.rows != a.cols {
            return Err(Error::DimensionMismatch { expected: a.rows, got: a.cols });
        }
        let n = a.rows;
        let scale = a.max_abs();
        if n == 0 || scale == 0.0 || !scale.is_finite() {
            return Err(Error::SingularSystem);
        }
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            // ties go to the lower row index
            let mut p = k;
            let mut best = math::abs(lu[k * n + k]);
            for i in k + 1..n {
                let v = math::abs(lu[i * n + k]);
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= PIVOT_EPS * scale {
                return Err(Error::SingularSystem);
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / pivot;
                lu[i * n + k] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        lu[i * n + j] -= f * lu[k * n + j];
                    }
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        debug_assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        x
    }
}

/// Solves `A x = b`.
pub fn solve(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.rows {
        return Err(Error::DimensionMismatch { expected: a.rows, got: b.len() });
    }
    Ok(Lu::factor(a)?.solve(b))
}

const EIGEN_TOL: f64 = 1e-10;
const EIGEN_MAX_ITERS: usize = 200_000;

fn start_vector(n: usize) -> Vec<f64> {
    // Uneven entries so the start is not orthogonal to a structured eigenvector.
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.37 * i as f64 + 0.011 * (i * i) as f64).collect();
    let nrm = math::norm(&x);
    x.iter_mut().for_each(|v| *v /= nrm);
    x
}

fn rayleigh_residual(a: &Matrix, x: &[f64]) -> (f64, f64) {
    let ax = a.mul_vec(x);
    let lambda = math::dot(x, &ax);
    let res = ax.iter().zip(x).map(|(p, q)| (p - lambda * q) * (p - lambda * q)).sum::<f64>();
    (lambda, math::sqrt(res))
}

/// Smallest eigenvalue of a symmetric positive semi-definite matrix, by
/// inverse iteration with shift 0. Fails with `SingularSystem` when the
/// matrix cannot be factored.
pub fn min_eigenvalue_sym(a: &Matrix) -> Result<f64> {
    let lu = Lu::factor(a)?;
    let mut x = start_vector(a.rows);
    let mut lambda = 0.0;
    for _ in 0..EIGEN_MAX_ITERS {
        let mut y = lu.solve(&x);
        let nrm = math::norm(&y);
        if !nrm.is_finite() || nrm == 0.0 {
            return Err(Error::SingularSystem);
        }
        y.iter_mut().for_each(|v| *v /= nrm);
        x = y;
        let (l, res) = rayleigh_residual(a, &x);
        lambda = l;
        if res <= EIGEN_TOL {
            break;
        }
    }
    Ok(lambda)
}

/// Largest eigenvalue of a symmetric positive semi-definite matrix, by power
/// iteration.
pub fn max_eigenvalue_sym(a: &Matrix) -> f64 {
    let mut x = start_vector(a.rows);
    let mut lambda = 0.0;
    for _ in 0..EIGEN_MAX_ITERS {
        let mut y = a.mul_vec(&x);
        let nrm = math::norm(&y);
        if nrm == 0.0 {
            return 0.0;
        }
        y.iter_mut().for_each(|v| *v /= nrm);
        x = y;
        let (l, res) = rayleigh_residual(a, &x);
        lambda = l;
        if res <= EIGEN_TOL {
            break;
        }
    }
    lambda
}
