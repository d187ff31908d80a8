//! Small dense square matrices. Everything in this crate is `L x L` with `L`
//! the number of reward coordinates, so a row-major `Vec<f64>` is plenty.

use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Matrix::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from rows.
    ///
    /// # Panics
    /// If the rows do not form a square matrix.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            assert_eq!(row.len(), n, "matrix rows must form a square");
            data.extend_from_slice(row);
        }
        Matrix { n, data }
    }

    /// Fills the upper triangle (including the diagonal) with `f(i, j)` and
    /// mirrors it, so the result is symmetric bit for bit.
    pub fn symmetric_from_fn<E>(
        n: usize,
        mut f: impl FnMut(usize, usize) -> Result<f64, E>,
    ) -> Result<Self, E> {
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j)?;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data
            .chunks(self.n.max(1))
            .map(<[f64]>::to_vec)
            .collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self[(i, j)].to_bits() == self[(j, i)].to_bits()))
    }

    /// `self * s + other`, elementwise.
    pub fn scale_add(&self, s: f64, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n);
        Matrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a * s + b)
                .collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Matrix {
        Matrix {
            n: self.n,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Lower-triangular Cholesky factor, or `None` when a pivot is not
    /// strictly positive (or not finite). Success is the definition of
    /// positive definiteness used throughout the crate.
    pub fn cholesky(&self) -> Option<Matrix> {
        let n = self.n;
        let mut l = Matrix::zeros(n);
        for j in 0..n {
            let mut d = self[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > 0.0 && d.is_finite()) {
                return None;
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in (j + 1)..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Some(l)
    }

    pub fn is_positive_definite(&self) -> bool {
        self.cholesky().is_some()
    }

    /// Positive semidefinite up to a relative tolerance: `self + eps*I` is
    /// positive definite with `eps = rel_tol * max(trace, tiny)`.
    pub fn is_positive_semidefinite(&self, rel_tol: f64) -> bool {
        let eps = rel_tol * self.trace().abs().max(f64::MIN_POSITIVE);
        let mut shifted = self.clone();
        for i in 0..self.n {
            shifted[(i, i)] += eps;
        }
        shifted.is_positive_definite()
    }

    /// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, sorted
    /// ascending. Only used for diagnostics and tests; `n` is tiny.
    pub fn symmetric_eigenvalues(&self) -> Vec<f64> {
        let n = self.n;
        let mut a = self.clone();
        for _sweep in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)] * a[(i, j)])
                .sum();
            if off
                <= 1e-30
                    * a.data
                        .iter()
                        .map(|x| x * x)
                        .sum::<f64>()
                        .max(f64::MIN_POSITIVE)
            {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
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
                }
            }
        }
        let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
        eig.sort_by(f64::total_cmp);
        eig
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_reconstructs() {
        let m = Matrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 3.0]]);
        let l = m.cholesky().unwrap();
        let back = l[(1, 0)] * l[(1, 0)] + l[(1, 1)] * l[(1, 1)];
        assert!((back - 3.0).abs() < 1e-15);
        assert_eq!(l[(0, 1)], 0.0);
    }

    #[test]
    fn indefinite_and_singular_fail() {
        assert!(!Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).is_positive_definite());
        assert!(!Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).is_positive_definite());
        assert!(
            Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).is_positive_semidefinite(1e-12)
        );
    }

    #[test]
    fn jacobi_eigenvalues() {
        let m = Matrix::from_rows(&[
            vec![2.0, -1.0, 0.0],
            vec![-1.0, 2.0, -1.0],
            vec![0.0, -1.0, 2.0],
        ]);
        let eig = m.symmetric_eigenvalues();
        let s = std::f64::consts::SQRT_2;
        for (got, want) in eig.iter().zip([2.0 - s, 2.0, 2.0 + s]) {
            assert!((got - want).abs() < 1e-12, "{eig:?}");
        }
    }
}
