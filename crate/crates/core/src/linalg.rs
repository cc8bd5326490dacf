//! Dense complex matrices with the few factorization primitives the channel
//! model needs: Hermitian positive-definite Cholesky, log-determinant, and
//! diagonal-of-inverse extraction.
//!
//! Everything is stored dense and row-major. The structured matrices in this
//! crate are small enough (N up to a couple thousand) that dense code is the
//! trusted reference; no sparse machinery is used.

use crate::error::{Error, Result};
use num_complex::Complex64;
use rayon::prelude::*;

/// Minimum trailing-block size before the Cholesky column update and the
/// inverse-diagonal solves go parallel.
const PAR_THRESHOLD: usize = 128;

#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        CMat { rows, cols, data }
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
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn add_assign_at(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.cols + c] += v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn mul(&self, rhs: &CMat) -> CMat {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch in mul");
        let (m, k_dim, n) = (self.rows, self.cols, rhs.cols);
        let mut out = CMat::zeros(m, n);
        for i in 0..m {
            let out_row = &mut out.data[i * n..(i + 1) * n];
            for k in 0..k_dim {
                let a = self.data[i * k_dim + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let rhs_row = &rhs.data[k * n..(k + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |r, c| self.get(c, r).conj())
    }

    /// `A * A^H` (Hermitian).
    pub fn mul_adjoint(&self) -> CMat {
        let (m, n) = (self.rows, self.cols);
        let mut out = CMat::zeros(m, m);
        for i in 0..m {
            let row_i = &self.data[i * n..(i + 1) * n];
            for j in 0..=i {
                let row_j = &self.data[j * n..(j + 1) * n];
                let mut acc = Complex64::new(0.0, 0.0);
                for (&a, &b) in row_i.iter().zip(row_j) {
                    acc += a * b.conj();
                }
                out.data[i * m + j] = acc;
                out.data[j * m + i] = acc.conj();
            }
        }
        out
    }

    /// `A^H * A` (Hermitian).
    pub fn adjoint_mul(&self) -> CMat {
        let (m, n) = (self.rows, self.cols);
        let mut out = CMat::zeros(n, n);
        for k in 0..m {
            let row_k = &self.data[k * n..(k + 1) * n];
            for i in 0..n {
                let ci = row_k[i].conj();
                if ci.re == 0.0 && ci.im == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * n..(i + 1) * n];
                for j in i..n {
                    out_row[j] += ci * row_k[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                out.data[i * n + j] = out.data[j * n + i].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self.data[i * self.cols + i]).sum()
    }

    /// Squared Frobenius norm, which equals `trace(A A^H)`.
    pub fn frobenius_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn max_abs_diff(&self, other: &CMat) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for j in 0..=i {
                if (self.get(i, j) - self.get(j, i).conj()).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Cholesky factor L (lower triangular, real positive diagonal) of a
    /// Hermitian positive-definite matrix, reading only the lower triangle.
    pub fn cholesky_lower(&self) -> Result<CMat> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut l = self.clone();
        for j in 0..n {
            let row_j_head = &l.data[j * n..j * n + j];
            let s: f64 = row_j_head.iter().map(|z| z.norm_sqr()).sum();
            let d = l.data[j * n + j].re - s;
            if !d.is_finite() || d <= 0.0 {
                return Err(Error::NotPositiveDefinite { pivot: j });
            }
            let djj = d.sqrt();
            l.data[j * n + j] = Complex64::new(djj, 0.0);
            for v in &mut l.data[j * n + j + 1..(j + 1) * n] {
                *v = Complex64::new(0.0, 0.0);
            }
            let (head, tail) = l.data.split_at_mut((j + 1) * n);
            let row_j = &head[j * n..j * n + j];
            let update = |row_i: &mut [Complex64]| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (a, b) in row_i[..j].iter().zip(row_j) {
                    acc += a * b.conj();
                }
                row_i[j] = (row_i[j] - acc) / djj;
            };
            if n - j > PAR_THRESHOLD {
                tail.par_chunks_mut(n).for_each(update);
            } else {
                tail.chunks_mut(n).for_each(update);
            }
        }
        Ok(l)
    }

    /// `log2 det(A)` for Hermitian positive-definite `A`, computed as twice
    /// the log-sum of the Cholesky diagonal. The determinant itself is never
    /// formed.
    pub fn hpd_log2_det(&self) -> Result<f64> {
        let l = self.cholesky_lower()?;
        let n = self.rows;
        Ok(2.0 * (0..n).map(|i| l.data[i * n + i].re.log2()).sum::<f64>())
    }

    /// Diagonal of `A^{-1}` for Hermitian positive-definite `A`.
    ///
    /// With `A = L L^H`, the n-th diagonal entry of the inverse is the
    /// squared norm of the n-th column of `L^{-1}`, obtained by one forward
    /// substitution per column.
    pub fn hpd_inverse_diagonal(&self) -> Result<Vec<f64>> {
        let l = self.cholesky_lower()?;
        let n = self.rows;
        let solve_col = |start: usize| -> f64 {
            let mut y = vec![Complex64::new(0.0, 0.0); n - start];
            y[0] = Complex64::new(1.0 / l.data[start * n + start].re, 0.0);
            for i in start + 1..n {
                let row_i = &l.data[i * n..i * n + i + 1];
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, &yk) in y[..i - start].iter().enumerate() {
                    acc += row_i[start + k] * yk;
                }
                y[i - start] = -acc / row_i[i].re;
            }
            y.iter().map(|z| z.norm_sqr()).sum()
        };
        if n >= PAR_THRESHOLD {
            Ok((0..n).into_par_iter().map(solve_col).collect())
        } else {
            Ok((0..n).map(solve_col).collect())
        }
    }
}
