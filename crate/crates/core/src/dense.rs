//! Minimal dense linear algebra: a row-major matrix, symmetric positive
//! definite (Cholesky) factorization and triangular solves.
//!
//! Everything here is single-threaded and deterministic. The inner kernels
//! are written over contiguous row slices with several independent
//! accumulators so that the compiler can vectorize them.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Dot product of two equal-length slices.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len();
    let split = n - n % 8;
    let mut acc = [0.0f64; 8];
    for (ca, cb) in a[..split].chunks_exact(8).zip(b[..split].chunks_exact(8)) {
        for k in 0..8 {
            acc[k] += ca[k] * cb[k];
        }
    }
    let mut tail = 0.0;
    for i in split..n {
        tail += a[i] * b[i];
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

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

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
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

    /// `y = self * x`
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(y.len(), self.rows);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = dot(self.row(i), x);
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `y = self^T * x`
    pub fn tr_mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.rows);
        assert_eq!(y.len(), self.cols);
        y.fill(0.0);
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                axpy(xi, self.row(i), y);
            }
        }
    }

    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.cols];
        self.tr_mul_vec_into(x, &mut y);
        y
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for (k, &a) in self.row(i).iter().enumerate() {
                if a != 0.0 {
                    let src = other.row(k);
                    axpy(a, src, out.row_mut(i));
                }
            }
        }
        out
    }

    /// `self^T * self`, exploiting symmetry of the result.
    pub fn gram(&self) -> Matrix {
        let m = self.cols;
        let mut out = Matrix::zeros(m, m);
        for i in 0..self.rows {
            let r = self.row(i);
            for (p, &rp) in r.iter().enumerate() {
                if rp != 0.0 {
                    axpy(rp, &r[p..], &mut out.row_mut(p)[p..]);
                }
            }
        }
        for p in 0..m {
            for q in 0..p {
                out[(p, q)] = out[(q, p)];
            }
        }
        out
    }

    /// Principal submatrix on the given (row = column) index list.
    pub fn principal_submatrix(&self, idx: &[usize]) -> Matrix {
        Matrix::from_fn(idx.len(), idx.len(), |a, b| self[(idx[a], idx[b])])
    }

    /// Leading `k x k` block.
    pub fn leading_block(&self, k: usize) -> Matrix {
        Matrix::from_fn(k, k, |i, j| self[(i, j)])
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// Replaces the matrix by `(A + A^T) / 2`.
    pub fn symmetrize(&mut self) {
        assert!(self.is_square());
        for i in 0..self.rows {
            for j in 0..i {
                let v = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = v;
                self[(j, i)] = v;
            }
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Lower-triangular Cholesky factor `A = L L^T`, stored row-major in a
/// full `n x n` buffer (upper part zero).
#[derive(Clone, Debug)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    pub fn factor(a: &Matrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch {
                expected: a.rows(),
                actual: a.cols(),
            });
        }
        Self::factor_owned(a.clone())
    }

    /// Factors in place, consuming the matrix buffer. Only the lower
    /// triangle of the input is read.
    pub fn factor_owned(a: Matrix) -> Result<Self> {
        let n = a.rows;
        assert_eq!(n, a.cols);
        let mut l = a.data;
        for i in 0..n {
            let (done, rest) = l.split_at_mut(i * n);
            let row_i = &mut rest[..n];
            for j in 0..i {
                let row_j = &done[j * n..j * n + j + 1];
                let s = row_i[j] - dot(&row_i[..j], &row_j[..j]);
                row_i[j] = s / row_j[j];
            }
            let d = row_i[i] - dot(&row_i[..i], &row_i[..i]);
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::NotPositiveDefinite { pivot: i, value: d });
            }
            row_i[i] = d.sqrt();
            row_i[i + 1..].fill(0.0);
        }
        Ok(Cholesky { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        &self.l[i * self.n..i * self.n + i + 1]
    }

    /// Overwrites `b` with `L^{-1} b`.
    pub fn forward_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        for i in 0..self.n {
            let r = self.row(i);
            let s = b[i] - dot(&r[..i], &b[..i]);
            b[i] = s / r[i];
        }
    }

    /// Overwrites `b` with `L^{-T} b`.
    pub fn backward_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        for i in (0..self.n).rev() {
            let r = self.row(i);
            b[i] /= r[i];
            let bi = b[i];
            axpy(-bi, &r[..i], &mut b[..i]);
        }
    }

    /// Overwrites `b` with `A^{-1} b`.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        self.forward_in_place(b);
        self.backward_in_place(b);
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// `L^{-1} B` for a block of right-hand sides, computed row by row.
    pub fn forward_matrix(&self, b: &Matrix) -> Matrix {
        assert_eq!(b.rows(), self.n);
        let mut w = b.clone();
        let m = w.cols();
        for i in 0..self.n {
            let r = self.row(i);
            let (done, rest) = w.data.split_at_mut(i * m);
            let wi = &mut rest[..m];
            for (j, &lij) in r[..i].iter().enumerate() {
                if lij != 0.0 {
                    axpy(-lij, &done[j * m..(j + 1) * m], wi);
                }
            }
            let inv = 1.0 / r[i];
            for v in wi.iter_mut() {
                *v *= inv;
            }
        }
        w
    }

    /// `log det A`
    pub fn log_det(&self) -> f64 {
        (0..self.n).map(|i| 2.0 * self.l[i * self.n + i].ln()).sum()
    }

    pub fn lower(&self) -> Matrix {
        Matrix {
            rows: self.n,
            cols: self.n,
            data: self.l.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd(n: usize) -> Matrix {
        // Diagonally dominant symmetric test matrix.
        Matrix::from_fn(n, n, |i, j| {
            if i == j {
                n as f64 + 1.0
            } else {
                1.0 / (1.0 + (i as f64 - j as f64).abs())
            }
        })
    }

    #[test]
    fn dot_handles_tails() {
        for n in 0..20 {
            let a: Vec<f64> = (0..n).map(|i| i as f64).collect();
            let b: Vec<f64> = (0..n).map(|i| 2.0 - i as f64).collect();
            let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
            assert!((dot(&a, &b) - naive).abs() < 1e-12);
        }
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = spd(17);
        let ch = Cholesky::factor(&a).unwrap();
        let l = ch.lower();
        let llt = l.matmul(&l.transpose());
        for i in 0..17 {
            for j in 0..17 {
                assert!((llt[(i, j)] - a[(i, j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_solves() {
        let a = spd(23);
        let x: Vec<f64> = (0..23).map(|i| (i as f64).sin()).collect();
        let b = a.mul_vec(&x);
        let ch = Cholesky::factor(&a).unwrap();
        let got = ch.solve(&b);
        for (g, e) in got.iter().zip(&x) {
            assert!((g - e).abs() < 1e-12);
        }
    }

    #[test]
    fn forward_matrix_matches_columnwise() {
        let a = spd(9);
        let ch = Cholesky::factor(&a).unwrap();
        let b = Matrix::from_fn(9, 4, |i, j| (i * 4 + j) as f64 * 0.1 - 1.0);
        let w = ch.forward_matrix(&b);
        for j in 0..4 {
            let mut col = b.column(j);
            ch.forward_in_place(&mut col);
            for i in 0..9 {
                assert!((w[(i, j)] - col[i]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = Matrix::from_row_major(2, 2, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        match Cholesky::factor(&a) {
            Err(Error::NotPositiveDefinite { pivot, .. }) => assert_eq!(pivot, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn gram_matches_matmul() {
        let q = Matrix::from_fn(7, 3, |i, j| ((i + 2 * j) as f64).cos());
        let g = q.gram();
        let h = q.transpose().matmul(&q);
        for i in 0..3 {
            for j in 0..3 {
                assert!((g[(i, j)] - h[(i, j)]).abs() < 1e-13);
            }
        }
    }
}
