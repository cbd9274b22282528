//! Dense row-major matrices over a [`Scalar`] type.
//!
//! Everything in this crate is small (phase spaces of a few dozen states at
//! most), so a contiguous `Vec` with explicit loops beats any external
//! linear-algebra machinery and keeps every arithmetic operation visible,
//! which matters because the solvers care about *which* operations are
//! subtractions.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T = f64> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize, proto: &T) -> Self {
        Matrix { rows, cols, data: vec![proto.zero_like(); rows * cols] }
    }

    pub fn identity(n: usize, proto: &T) -> Self {
        let mut m = Self::zeros(n, n, proto);
        for i in 0..n {
            m[(i, i)] = proto.one_like();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
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

    /// A prototype element for minting constants at the right precision.
    pub fn proto(&self) -> &T {
        &self.data[0]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn entries(&self) -> impl Iterator<Item = &T> {
        self.data.iter()
    }

    pub fn map<U: Scalar>(&self, mut f: impl FnMut(&T) -> U) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| f(x)).collect() }
    }

    pub fn transpose(&self) -> Self {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)].add(&rhs[(i, j)]))
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)].sub(&rhs[(i, j)]))
    }

    pub fn scale(&self, s: &T) -> Self {
        Matrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)].mul(s))
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "inner dimensions must agree");
        let proto = self.proto();
        let mut out = Matrix::zeros(self.rows, rhs.cols, proto);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] = out[(i, j)].mul_add_acc(a, &rhs[(k, j)]);
                }
            }
        }
        out
    }

    /// `self * v` for a column vector.
    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = self.proto().zero_like();
                for j in 0..self.cols {
                    acc = acc.mul_add_acc(&self[(i, j)], &v[j]);
                }
                acc
            })
            .collect()
    }

    /// `v * self` for a row vector.
    pub fn vecmat(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.rows, v.len());
        (0..self.cols)
            .map(|j| {
                let mut acc = self.proto().zero_like();
                for i in 0..self.rows {
                    acc = acc.mul_add_acc(&v[i], &self[(i, j)]);
                }
                acc
            })
            .collect()
    }

    pub fn row_sums(&self) -> Vec<T> {
        (0..self.rows)
            .map(|i| {
                let mut acc = self.proto().zero_like();
                for j in 0..self.cols {
                    acc = acc.add(&self[(i, j)]);
                }
                acc
            })
            .collect()
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn set_column(&mut self, j: usize, col: &[T]) {
        assert_eq!(col.len(), self.rows);
        for i in 0..self.rows {
            self[(i, j)] = col[i].clone();
        }
    }

    /// Copy of the `rows x cols` block with top-left corner `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Matrix::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)].clone())
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Self) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(r0 + i, c0 + j)] = b[(i, j)].clone();
            }
        }
    }

    pub fn max_abs(&self) -> T {
        let mut best = self.proto().zero_like();
        for x in &self.data {
            let a = x.abs();
            if a > best {
                best = a;
            }
        }
        best
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn all_nonnegative(&self) -> bool {
        self.data.iter().all(|x| !x.is_negative())
    }

    pub fn to_f64(&self) -> Matrix<f64> {
        self.map(|x| x.to_f64())
    }

    pub fn from_f64_matrix(m: &Matrix<f64>, proto: &T) -> Self {
        m.map(|x| T::from_f64(*x, proto))
    }

    /// Frobenius norm, taken through `f64` at the end.
    pub fn frobenius(&self) -> f64 {
        let mut acc = self.proto().zero_like();
        for x in &self.data {
            acc = acc.mul_add_acc(x, x);
        }
        acc.to_f64().sqrt()
    }

    /// Max norm of `self - rhs` relative to the max norm of `rhs`.
    pub fn rel_max_diff(&self, rhs: &Self) -> f64 {
        let scale = rhs.max_abs().to_f64().max(f64::MIN_POSITIVE);
        self.sub(rhs).max_abs().to_f64() / scale
    }
}

impl Matrix<f64> {
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows[0].len();
        assert!(rows.iter().all(|row| row.len() == c));
        Matrix { rows: r, cols: c, data: rows.iter().flat_map(|row| row.iter().copied()).collect() }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorization with partial pivoting.
///
/// This is the "ordinary" dense factorization: it reads the full matrix,
/// including its diagonal, and its accuracy is the usual normwise kind. The
/// componentwise-accurate paths never call it; it backs the baseline solver
/// variant and the censoring reference computations.
#[derive(Debug, Clone)]
pub struct PlainLu<T = f64> {
    lu: Matrix<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> PlainLu<T> {
    pub fn factor(a: &Matrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::ShapeMismatch("LU needs a square matrix".into()));
        }
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = lu[(k, k)].abs();
            for i in k + 1..n {
                let cand = lu[(i, k)].abs();
                if cand > best {
                    best = cand;
                    p = i;
                }
            }
            if best.is_zero() {
                return Err(Error::Singular(format!("zero pivot column {}", k)));
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)].clone();
                    lu[(k, j)] = lu[(p, j)].clone();
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
            }
            let piv = lu[(k, k)].clone();
            for i in k + 1..n {
                let m = lu[(i, k)].div(&piv);
                lu[(i, k)] = m.clone();
                for j in k + 1..n {
                    lu[(i, j)] = lu[(i, j)].sub(&m.mul(&lu[(k, j)]));
                }
            }
        }
        Ok(PlainLu { lu, perm })
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        let n = self.lu.rows();
        if b.len() != n {
            return Err(Error::ShapeMismatch("RHS length".into()));
        }
        let mut y: Vec<T> = self.perm.iter().map(|&p| b[p].clone()).collect();
        for i in 1..n {
            for j in 0..i {
                y[i] = y[i].sub(&self.lu[(i, j)].mul(&y[j]));
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let t = self.lu[(i, j)].mul(&y[j]);
                y[i] = y[i].sub(&t);
            }
            y[i] = y[i].div(&self.lu[(i, i)]);
        }
        Ok(y)
    }

    pub fn solve_matrix(&self, b: &Matrix<T>) -> Result<Matrix<T>> {
        let mut out = Matrix::zeros(b.rows(), b.cols(), b.proto());
        for j in 0..b.cols() {
            let col = self.solve(&b.column(j))?;
            out.set_column(j, &col);
        }
        Ok(out)
    }

    pub fn inverse(&self) -> Result<Matrix<T>> {
        let n = self.lu.rows();
        self.solve_matrix(&Matrix::identity(n, self.lu.proto()))
    }
}
