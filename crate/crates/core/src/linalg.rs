//! Dense matrices over a [`Scalar`] field with row reduction.
//!
//! Exact fields pivot on the first nonzero entry; floating fields use partial
//! pivoting and treat entries below `tol` (relative to the largest entry of
//! the input) as zero.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, PartialEq)]
pub struct Mat<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> fmt::Debug for Mat<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.data.chunks(self.cols.max(1))).finish()
    }
}

impl<S: Scalar> Mat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Mat { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn column(v: Vec<S>) -> Self {
        Mat { rows: v.len(), cols: 1, data: v }
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

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<S> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn into_data(self) -> Vec<S> {
        self.data
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Mat<T> {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn transpose(&self) -> Self {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a.clone() + b).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a.clone() - b).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: &S) -> Self {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a.clone() * s).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if b.is_zero() {
                        continue;
                    }
                    let cur = std::mem::replace(&mut out[(i, j)], S::zero());
                    out[(i, j)] = cur + &(a.clone() * b);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(S::zero(), |acc, (a, b)| acc + &(a.clone() * b))
            })
            .collect()
    }

    pub fn trace(&self) -> S {
        (0..self.rows.min(self.cols)).fold(S::zero(), |acc, i| acc + &self[(i, i)])
    }

    /// Kronecker product, row index `i·p.rows + k`.
    pub fn kron(&self, other: &Self) -> Self {
        Mat::from_fn(self.rows * other.rows, self.cols * other.cols, |i, j| {
            self[(i / other.rows, j / other.cols)].clone() * &other[(i % other.rows, j % other.cols)]
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.magnitude()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|a| a.is_zero())
    }

    /// Reduced row echelon form in place; returns pivot columns.
    pub fn rref(&mut self, tol: f64) -> Vec<usize> {
        let thresh = if S::EXACT { 0.0 } else { tol * self.max_abs().max(1.0) };
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let pick = if S::EXACT {
                (r..self.rows).find(|&i| !self[(i, c)].is_zero())
            } else {
                (r..self.rows)
                    .max_by(|&a, &b| {
                        self[(a, c)].magnitude().total_cmp(&self[(b, c)].magnitude())
                    })
                    .filter(|&i| self[(i, c)].magnitude() > thresh)
            };
            let Some(p) = pick else { continue };
            self.swap_rows(r, p);
            let inv = self[(r, c)].inv().expect("pivot is nonzero");
            for j in c..self.cols {
                let v = std::mem::replace(&mut self[(r, j)], S::zero());
                self[(r, j)] = v * &inv;
            }
            for i in 0..self.rows {
                if i == r || self[(i, c)].is_zero() {
                    continue;
                }
                let f = self[(i, c)].clone();
                for j in c..self.cols {
                    if self[(r, j)].is_zero() {
                        continue;
                    }
                    let d = f.clone() * &self[(r, j)];
                    let v = std::mem::replace(&mut self[(i, j)], S::zero());
                    self[(i, j)] = v - &d;
                }
                if !S::EXACT {
                    self[(i, c)] = S::zero();
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn rank(&self, tol: f64) -> usize {
        self.clone().rref(tol).len()
    }

    /// Basis of the right nullspace, one vector per free column.
    pub fn nullspace(&self, tol: f64) -> Vec<Vec<S>> {
        let mut m = self.clone();
        let pivots = m.rref(tol);
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![S::zero(); self.cols];
                v[f] = S::one();
                for (r, &p) in pivots.iter().enumerate() {
                    v[p] = -m[(r, f)].clone();
                }
                v
            })
            .collect()
    }

    pub fn inverse(&self, tol: f64) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "inverse of {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let mut aug = Mat::from_fn(n, 2 * n, |i, j| {
            if j < n {
                self[(i, j)].clone()
            } else if j - n == i {
                S::one()
            } else {
                S::zero()
            }
        });
        let pivots = aug.rref(tol);
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return Err(Error::Singular("matrix is not invertible".into()));
        }
        Ok(Mat::from_fn(n, n, |i, j| aug[(i, j + n)].clone()))
    }

    /// Solves `self · x = b` for square invertible `self`.
    pub fn solve(&self, b: &[S], tol: f64) -> Result<Vec<S>> {
        Ok(self.inverse(tol)?.mul_vec(b))
    }

    /// Determinant by elimination.
    pub fn det(&self) -> S {
        assert!(self.is_square());
        let n = self.rows;
        let mut m = self.clone();
        let mut det = S::one();
        for c in 0..n {
            let pick = if S::EXACT {
                (c..n).find(|&i| !m[(i, c)].is_zero())
            } else {
                (c..n)
                    .max_by(|&a, &b| m[(a, c)].magnitude().total_cmp(&m[(b, c)].magnitude()))
                    .filter(|&i| !m[(i, c)].is_zero())
            };
            let Some(p) = pick else { return S::zero() };
            if p != c {
                m.swap_rows(p, c);
                det = -det;
            }
            let piv = m[(c, c)].clone();
            det = det * &piv;
            let inv = piv.inv().expect("nonzero pivot");
            for i in c + 1..n {
                if m[(i, c)].is_zero() {
                    continue;
                }
                let f = m[(i, c)].clone() * &inv;
                for j in c..n {
                    let d = f.clone() * &m[(c, j)];
                    let v = std::mem::replace(&mut m[(i, j)], S::zero());
                    m[(i, j)] = v - &d;
                }
            }
        }
        det
    }
}

impl<S> std::ops::Index<(usize, usize)> for Mat<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> std::ops::IndexMut<(usize, usize)> for Mat<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

/// Default relative tolerance for floating rank decisions.
pub const FLOAT_RANK_TOL: f64 = 1e-10;
