//! Matrices whose entries are truncated series over a common set of variables.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{Mat, FLOAT_RANK_TOL};
use crate::scalar::Scalar;
use crate::series::TruncatedSeries;

#[derive(Clone)]
pub struct SeriesMatrix<S> {
    rows: usize,
    cols: usize,
    entries: Vec<TruncatedSeries<S>>,
}

impl<S: Scalar> PartialEq for SeriesMatrix<S> {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.entries == other.entries
    }
}

impl<S: Scalar> fmt::Debug for SeriesMatrix<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SeriesMatrix {}x{}", self.rows, self.cols)?;
        for i in 0..self.rows {
            for j in 0..self.cols {
                writeln!(f, "  [{i},{j}] {}", self[(i, j)])?;
            }
        }
        Ok(())
    }
}

impl<S: Scalar> SeriesMatrix<S> {
    pub fn zeros(rows: usize, cols: usize, nvars: usize, order: u32) -> Self {
        SeriesMatrix { rows, cols, entries: vec![TruncatedSeries::zero(nvars, order); rows * cols] }
    }

    pub fn identity(n: usize, nvars: usize, order: u32) -> Self {
        let mut m = Self::zeros(n, n, nvars, order);
        for i in 0..n {
            m[(i, i)] = TruncatedSeries::one(nvars, order);
        }
        m
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> TruncatedSeries<S>,
    ) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        let m = SeriesMatrix { rows, cols, entries };
        m.assert_uniform();
        m
    }

    /// Constant matrix lifted to series.
    pub fn from_constant(m: &Mat<S>, nvars: usize, order: u32) -> Self {
        Self::from_fn(m.rows(), m.cols(), |i, j| {
            TruncatedSeries::constant(m[(i, j)].clone(), nvars, order)
        })
    }

    fn assert_uniform(&self) {
        if let Some(e0) = self.entries.first() {
            assert!(
                self.entries.iter().all(|e| e.nvars() == e0.nvars() && e.order() == e0.order()),
                "series matrix entries must share variables and order"
            );
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nvars(&self) -> usize {
        self.entries.first().map_or(0, |e| e.nvars())
    }

    pub fn order(&self) -> u32 {
        self.entries.first().map_or(0, |e| e.order())
    }

    pub fn entries(&self) -> &[TruncatedSeries<S>] {
        &self.entries
    }

    pub fn map_entries(&self, f: impl Fn(&TruncatedSeries<S>) -> TruncatedSeries<S>) -> Self {
        let m = SeriesMatrix { rows: self.rows, cols: self.cols, entries: self.entries.iter().map(f).collect() };
        m.assert_uniform();
        m
    }

    pub fn map_scalars<T: Scalar>(&self, f: impl Fn(&S) -> T) -> SeriesMatrix<T> {
        SeriesMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| e.map(&f)).collect(),
        }
    }

    pub fn truncate(&self, order: u32) -> Self {
        self.map_entries(|e| e.truncate(order))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero())
    }

    pub fn is_zero_through(&self, d: u32) -> bool {
        self.entries.iter().all(|e| e.is_zero_through(d))
    }

    pub fn max_abs_through(&self, d: u32) -> f64 {
        self.entries.iter().map(|e| e.max_abs_through(d)).fold(0.0, f64::max)
    }

    fn check_shape(&self, other: &Self) -> Result<()> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.try_add(b))
            .collect::<Result<_>>()?;
        Ok(SeriesMatrix { rows: self.rows, cols: self.cols, entries })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.try_sub(b))
            .collect::<Result<_>>()?;
        Ok(SeriesMatrix { rows: self.rows, cols: self.cols, entries })
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "product of {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let nvars = self.nvars();
        if nvars != other.nvars() {
            return Err(Error::VarMismatch(nvars, other.nvars()));
        }
        let t = self.order().min(other.order());
        let mut out = Self::zeros(self.rows, other.cols, nvars, t);
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
                    out[(i, j)] = &out[(i, j)] + &(a * b);
                }
            }
        }
        Ok(out)
    }

    pub fn neg(&self) -> Self {
        self.map_entries(|e| e.neg())
    }

    pub fn scale(&self, s: &S) -> Self {
        self.map_entries(|e| e.scale(s))
    }

    pub fn scale_series(&self, s: &TruncatedSeries<S>) -> Self {
        self.map_entries(|e| e * s)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn trace(&self) -> TruncatedSeries<S> {
        let mut acc = TruncatedSeries::zero(self.nvars(), self.order());
        for i in 0..self.rows.min(self.cols) {
            acc = &acc + &self[(i, i)];
        }
        acc
    }

    /// Kronecker product, row index `i·other.rows + k`.
    pub fn kron(&self, other: &Self) -> Self {
        Self::from_fn(self.rows * other.rows, self.cols * other.cols, |i, j| {
            &self[(i / other.rows, j / other.cols)] * &other[(i % other.rows, j % other.cols)]
        })
    }

    pub fn diff(&self, var: usize) -> Result<Self> {
        let entries = self.entries.iter().map(|e| e.diff(var)).collect::<Result<_>>()?;
        Ok(SeriesMatrix { rows: self.rows, cols: self.cols, entries })
    }

    pub fn compose(&self, g: &[TruncatedSeries<S>]) -> Result<Self> {
        let entries = self.entries.iter().map(|e| e.compose(g)).collect::<Result<_>>()?;
        Ok(SeriesMatrix { rows: self.rows, cols: self.cols, entries })
    }

    pub fn restrict_zero(&self, vars: &[usize]) -> Self {
        self.map_entries(|e| e.restrict_zero(vars))
    }

    pub fn constant_part(&self) -> Mat<S> {
        Mat::from_fn(self.rows, self.cols, |i, j| self[(i, j)].constant_term())
    }

    pub fn eval(&self, point: &[S]) -> Mat<S> {
        Mat::from_fn(self.rows, self.cols, |i, j| self[(i, j)].eval(point))
    }

    pub fn column(&self, j: usize) -> Vec<TruncatedSeries<S>> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn mul_vec(&self, v: &[TruncatedSeries<S>]) -> Result<Vec<TruncatedSeries<S>>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch("matrix-vector length".into()));
        }
        let t = v.iter().map(|e| e.order()).min().unwrap_or(self.order()).min(self.order());
        Ok((0..self.rows)
            .map(|i| {
                let mut acc = TruncatedSeries::zero(self.nvars(), t);
                for (k, vk) in v.iter().enumerate() {
                    if !self[(i, k)].is_zero() && !vk.is_zero() {
                        acc = &acc + &(&self[(i, k)] * vk);
                    }
                }
                acc
            })
            .collect())
    }

    /// Inverse by Newton iteration `X ← X(2I − F X)` from the constant term.
    pub fn inverse(&self) -> Result<Self> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch("inverse of non-square matrix".into()));
        }
        let n = self.rows;
        let (nv, t) = (self.nvars(), self.order());
        let c0 = self
            .constant_part()
            .inverse(FLOAT_RANK_TOL)
            .map_err(|_| Error::Singular("matrix singular at the origin".into()))?;
        let mut x = Self::from_constant(&c0, nv, t);
        let two = Self::identity(n, nv, t).scale(&S::from_i64(2));
        let mut valid = 0u32;
        while valid < t {
            let fx = self.try_mul(&x)?;
            x = x.try_mul(&two.try_sub(&fx)?)?;
            valid = 2 * valid + 1;
        }
        Ok(x)
    }

    /// Block matrix assembled from a grid of equally sized blocks.
    pub fn from_blocks(blocks: &[Vec<SeriesMatrix<S>>]) -> Self {
        let br = blocks[0][0].rows;
        let bc = blocks[0][0].cols;
        let rows = blocks.len() * br;
        let cols = blocks[0].len() * bc;
        Self::from_fn(rows, cols, |i, j| blocks[i / br][j / bc][(i % br, j % bc)].clone())
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)].clone())
    }
}

impl<S> std::ops::Index<(usize, usize)> for SeriesMatrix<S> {
    type Output = TruncatedSeries<S>;
    fn index(&self, (i, j): (usize, usize)) -> &TruncatedSeries<S> {
        &self.entries[i * self.cols + j]
    }
}

impl<S> std::ops::IndexMut<(usize, usize)> for SeriesMatrix<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut TruncatedSeries<S> {
        &mut self.entries[i * self.cols + j]
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $f:ident) => {
        impl<'a, S: Scalar> std::ops::$tr<&'a SeriesMatrix<S>> for &'a SeriesMatrix<S> {
            type Output = SeriesMatrix<S>;
            fn $m(self, rhs: &'a SeriesMatrix<S>) -> SeriesMatrix<S> {
                self.$f(rhs).expect("series matrix shapes agree")
            }
        }
    };
}

binop!(Add, add, try_add);
binop!(Sub, sub, try_sub);
binop!(Mul, mul, try_mul);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use crate::scalar::GaussRat;

    #[test]
    fn inverse_round_trip() {
        let mut rng = random::rng(3);
        let c = random::invertible_matrix(&mut rng, 3);
        let m = SeriesMatrix::from_fn(3, 3, |i, j| {
            let mut s = random::series(&mut rng, 2, 5, 5, 0.3);
            s.set_coeff(&[0, 0], c[(i, j)].clone());
            s
        });
        let inv = m.inverse().unwrap();
        assert_eq!(&m * &inv, SeriesMatrix::<GaussRat>::identity(3, 2, 5));
    }
}
