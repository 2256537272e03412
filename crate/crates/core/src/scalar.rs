//! Scalar fields used throughout the crate.
//!
//! [`GaussRat`] is the exact field ℚ(i) backed by arbitrary-precision
//! rationals. `Complex64` is the floating counterpart, and [`Dual`] carries a
//! first-order infinitesimal on top of `Complex64` so that tangent maps of the
//! numeric group actions come out exactly rather than by finite differences.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// A commutative field in which all series and matrix arithmetic happens.
///
/// Arithmetic is by value on the left and by reference on the right, which is
/// the cheap direction for big rationals: `acc = acc + &term`.
pub trait Scalar:
    Clone
    + fmt::Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + for<'a> Add<&'a Self, Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
{
    /// `true` for fields without rounding.
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(v: i64) -> Self;
    fn from_exact(v: &GaussRat) -> Self;

    /// Multiplicative inverse, `None` for an exact zero.
    fn inv(&self) -> Option<Self>;
    fn is_zero(&self) -> bool;
    /// Modulus, used for pivot selection and tolerance checks.
    fn magnitude(&self) -> f64;

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_exact(&GaussRat::from_ratio(num, den))
    }

    fn div(&self, other: &Self) -> Option<Self> {
        other.inv().map(|inv| self.clone() * &inv)
    }

    /// `out[k] = Σ a[i]·b[j]` over the triples `(i, j, k)` produced by `visit`.
    fn product_sum(
        a: &[Self],
        b: &[Self],
        out_len: usize,
        visit: &dyn Fn(&mut dyn FnMut(usize, usize, usize)),
    ) -> Vec<Self> {
        let mut out = vec![Self::zero(); out_len];
        visit(&mut |i, j, k| {
            let cur = std::mem::replace(&mut out[k], Self::zero());
            out[k] = cur + &(a[i].clone() * &b[j]);
        });
        out
    }

    fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..e {
            acc = acc * self;
        }
        acc
    }
}

/// Gaussian rational `re + i·im` with both parts in ℚ.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GaussRat {
    pub re: BigRational,
    pub im: BigRational,
}

impl GaussRat {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        GaussRat { re, im }
    }

    pub fn real(re: BigRational) -> Self {
        GaussRat { re, im: BigRational::zero() }
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Self::real(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        GaussRat { re: self.re.clone(), im: -self.im.clone() }
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }

    fn norm_sqr(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }
}

impl fmt::Debug for GaussRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for GaussRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", self.re)
        } else if self.re.is_zero() {
            write!(f, "{}i", self.im)
        } else if self.im.is_negative() {
            write!(f, "{}-{}i", self.re, -self.im.clone())
        } else {
            write!(f, "{}+{}i", self.re, self.im)
        }
    }
}

impl Add for GaussRat {
    type Output = GaussRat;
    fn add(self, rhs: GaussRat) -> GaussRat {
        self + &rhs
    }
}

impl<'a> Add<&'a GaussRat> for GaussRat {
    type Output = GaussRat;
    fn add(mut self, rhs: &'a GaussRat) -> GaussRat {
        self.re += &rhs.re;
        if !rhs.im.is_zero() {
            self.im += &rhs.im;
        }
        self
    }
}

impl Sub for GaussRat {
    type Output = GaussRat;
    fn sub(self, rhs: GaussRat) -> GaussRat {
        self - &rhs
    }
}

impl<'a> Sub<&'a GaussRat> for GaussRat {
    type Output = GaussRat;
    fn sub(mut self, rhs: &'a GaussRat) -> GaussRat {
        self.re -= &rhs.re;
        if !rhs.im.is_zero() {
            self.im -= &rhs.im;
        }
        self
    }
}

impl Mul for GaussRat {
    type Output = GaussRat;
    fn mul(self, rhs: GaussRat) -> GaussRat {
        self * &rhs
    }
}

impl<'a> Mul<&'a GaussRat> for GaussRat {
    type Output = GaussRat;
    fn mul(self, rhs: &'a GaussRat) -> GaussRat {
        if self.im.is_zero() && rhs.im.is_zero() {
            return GaussRat::real(self.re * &rhs.re);
        }
        let re = &self.re * &rhs.re - &self.im * &rhs.im;
        let im = &self.re * &rhs.im + &self.im * &rhs.re;
        GaussRat { re, im }
    }
}

impl Neg for GaussRat {
    type Output = GaussRat;
    fn neg(self) -> GaussRat {
        GaussRat { re: -self.re, im: -self.im }
    }
}

impl Scalar for GaussRat {
    const EXACT: bool = true;

    fn zero() -> Self {
        GaussRat::real(BigRational::zero())
    }

    fn one() -> Self {
        GaussRat::real(BigRational::one())
    }

    fn from_i64(v: i64) -> Self {
        GaussRat::real(BigRational::from_integer(BigInt::from(v)))
    }

    fn from_exact(v: &GaussRat) -> Self {
        v.clone()
    }

    fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        if self.im.is_zero() {
            return Some(GaussRat::real(self.re.recip()));
        }
        let n = self.norm_sqr();
        Some(GaussRat { re: &self.re / &n, im: -(&self.im / &n) })
    }

    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    fn magnitude(&self) -> f64 {
        self.to_complex().norm()
    }

    // Rational addition pays a gcd per term; clearing denominators first
    // leaves one reduction per output coefficient.
    fn product_sum(
        a: &[Self],
        b: &[Self],
        out_len: usize,
        visit: &dyn Fn(&mut dyn FnMut(usize, usize, usize)),
    ) -> Vec<Self> {
        let (ar, ai, da) = clear_denominators(a);
        let (br, bi, db) = clear_denominators(b);
        let real = ai.iter().all(Zero::is_zero) && bi.iter().all(Zero::is_zero);
        let mut re = vec![BigInt::zero(); out_len];
        let mut im = vec![BigInt::zero(); if real { 0 } else { out_len }];
        visit(&mut |i, j, k| {
            re[k] += &ar[i] * &br[j];
            if !real {
                re[k] -= &ai[i] * &bi[j];
                im[k] += &ar[i] * &bi[j];
                im[k] += &ai[i] * &br[j];
            }
        });
        let den = da * db;
        let part = |n: BigInt| {
            if n.is_zero() {
                BigRational::zero()
            } else {
                BigRational::new(n, den.clone())
            }
        };
        if real {
            re.into_iter().map(|r| GaussRat::real(part(r))).collect()
        } else {
            re.into_iter().zip(im).map(|(r, i)| GaussRat { re: part(r), im: part(i) }).collect()
        }
    }
}

fn clear_denominators(xs: &[GaussRat]) -> (Vec<BigInt>, Vec<BigInt>, BigInt) {
    let mut den = BigInt::one();
    for x in xs {
        for part in [&x.re, &x.im] {
            if !part.denom().is_one() {
                den = den.lcm(part.denom());
            }
        }
    }
    let scale = |q: &BigRational| {
        if q.is_zero() {
            BigInt::zero()
        } else {
            q.numer() * (&den / q.denom())
        }
    };
    let re = xs.iter().map(|x| scale(&x.re)).collect();
    let im = xs.iter().map(|x| scale(&x.im)).collect();
    (re, im, den)
}

impl Scalar for Complex64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }

    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }

    fn from_i64(v: i64) -> Self {
        Complex64::new(v as f64, 0.0)
    }

    fn from_exact(v: &GaussRat) -> Self {
        v.to_complex()
    }

    fn inv(&self) -> Option<Self> {
        if self.re == 0.0 && self.im == 0.0 {
            None
        } else {
            Some(Complex64::new(1.0, 0.0) / self)
        }
    }

    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }

    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// First-order dual number `value + ε·eps` with `ε² = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual {
    pub value: Complex64,
    pub eps: Complex64,
}

impl Dual {
    pub fn new(value: Complex64, eps: Complex64) -> Self {
        Dual { value, eps }
    }

    pub fn constant(value: Complex64) -> Self {
        Dual { value, eps: Complex64::new(0.0, 0.0) }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, rhs: Dual) -> Dual {
        Dual::new(self.value + rhs.value, self.eps + rhs.eps)
    }
}

impl<'a> Add<&'a Dual> for Dual {
    type Output = Dual;
    fn add(self, rhs: &'a Dual) -> Dual {
        self + *rhs
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, rhs: Dual) -> Dual {
        Dual::new(self.value - rhs.value, self.eps - rhs.eps)
    }
}

impl<'a> Sub<&'a Dual> for Dual {
    type Output = Dual;
    fn sub(self, rhs: &'a Dual) -> Dual {
        self - *rhs
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, rhs: Dual) -> Dual {
        Dual::new(self.value * rhs.value, self.value * rhs.eps + self.eps * rhs.value)
    }
}

impl<'a> Mul<&'a Dual> for Dual {
    type Output = Dual;
    fn mul(self, rhs: &'a Dual) -> Dual {
        self * *rhs
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual::new(-self.value, -self.eps)
    }
}

impl Scalar for Dual {
    const EXACT: bool = false;

    fn zero() -> Self {
        Dual::constant(Complex64::new(0.0, 0.0))
    }

    fn one() -> Self {
        Dual::constant(Complex64::new(1.0, 0.0))
    }

    fn from_i64(v: i64) -> Self {
        Dual::constant(Complex64::new(v as f64, 0.0))
    }

    fn from_exact(v: &GaussRat) -> Self {
        Dual::constant(v.to_complex())
    }

    fn inv(&self) -> Option<Self> {
        let inv = Scalar::inv(&self.value)?;
        Some(Dual::new(inv, -self.eps * inv * inv))
    }

    fn is_zero(&self) -> bool {
        Scalar::is_zero(&self.value) && Scalar::is_zero(&self.eps)
    }

    fn magnitude(&self) -> f64 {
        self.value.norm()
    }
}

/// Convenience constructor for exact rationals in tests and fixtures.
pub fn q(num: i64, den: i64) -> GaussRat {
    GaussRat::from_ratio(num, den)
}
