//! Seeded generators for fixtures and property tests.
//!
//! Rationals have numerators in [−9, 9] and denominators in [1, 9].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::Mat;
use crate::scalar::{GaussRat, Scalar};
use crate::series::TruncatedSeries;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rational(rng: &mut SeededRng) -> GaussRat {
    let num = rng.gen_range(-9i64..=9);
    let den = rng.gen_range(1i64..=9);
    GaussRat::from_ratio(num, den)
}

pub fn nonzero_rational(rng: &mut SeededRng) -> GaussRat {
    loop {
        let r = rational(rng);
        if !r.is_zero() {
            return r;
        }
    }
}

/// Dense random series; each coefficient is zero with probability `sparsity`.
pub fn series(
    rng: &mut SeededRng,
    nvars: usize,
    order: u32,
    max_degree: u32,
    sparsity: f64,
) -> TruncatedSeries<GaussRat> {
    TruncatedSeries::from_fn(nvars, order, |m| {
        if m.degree() > max_degree || rng.gen_bool(sparsity) {
            GaussRat::zero()
        } else {
            rational(rng)
        }
    })
}

/// Random series with zero constant term.
pub fn series_vanishing(
    rng: &mut SeededRng,
    nvars: usize,
    order: u32,
    max_degree: u32,
) -> TruncatedSeries<GaussRat> {
    let mut s = series(rng, nvars, order, max_degree, 0.0);
    s.set_coeff(&vec![0; nvars], GaussRat::zero());
    s
}

pub fn matrix(rng: &mut SeededRng, rows: usize, cols: usize) -> Mat<GaussRat> {
    Mat::from_fn(rows, cols, |_, _| rational(rng))
}

/// Random invertible matrix, resampled until the determinant is nonzero.
pub fn invertible_matrix(rng: &mut SeededRng, n: usize) -> Mat<GaussRat> {
    loop {
        let m = matrix(rng, n, n);
        if !m.det().is_zero() {
            return m;
        }
    }
}

pub fn vector(rng: &mut SeededRng, n: usize) -> Vec<GaussRat> {
    (0..n).map(|_| rational(rng)).collect()
}

pub fn nonzero_vector(rng: &mut SeededRng, n: usize) -> Vec<GaussRat> {
    loop {
        let v = vector(rng, n);
        if v.iter().any(|c| !c.is_zero()) {
            return v;
        }
    }
}

/// Nonzero rational of height up to 999. Small-height samples land on
/// proper subvarieties often enough to matter (e.g. points with extra
/// isotropy); these are the "generic" draws.
pub fn generic_rational(rng: &mut SeededRng) -> GaussRat {
    let num = loop {
        let v = rng.gen_range(-999i64..=999);
        if v != 0 {
            break v;
        }
    };
    GaussRat::from_ratio(num, rng.gen_range(1i64..=999))
}

pub fn generic_vector(rng: &mut SeededRng, n: usize) -> Vec<GaussRat> {
    (0..n).map(|_| generic_rational(rng)).collect()
}

pub fn generic_matrix(rng: &mut SeededRng, rows: usize, cols: usize) -> Mat<GaussRat> {
    Mat::from_fn(rows, cols, |_, _| generic_rational(rng))
}

/// Uniform real in `[lo, hi)`.
pub fn uniform(rng: &mut SeededRng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo..hi)
}
