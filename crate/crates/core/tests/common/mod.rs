#![allow(dead_code)]

use foliation_core::connection::FoliationChart;
use foliation_core::random::{self, SeededRng};
use foliation_core::{GaussRat, Scalar, SeriesMatrix, TruncatedSeries};

pub type Sx = TruncatedSeries<GaussRat>;

/// Random invertible series matrix: a random invertible constant plus
/// higher-order terms of degree ≤ `max_degree`.
pub fn random_gauge(rng: &mut SeededRng, chart: FoliationChart, r: usize, order: u32, max_degree: u32) -> SeriesMatrix<GaussRat> {
    let c = random::invertible_matrix(rng, r);
    let nv = chart.nvars();
    SeriesMatrix::from_fn(r, r, |i, j| {
        let mut s = random::series(rng, nv, order, max_degree, 0.5);
        s.set_coeff(&vec![0; nv], c[(i, j)].clone());
        s
    })
}

/// Random series in the transverse variables only.
pub fn random_transverse(rng: &mut SeededRng, chart: FoliationChart, order: u32, max_degree: u32) -> Sx {
    let nv = chart.nvars();
    let s = random::series(rng, chart.q.max(1), order, max_degree, 0.3);
    if chart.q == 0 {
        return Sx::constant(s.constant_term(), nv, order);
    }
    let map: Vec<usize> = (0..chart.q).collect();
    s.embed(nv, &map)
}

/// Random polynomial diffeomorphism germ fixing the origin.
pub fn random_diffeo(rng: &mut SeededRng, n: usize, order: u32) -> Vec<Sx> {
    let lin = random::invertible_matrix(rng, n);
    (0..n)
        .map(|i| {
            let mut s = random::series(rng, n, order, 3, 0.5);
            s.set_coeff(&vec![0; n], GaussRat::zero());
            for j in 0..n {
                let mut e = vec![0; n];
                e[j] = 1;
                s.set_coeff(&e, lin[(i, j)].clone());
            }
            s
        })
        .collect()
}

pub fn agree_through(a: &Sx, b: &Sx, t: u32) -> bool {
    a.truncate(t) == b.truncate(t)
}
