use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use foliation_core::connection::*;
use foliation_core::jets::{check_exactness, jet_of_function, prolong_map_1, Basis, JetRing};
use foliation_core::linalg::Mat;
use foliation_core::ode::*;
use foliation_core::psl::*;
use foliation_core::random::{self, SeededRng};
use foliation_core::{GaussRat, Scalar, SeriesMatrix, TruncatedSeries};
use num_complex::Complex64 as C;

use crate::report::{Check, Report, Status};
use crate::scenario::{Mode, Scenario};
use crate::HarnessError;

/// Result of one check before it is stamped with name and timing.
pub struct Outcome {
    pub pass: bool,
    pub residual: Option<f64>,
    pub verdict: String,
}

impl Outcome {
    fn exact(pass: bool, verdict: impl Into<String>) -> Self {
        Outcome { pass, residual: None, verdict: verdict.into() }
    }

    fn below(residual: f64, bound: f64) -> Self {
        let pass = residual.is_finite() && residual <= bound;
        Outcome { pass, residual: Some(residual), verdict: format!("bound {bound:e}") }
    }

    fn above(value: f64, bound: f64) -> Self {
        let pass = value.is_finite() && value > bound;
        Outcome { pass, residual: Some(value), verdict: format!("must exceed {bound:e}") }
    }

    fn skip(reason: &str) -> Self {
        Outcome { pass: true, residual: None, verdict: format!("skipped: {reason}") }
    }
}

type CheckResult = foliation_core::Result<Outcome>;

/// Something that should vanish: exactly in exact mode, below tolerance otherwise.
trait Residual {
    fn vanishes(&self) -> bool;
    fn size(&self) -> f64;
}

impl<S: Scalar> Residual for TruncatedSeries<S> {
    fn vanishes(&self) -> bool {
        self.is_zero()
    }
    fn size(&self) -> f64 {
        self.max_abs()
    }
}

impl<S: Scalar> Residual for SeriesMatrix<S> {
    fn vanishes(&self) -> bool {
        self.is_zero()
    }
    fn size(&self) -> f64 {
        self.max_abs_through(self.order())
    }
}

impl<S: Scalar> Residual for Mat<S> {
    fn vanishes(&self) -> bool {
        self.is_zero()
    }
    fn size(&self) -> f64 {
        self.max_abs()
    }
}

impl<R: Residual> Residual for Vec<R> {
    fn vanishes(&self) -> bool {
        self.iter().all(Residual::vanishes)
    }
    fn size(&self) -> f64 {
        self.iter().map(Residual::size).fold(0.0, f64::max)
    }
}

/// Running verdict over trials.
struct Acc {
    exact: bool,
    tol: f64,
    zero: bool,
    worst: f64,
    trials: usize,
}

impl Acc {
    fn new<S: Scalar>(tol: f64) -> Self {
        Acc { exact: S::EXACT, tol, zero: true, worst: 0.0, trials: 0 }
    }

    fn add(&mut self, r: &impl Residual) {
        self.add_rel(r, 1.0);
    }

    /// Floating residuals are measured relative to `scale` when it exceeds 1.
    fn add_rel(&mut self, r: &impl Residual, scale: f64) {
        self.trials += 1;
        if self.exact {
            self.zero &= r.vanishes();
        } else {
            self.worst = self.worst.max(r.size() / scale.max(1.0));
        }
    }

    fn finish(self) -> Outcome {
        if self.exact {
            let what = if self.zero { "exactly zero" } else { "nonzero" };
            let noun = if self.trials == 1 { "trial" } else { "trials" };
            Outcome::exact(self.zero, format!("{what} over {} {noun}", self.trials))
        } else {
            Outcome::below(self.worst, self.tol)
        }
    }
}

/// FNV-1a, so each check's random stream depends only on its own name.
fn name_hash(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

struct Suite<'a> {
    sc: &'a Scenario,
    name: &'static str,
    checks: Vec<Check>,
}

impl<'a> Suite<'a> {
    fn new(sc: &'a Scenario, name: &'static str) -> Self {
        Suite { sc, name, checks: Vec::new() }
    }

    fn full_name(&self, check: &str) -> String {
        format!("{}/{}", self.name, check)
    }

    fn record(&mut self, check: &str, anchor: &str, out: Outcome, ms: f64) {
        let status = if out.verdict.starts_with("skipped") {
            Status::Skip
        } else if out.pass {
            Status::Pass
        } else {
            Status::Fail
        };
        let elapsed_ms = (self.sc.mode == Mode::Float).then_some((ms * 1000.0).round() / 1000.0);
        self.checks.push(Check {
            name: self.full_name(check),
            anchor: anchor.into(),
            status,
            residual: out.residual,
            verdict: out.verdict,
            elapsed_ms,
        });
    }

    fn run(&mut self, check: &str, anchor: &str, f: impl FnOnce(&mut SeededRng) -> CheckResult) {
        let mut rng = random::rng(self.sc.seed ^ name_hash(&self.full_name(check)));
        let start = Instant::now();
        let out = match catch_unwind(AssertUnwindSafe(|| f(&mut rng))) {
            Ok(Ok(o)) => o,
            Ok(Err(e)) => Outcome::exact(false, format!("error: {e}")),
            Err(_) => Outcome::exact(false, "panicked"),
        };
        self.record(check, anchor, out, start.elapsed().as_secs_f64() * 1e3);
    }
}

// Random data. Everything is drawn exactly and lifted into the working field.

type Gx = TruncatedSeries<GaussRat>;

fn lift<S: Scalar>(s: &Gx) -> TruncatedSeries<S> {
    s.map(S::from_exact)
}

fn lift_m<S: Scalar>(m: &SeriesMatrix<GaussRat>) -> SeriesMatrix<S> {
    m.map_scalars(S::from_exact)
}

fn random_gauge(rng: &mut SeededRng, chart: FoliationChart, r: usize, order: u32) -> SeriesMatrix<GaussRat> {
    let c = random::invertible_matrix(rng, r);
    let nv = chart.nvars();
    SeriesMatrix::from_fn(r, r, |i, j| {
        let mut s = random::series(rng, nv, order, 2, 0.5);
        s.set_coeff(&vec![0; nv], c[(i, j)].clone());
        s
    })
}

fn random_transverse(rng: &mut SeededRng, chart: FoliationChart, order: u32) -> Gx {
    let s = random::series(rng, chart.q, order, 4, 0.3);
    let map: Vec<usize> = (0..chart.q).collect();
    s.embed(chart.nvars(), &map)
}

/// Polynomial germ fixing 0 with integer coefficients and a unipotent
/// linear part, so exact prolongation stays integral.
fn random_diffeo(rng: &mut SeededRng, n: usize, order: u32) -> Vec<Gx> {
    let int = |rng: &mut SeededRng| GaussRat::from_i64(random::uniform(rng, -3.5, 3.5).round() as i64);
    (0..n)
        .map(|i| {
            TruncatedSeries::from_fn(n, order, |m| {
                let d = m.degree();
                if d == 1 {
                    let j = m.0.iter().position(|&e| e == 1).expect("linear monomial");
                    if j == i {
                        GaussRat::one()
                    } else if j > i {
                        int(rng)
                    } else {
                        GaussRat::zero()
                    }
                } else if d >= 2 && d <= 3 && random::uniform(rng, 0.0, 1.0) < 0.5 {
                    int(rng)
                } else {
                    GaussRat::zero()
                }
            })
        })
        .collect()
}

fn unit_bounded(rng: &mut SeededRng) -> GaussRat {
    let r = random::rational(rng);
    if r.magnitude() > 1.0 {
        r.inv().expect("nonzero")
    } else {
        r
    }
}

/// Germ with |f'(0)| ≥ 1, so inverting f' does not amplify coefficients.
fn random_germ(rng: &mut SeededRng, order: u32) -> Gx {
    let mut f = random::series_vanishing(rng, 1, order, 4);
    let c = unit_bounded(rng);
    let c = if c.is_zero() { GaussRat::one() } else { c.inv().expect("nonzero") };
    f.set_coeff(&[1], c);
    f
}

fn univariate(rng: &mut SeededRng, order: u32) -> Gx {
    random::series(rng, 1, order, 4, 0.3)
}

fn cplx(re: f64) -> C {
    C::new(re, 0.0)
}

// Suites.

fn jets<S: Scalar>(s: &mut Suite) {
    let sc = s.sc.clone();
    let t = sc.order;
    s.run("change-of-basis", "monomial and zeta jet bases are mutually inverse (n <= 3, k <= 5)", |_| {
        let mut acc = Acc::new::<S>(sc.series_tolerance);
        for n in 1..=sc.dim.min(3) {
            for k in 0..=5 {
                let ring = JetRing::full(n, k);
                let to2: SeriesMatrix<S> = ring.change_matrix(Basis::B2, t);
                let to1 = ring.change_matrix(Basis::B1, t);
                let id = SeriesMatrix::identity(ring.dim(), n, t);
                acc.add(&(&(&to2 * &to1) - &id));
                acc.add(&(&(&to1 * &to2) - &id));
            }
        }
        Ok(acc.finish())
    });
    s.run("square", "d^2(x^2) = x^2 + 2x zeta + zeta^2", |_| {
        let x = TruncatedSeries::<S>::var(0, 1, t);
        let j = jet_of_function(&(&x * &x), 2, &[0])?;
        let expect = [&x * &x, x.scale(&S::from_i64(2)), TruncatedSeries::one(1, t)];
        let mut acc = Acc::new::<S>(sc.series_tolerance);
        for (c, e) in j.coeffs().iter().zip(&expect) {
            acc.add(&(c - &e.truncate(c.order())));
        }
        Ok(acc.finish())
    });
    s.run("multiplicative", "d^k(fg) = d^k f . d^k g", |rng| {
        let n = sc.dim;
        let k = (sc.k as u32).min(t - 1);
        let vars: Vec<usize> = (0..n).collect();
        let mut acc = Acc::new::<S>(sc.series_tolerance);
        for _ in 0..sc.trials {
            let f = lift::<S>(&random::series(rng, n, t, t, 0.3));
            let g = lift::<S>(&random::series(rng, n, t, t, 0.3));
            let lhs = jet_of_function(&(&f * &g), k, &vars)?;
            let rhs = jet_of_function(&f, k, &vars)?.mul(&jet_of_function(&g, k, &vars)?)?;
            acc.add(&lhs.sub(&rhs)?.coeffs().to_vec());
        }
        Ok(acc.finish())
    });
    s.run("exactness", "symbols span the kernel of jet truncation", |rng| {
        let mut ok = true;
        for k in 1..=3 {
            let ring = JetRing::full(sc.dim.min(3), k);
            let point = random::vector(rng, ring.nvars());
            ok &= check_exactness(&ring, &point)?.holds();
        }
        Ok(Outcome::exact(ok, "exact rank comparison, k = 1..3"))
    });
    s.run("functorial", "first prolongation respects composition", |rng| {
        let n = sc.dim.min(3);
        let mut acc = Acc::new::<S>(sc.series_tolerance);
        // Exact prolongation is costly, so this check caps order and trials.
        let t = t.min(6);
        for _ in 0..sc.trials.min(10) {
            let phi: Vec<TruncatedSeries<S>> = random_diffeo(rng, n, t).iter().map(lift).collect();
            let psi: Vec<TruncatedSeries<S>> = random_diffeo(rng, n, t).iter().map(lift).collect();
            let comp: Vec<_> = phi.iter().map(|p| p.compose(&psi)).collect::<foliation_core::Result<_>>()?;
            let direct = prolong_map_1(&comp)?;
            let chained = prolong_map_1(&phi)?.compose(&prolong_map_1(&psi)?)?;
            let o = direct.fiber.order().min(chained.fiber.order());
            let d = direct.fiber.truncate(o);
            acc.add_rel(&(&d - &chained.fiber.truncate(o)), d.size());
        }
        Ok(acc.finish())
    });
}

fn pfaffian<S: Scalar>(s: &mut Suite) {
    let sc = s.sc.clone();
    let t = sc.order;
    let chart = FoliationChart::new(sc.q, sc.d).expect("validated dimensions");
    s.run("flat-frame", "gauge systems are flat and their flat frame is G G(x,0)^-1", |rng| {
        let mut acc = Acc::new::<S>(sc.series_tolerance);
        for _ in 0..sc.trials {
            let g = lift_m::<S>(&random_gauge(rng, chart, sc.r, t));
            let p = gauge_connection(chart, &g)?;
            acc.add(&flatness_defect(&p)?);
            let f = flat_frame(&p)?;
            acc.add_rel(&pfaffian_residual(&p, &f)?, f.size());
            let g0 = g.restrict_zero(&chart.y_vars());
            acc.add_rel(&(&f - &(&g * &g0.inverse()?).truncate(p.order())), f.size());
        }
        Ok(acc.finish())
    });
    s.run("solve-linear", "solutions depend linearly on transverse initial data", |rng| {
        let mut acc = Acc::new::<S>(sc.series_tolerance);
        for _ in 0..sc.trials {
            let p = gauge_connection(chart, &lift_m::<S>(&random_gauge(rng, chart, sc.r, t)))?;
            let g1: Vec<TruncatedSeries<S>> = (0..sc.r).map(|_| lift(&random_transverse(rng, chart, t))).collect();
            let g2: Vec<TruncatedSeries<S>> = (0..sc.r).map(|_| lift(&random_transverse(rng, chart, t))).collect();
            let alpha = S::from_exact(&random::rational(rng));
            let comb: Vec<_> = g1.iter().zip(&g2).map(|(a, b)| &a.scale(&alpha) + b).collect();
            let (s1, s2, s12) = (solve_pfaffian(&p, &g1)?, solve_pfaffian(&p, &g2)?, solve_pfaffian(&p, &comb)?);
            let diff: Vec<_> = (0..sc.r).map(|i| &s12[i] - &(&s1[i].scale(&alpha) + &s2[i])).collect();
            acc.add_rel(&diff, s12.size());
            acc.add_rel(&pfaffian_residual(&p, &SeriesMatrix::from_fn(sc.r, 1, |i, _| s1[i].clone()))?, s1.size());
        }
        Ok(acc.finish())
    });
    s.run("bott-flat", "the Bott connection of a submersion is flat", |rng| {
        let nv = chart.nvars();
        let mut acc = Acc::new::<S>(sc.series_tolerance);
        for _ in 0..sc.trials.min(50) {
            let phi: Vec<TruncatedSeries<S>> = (0..sc.q)
                .map(|i| {
                    let mut f = random::series_vanishing(rng, nv, t, 3);
                    for j in 0..sc.q {
                        let mut e = vec![0; nv];
                        e[j] = 1;
                        let c = if i == j { random::nonzero_rational(rng) } else { GaussRat::zero() };
                        f.set_coeff(&e, c);
                    }
                    lift(&f)
                })
                .collect();
            let (tangent, normal) = frames_from_submersion(chart, &phi)?;
            let p = bott_patch(chart, &tangent, &normal)?;
            let defect = flatness_defect(&p)?;
            let valid = p.order().saturating_sub(1);
            acc.add(&defect.iter().map(|m| m.truncate(valid)).collect::<Vec<_>>());
        }
        Ok(acc.finish())
    });
    s.run("jet-patch", "jets of flat sections are flat for the transverse jet connection", |rng| {
        let k = (sc.k as u32).min(2);
        let mut acc = Acc::new::<S>(sc.series_tolerance);
        for _ in 0..sc.trials.min(20) {
            let p = gauge_connection(chart, &lift_m::<S>(&random_gauge(rng, chart, sc.r, t)))?;
            let jp = transverse_jet_patch(&p, k)?;
            acc.add(&flatness_defect(&jp)?);
            let g: Vec<TruncatedSeries<S>> = (0..sc.r).map(|_| lift(&random_transverse(rng, chart, t))).collect();
            let f = solve_pfaffian(&p, &g)?;
            let jv = transverse_jet_vector(chart, &f, k)?;
            let col = SeriesMatrix::from_fn(jv.len(), 1, |i, _| jv[i].clone());
            acc.add_rel(&pfaffian_residual(&jp, &col)?, jv.size());
        }
        Ok(acc.finish())
    });
}

fn exp_series<S: Scalar>(t: u32) -> TruncatedSeries<S> {
    let mut c = vec![S::one()];
    for i in 1..=t as i64 {
        let prev = c.last().unwrap().clone();
        c.push(prev.div(&S::from_i64(i)).unwrap());
    }
    TruncatedSeries::univariate(&c, t)
}

fn sin_cos<S: Scalar>(t: u32) -> (TruncatedSeries<S>, TruncatedSeries<S>) {
    let e: Vec<S> = exp_series::<S>(t).coeffs().to_vec();
    let pick = |parity: usize| -> Vec<S> {
        (0..=t as usize)
            .map(|i| {
                if i % 2 != parity {
                    S::zero()
                } else if (i / 2) % 2 == 0 {
                    e[i].clone()
                } else {
                    -e[i].clone()
                }
            })
            .collect()
    };
    (TruncatedSeries::univariate(&pick(1), t), TruncatedSeries::univariate(&pick(0), t))
}

fn schwarzian_suite<S: Scalar>(s: &mut Suite) {
    let sc = s.sc.clone();
    let t = sc.order;
    s.run("mobius", "the Schwarzian kills Mobius germs and is invariant under them", |rng| {
        let mut acc = Acc::new::<S>(sc.series_tolerance);
        let mut done = 0;
        while done < sc.trials {
            // δ = 1 up to scale; |γ| ≤ 1 keeps the germ's coefficients bounded.
            let (al, be, ga, de) = (random::rational(rng), random::rational(rng), unit_bounded(rng), GaussRat::one());
            if (al.clone() * &de - be.clone() * &ga).is_zero() {
                continue;
            }
            let m = mobius_germ(S::from_exact(&al), S::from_exact(&be), S::from_exact(&ga), S::from_exact(&de), t)?;
            acc.add_rel(&schwarzian(&m)?, m.size());
            let f = lift::<S>(&random_germ(rng, t));
            let mf = m.compose_polynomial(std::slice::from_ref(&f))?;
            let th = schwarzian(&f)?;
            acc.add_rel(&(&schwarzian(&mf)? - &th), th.size());
            done += 1;
        }
        Ok(acc.finish())
    });
    s.run("cocycle", "Theta(f o g) = Theta(f) o g . g'^2 + Theta(g)", |rng| {
        let mut acc = Acc::new::<S>(sc.series_tolerance);
        for _ in 0..sc.trials {
            let (f, g) = (lift::<S>(&random_germ(rng, t)), lift::<S>(&random_germ(rng, t)));
            let scale = schwarzian(&f.compose(std::slice::from_ref(&g))?)?.size();
            acc.add_rel(&cocycle_defect(&f, &g)?, scale);
        }
        Ok(acc.finish())
    });
    s.run("exp", "Theta(exp) = -1/12", |_| {
        let th = schwarzian(&exp_series::<S>(t))?;
        let mut acc = Acc::new::<S>(sc.series_tolerance);
        acc.add(&th.add_constant(&S::from_ratio(1, 12)));
        Ok(acc.finish())
    });
    s.run("tan", "Theta(sin : cos) = 1/3", |_| {
        let (sn, cs) = sin_cos::<S>(t);
        let th = schwarzian_ratio(&sn, &cs)?;
        let mut acc = Acc::new::<S>(sc.series_tolerance);
        acc.add(&th.add_constant(&S::from_ratio(-1, 3)));
        Ok(acc.finish())
    });
}

fn projective<S: Scalar>(s: &mut Suite) {
    let sc = s.sc.clone();
    let t = sc.order;
    s.run("round-trip", "(a, b) and (a, c) determine each other", |rng| {
        let mut acc = Acc::new::<S>(sc.series_tolerance);
        for _ in 0..sc.trials {
            let (a, b) = (lift::<S>(&univariate(rng, t)), lift::<S>(&univariate(rng, t)));
            let c = ode_to_projective(&a, &b)?.c;
            let back = projective_to_ode(&a, &c)?;
            acc.add(&(&back - &b.truncate(back.order())));
            let c2 = lift::<S>(&univariate(rng, t));
            let b2 = projective_to_ode(&a, &c2)?;
            let again = ode_to_projective(&a, &b2)?.c;
            acc.add(&(&again - &c2.truncate(again.order())));
        }
        Ok(acc.finish())
    });
    s.run("ratio-schwarzian", "Theta(f1 : f2) = b/3 - (a^2 + 2a')/12 for solutions of f'' + af' + bf = 0", |rng| {
        let mut acc = Acc::new::<S>(sc.series_tolerance);
        for _ in 0..sc.trials {
            let (a, b) = (lift::<S>(&univariate(rng, t)), lift::<S>(&univariate(rng, t)));
            let eq = TransverseEquation::second_order(&a, &b)?;
            let basis = fundamental_basis(&eq)?;
            let th = schwarzian_ratio(&basis[0][0], &basis[1][0])?;
            let c = ode_to_projective(&a, &b)?.c;
            let o = th.order().min(c.order());
            acc.add(&(&th.truncate(o) - &c.truncate(o)));
        }
        Ok(acc.finish())
    });
    s.run("extension-kernel", "jet vectors of solutions are flat for the companion connection", |rng| {
        let mut acc = Acc::new::<S>(sc.series_tolerance);
        for _ in 0..sc.trials {
            let coeffs: Vec<SeriesMatrix<S>> = (0..sc.k)
                .map(|_| lift_m(&SeriesMatrix::from_fn(sc.r, sc.r, |_, _| univariate(rng, t))))
                .collect();
            let eq = TransverseEquation::new(coeffs)?;
            let jets: Vec<S> = random::vector(rng, sc.r * sc.k).iter().map(S::from_exact).collect();
            let f = solve_ode(&eq, &jets)?;
            let ext = induced_extension(&eq);
            acc.add(&ext.kernel_residual(&f, sc.k)?);
            acc.add(&initial_jet_matrix(&eq, &[f])?.sub(&Mat::from_fn(sc.r * sc.k, 1, |i, _| jets[i].clone())));
        }
        Ok(acc.finish())
    });
    s.run("extension-matrix", "second-order companion matrix is [[0, -1], [b, a]] with trace a", |rng| {
        let (a, b) = (lift::<S>(&univariate(rng, t)), lift::<S>(&univariate(rng, t)));
        let ext = induced_extension(&TransverseEquation::second_order(&a, &b)?);
        let m = &ext.matrix;
        let z = TruncatedSeries::zero(1, t);
        let mut acc = Acc::new::<S>(sc.series_tolerance);
        acc.add(&vec![
            &m[(0, 0)] - &z,
            &m[(0, 1)] + &TruncatedSeries::one(1, t),
            &m[(1, 0)] - &b,
            &m[(1, 1)] - &a,
            &ext.trace() - &a,
        ]);
        Ok(acc.finish())
    });
}

fn distinct_lambdas(rng: &mut SeededRng, count: usize) -> Vec<GaussRat> {
    loop {
        let l: Vec<GaussRat> = (0..count).map(|_| random::rational(rng)).collect();
        let mut all = vec![GaussRat::one()];
        all.extend(l.iter().cloned());
        let clash = (0..all.len()).any(|i| (0..i).any(|j| all[i] == all[j]));
        if !clash {
            return l;
        }
    }
}

fn isotropy<S: Scalar>(s: &mut Suite) {
    let sc = s.sc.clone();
    let n = sc.dim;
    let point = |rng: &mut SeededRng, z_zero: bool| -> ProlongPoint<S> {
        let z = if z_zero { vec![GaussRat::zero(); n] } else { random::generic_vector(rng, n) };
        ProlongPoint::new(vec![GaussRat::zero(); n], z, random::generic_matrix(rng, n, n)).unwrap().map(S::from_exact)
    };
    s.run("trivial", "the isotropy group of a generic point with Z != 0 is trivial", |rng| {
        let mut hits = 0;
        for _ in 0..sc.trials {
            hits += (isotropy_nullspace(&point(rng, false))?.dimension == 0) as usize;
        }
        Ok(Outcome::exact(hits == sc.trials, format!("{hits}/{} trivial nullspaces", sc.trials)))
    });
    s.run("pole-locus", "Z = 0 has isotropy of dimension 2n", |rng| {
        let dim = isotropy_nullspace(&point(rng, true))?.dimension;
        Ok(Outcome::exact(dim == 2 * n, format!("nullspace dimension {dim}")))
    });
    s.run("n1-hand-case", "for n = 1 the isotropy equations force X = B = 0", |_| {
        let one = |v: i64| S::from_i64(v);
        let pt = ProlongPoint::new(vec![S::zero()], vec![one(2)], Mat::from_rows(vec![vec![one(5)]]))?;
        let pole = ProlongPoint::new(vec![S::zero()], vec![S::zero()], Mat::from_rows(vec![vec![one(5)]]))?;
        let (d0, d1) = (isotropy_nullspace(&pt)?.dimension, isotropy_nullspace(&pole)?.dimension);
        Ok(Outcome::exact(d0 == 0 && d1 == 2, format!("dimensions {d0} (Z = 2) and {d1} (Z = 0)")))
    });
    s.run("conjugation", "isotropy dimension is constant along orbits", |rng| {
        let mut ok = true;
        for _ in 0..sc.trials.min(50) {
            let pole = rng_bool(rng);
            let base = point(rng, pole);
            let h = GroupElement::from_isotropy(&random::invertible_matrix(rng, n), &random::vector(rng, n))?.map(S::from_exact);
            let moved = prolonged_action(&h, &base)?;
            ok &= isotropy_nullspace(&base)?.dimension == isotropy_nullspace(&moved)?.dimension;
        }
        Ok(Outcome::exact(ok, "dimension preserved"))
    });
    s.run("trace-identity", "isotropy action shifts tr W by -(n+1) B.Z", |rng| {
        let mut acc = Acc::new::<S>(sc.tolerance);
        for _ in 0..sc.trials {
            let a = random::invertible_matrix(rng, n).map(S::from_exact);
            let lift_v = |v: Vec<GaussRat>| -> Vec<S> { v.iter().map(S::from_exact).collect() };
            let (b, z) = (lift_v(random::vector(rng, n)), lift_v(random::vector(rng, n)));
            let w = random::matrix(rng, n, n).map(S::from_exact);
            let r = trace_identity_residual(&a, &b, &z, &w)?;
            acc.add(&Mat::column(vec![r.residual - &r.expected, r.conjugation_defect]));
        }
        Ok(acc.finish())
    });
    s.run("claim3-fiber", "W-fibers over diagonal A have dimension n with w_i1 = b_i / (1 - lambda_i)", |rng| {
        let mut ok = true;
        for m in 1..=n {
            for _ in 0..sc.trials.min(50) {
                let lambdas = distinct_lambdas(rng, m - 1);
                let mut b = vec![GaussRat::zero()];
                b.extend(random::vector(rng, m - 1));
                let f = claim3_fiber(
                    &lambdas.iter().map(S::from_exact).collect::<Vec<_>>(),
                    &b.iter().map(S::from_exact).collect::<Vec<_>>(),
                )?;
                ok &= f.dimension == m && f.consistent;
                for i in 1..m {
                    let expect = b[i].div(&(GaussRat::one() - &lambdas[i - 1])).unwrap();
                    ok &= (f.particular[(i, 0)].clone() - &S::from_exact(&expect)).magnitude() <= sc.tolerance;
                }
            }
        }
        Ok(Outcome::exact(ok, format!("fibers for n = 1..{n}")))
    });
    s.run("incidence-count", "incidence variety has tangent dimension n^2 + 2n - 1 at claim-3 points", |rng| {
        if n < 2 {
            return Ok(Outcome::skip("needs n >= 2"));
        }
        let mut b = vec![GaussRat::zero()];
        b.extend(random::vector(rng, n - 1));
        let f = claim3_fiber(&distinct_lambdas(rng, n - 1), &b)?.map_point(S::from_exact);
        let got = incidence_tangent_dim(&f.0, &f.1, &f.2, &f.3)?;
        let want = n * n + 2 * n - 1;
        Ok(Outcome::exact(got == want, format!("nullity {got}, expected {want}")))
    });
    s.run("action-exact", "composition law and fast path agree with the jet oracle on isotropy elements", |rng| {
        let mut ok = true;
        for _ in 0..sc.trials.min(30) {
            let iso = |rng: &mut SeededRng| {
                GroupElement::from_isotropy(&random::invertible_matrix(rng, n), &random::vector(rng, n)).map(|g| g.map(S::from_exact))
            };
            let (h1, h2) = (iso(rng)?, iso(rng)?);
            let pt = point(rng, false);
            let lhs = prolonged_action(&h2, &prolonged_action(&h1, &pt)?)?;
            let rhs = prolonged_action(&h2.compose(&h1)?, &pt)?;
            let oracle = prolonged_action_jet(&h1, &pt)?;
            let fast = prolonged_action(&h1, &pt)?;
            if S::EXACT {
                ok &= lhs == rhs && fast == oracle;
            } else {
                let d = |a: &ProlongPoint<S>, b: &ProlongPoint<S>| {
                    a.flatten().iter().zip(b.flatten()).map(|(x, y)| (x.clone() - &y).magnitude()).fold(0.0, f64::max)
                };
                ok &= d(&lhs, &rhs) <= sc.tolerance && d(&fast, &oracle) <= sc.tolerance;
            }
        }
        Ok(Outcome::exact(ok, "compared on every trial"))
    });
}

fn rng_bool(rng: &mut SeededRng) -> bool {
    random::uniform(rng, 0.0, 1.0) < 0.5
}

trait MapPoint {
    fn map_point<S: Scalar>(&self, f: impl Fn(&GaussRat) -> S) -> (Mat<S>, Vec<S>, Vec<S>, Mat<S>);
}

impl MapPoint for Claim3Fiber<GaussRat> {
    fn map_point<S: Scalar>(&self, f: impl Fn(&GaussRat) -> S) -> (Mat<S>, Vec<S>, Vec<S>, Mat<S>) {
        (self.a.map(&f), self.b.iter().map(&f).collect(), self.z.iter().map(&f).collect(), self.particular.map(&f))
    }
}

fn random_group(rng: &mut SeededRng, n: usize) -> GroupElement<C> {
    random_group_within(rng, n, 0.4)
}

fn random_group_within(rng: &mut SeededRng, n: usize, spread: f64) -> GroupElement<C> {
    loop {
        let m = Mat::from_fn(n + 1, n + 1, |i, j| {
            let base = if i == j { 1.0 } else { 0.0 };
            cplx(base + random::uniform(rng, -spread, spread))
        });
        if let Ok(g) = GroupElement::new(m) {
            return g;
        }
    }
}

fn random_point(rng: &mut SeededRng, n: usize) -> ProlongPoint<C> {
    let y = (0..n).map(|_| cplx(random::uniform(rng, -0.3, 0.3))).collect();
    let z = (0..n)
        .map(|_| {
            let sign = if rng_bool(rng) { -1.0 } else { 1.0 };
            cplx(sign * random::uniform(rng, 0.5, 1.5))
        })
        .collect();
    let w = Mat::from_fn(n, n, |_, _| cplx(random::uniform(rng, -1.0, 1.0)));
    ProlongPoint::new(y, z, w).expect("shapes agree")
}

/// Basepoint with trivial isotropy: y = 0, Z = (1, …, 1), W with distinct entries.
pub fn basepoint(n: usize) -> ProlongPoint<C> {
    let w = Mat::from_fn(n, n, |i, j| cplx(0.3 + 0.2 * i as f64 - 0.1 * j as f64));
    ProlongPoint::new(vec![cplx(0.0); n], vec![cplx(1.0); n], w).expect("shapes agree")
}

fn distance(a: &ProlongPoint<C>, b: &ProlongPoint<C>) -> f64 {
    a.flatten().iter().zip(b.flatten()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn maurer_cartan_suite(s: &mut Suite) {
    let sc = s.sc.clone();
    let n = sc.dim.min(2);
    s.run("composition-law", "prolonged action is a left action (floating)", |rng| {
        let (mut worst, mut done) = (0.0f64, 0);
        while done < sc.trials {
            let m = 1 + done % n.max(1);
            let (g1, g2, pt) = (random_group(rng, m), random_group(rng, m), random_point(rng, m));
            let (Ok(a), Ok(g21)) = (prolonged_action(&g1, &pt), g2.compose(&g1)) else { continue };
            let (Ok(lhs), Ok(rhs)) = (prolonged_action(&g2, &a), prolonged_action(&g21, &pt)) else { continue };
            let id = prolonged_action(&GroupElement::identity(m), &pt)?;
            worst = worst.max(distance(&lhs, &rhs)).max(distance(&id, &pt));
            done += 1;
        }
        Ok(Outcome::below(worst, sc.tolerance))
    });
    s.run("orbit-invert", "orbit map inversion recovers the group element", |rng| {
        let (mut worst, mut done) = (0.0f64, 0);
        let q0 = basepoint(n);
        while done < sc.trials {
            let g = random_group(rng, n);
            let Ok(x) = prolonged_action(&g, &q0) else { continue };
            let back = orbit_invert(&q0, &x, None)?;
            worst = worst.max(back.matrix().sub(g.matrix()).max_abs());
            done += 1;
        }
        Ok(Outcome::below(worst, sc.tolerance))
    });
    let mut rng = random::rng(sc.seed ^ name_hash(&s.full_name("form")));
    let start = Instant::now();
    let q0 = basepoint(n);
    // Sample inside the orbit of the basepoint, where Newton inversion is reliable.
    let mut points = Vec::with_capacity(sc.trials);
    while points.len() < sc.trials {
        if let Ok(x) = prolonged_action(&random_group_within(&mut rng, n, 0.2), &q0) {
            points.push(x);
        }
    }
    let g = random_group(&mut rng, n);
    let diag = catch_unwind(AssertUnwindSafe(|| form_diagnostics(&q0, &points, &g, sc.fd_step)));
    let ms = start.elapsed().as_secs_f64() * 1e3;
    let checks = [
        ("form-flatness", "d Omega + [Omega, Omega]/2 = 0 by central differences"),
        ("form-invariance", "Omega at gq is Ad(g) of Omega at q"),
        ("form-verticality", "Omega of a vector has zero base velocity"),
    ];
    for (i, (name, anchor)) in checks.iter().enumerate() {
        let out = match &diag {
            Ok(Ok(d)) => match i {
                0 => Outcome::below(d.flatness, sc.fd_tolerance),
                1 => Outcome::below(d.invariance, sc.tolerance),
                _ => Outcome::below(d.verticality, sc.tolerance),
            },
            Ok(Err(e)) => Outcome::exact(false, format!("error: {e}")),
            Err(_) => Outcome::exact(false, "panicked"),
        };
        s.record(name, anchor, out, ms);
    }
}

/// Two-chart atlas of the line foliation with Mobius transition, and a
/// section that avoids the pole locus.
pub fn two_chart_atlas(order: u32) -> (Vec<AtlasChart>, ProlongSection) {
    let series2 = |terms: &[(Vec<u32>, f64)]| -> TruncatedSeries<C> {
        let terms: Vec<(Vec<u32>, C)> = terms.iter().map(|(m, c)| (m.clone(), cplx(*c))).collect();
        TruncatedSeries::from_terms(2, order, &terms)
    };
    let phi0 = series2(&[(vec![1, 0], 1.0), (vec![0, 2], 0.5), (vec![1, 1], 0.25)]);
    let g = GroupElement::new(Mat::from_rows(vec![vec![cplx(1.0), cplx(0.3)], vec![cplx(0.2), cplx(1.5)]]))
        .expect("invertible");
    let one = TruncatedSeries::one(2, order);
    let num = &one.scale(&cplx(0.2)) + &phi0.scale(&cplx(1.5));
    let den = &one + &phi0.scale(&cplx(0.3));
    let phi1 = num.try_div(&den).expect("unit denominator");
    let charts = vec![
        AtlasChart { phi: vec![phi0], transition: GroupElement::identity(1) },
        AtlasChart { phi: vec![phi1], transition: g },
    ];
    let section = ProlongSection {
        z: vec![series2(&[(vec![0, 0], 1.0), (vec![0, 1], 0.5), (vec![1, 0], 1.0 / 3.0)])],
        w: vec![series2(&[(vec![1, 1], 0.2)])],
    };
    (charts, section)
}

/// Order used by the structure suite; the atlas is rational, so it needs
/// more terms than the default to reach the residual bound at |x| ≤ 0.1.
pub const STRUCTURE_ORDER: u32 = 14;

fn prolong_structure(s: &mut Suite) {
    let sc = s.sc.clone();
    let mut rng = random::rng(sc.seed ^ name_hash(&s.full_name("atlas")));
    let start = Instant::now();
    let (charts, section) = two_chart_atlas(sc.order.max(STRUCTURE_ORDER));
    let samples: Vec<_> = (0..sc.trials)
        .map(|_| {
            let p = vec![cplx(random::uniform(&mut rng, -0.1, 0.1)), cplx(random::uniform(&mut rng, -0.1, 0.1))];
            let z = vec![cplx(random::uniform(&mut rng, 0.5, 1.5))];
            (p, z, Mat::from_rows(vec![vec![cplx(random::uniform(&mut rng, -1.0, 1.0))]]))
        })
        .collect();
    let report = catch_unwind(AssertUnwindSafe(|| {
        prolong_structure_pullback(1, &charts, &basepoint(1), &samples, Some(&section), sc.fd_step)
    }));
    let ms = start.elapsed().as_secs_f64() * 1e3;
    let checks = [
        ("compatibility", "charts differ by the Mobius transition"),
        ("overlap", "pulled-back forms agree on the overlap"),
        ("tangent-kernel", "section pullback vanishes on leaf directions"),
        ("transverse-injectivity", "section pullback is injective on transverse directions"),
        ("section-flatness", "section pullback is flat"),
    ];
    for (i, (name, anchor)) in checks.iter().enumerate() {
        let out = match &report {
            Ok(Ok(r)) => match i {
                0 => Outcome::below(r.compatibility_residual, sc.tolerance),
                1 => Outcome::below(r.overlap_residual, sc.tolerance),
                2 => Outcome::below(r.tangent_kernel.unwrap_or(f64::NAN), sc.tolerance),
                3 => Outcome::above(r.transverse_injectivity.unwrap_or(f64::NAN), sc.tolerance),
                _ => Outcome::below(r.section_flatness.unwrap_or(f64::NAN), sc.fd_tolerance),
            },
            Ok(Err(e)) => Outcome::exact(false, format!("error: {e}")),
            Err(_) => Outcome::exact(false, "panicked"),
        };
        s.record(name, anchor, out, ms);
    }
}

fn run_one(sc: &Scenario, name: &'static str) -> Vec<Check> {
    let mut s = Suite::new(sc, name);
    let exact = sc.mode == Mode::Exact;
    match (name, exact) {
        ("jets", true) => jets::<GaussRat>(&mut s),
        ("jets", false) => jets::<C>(&mut s),
        ("pfaffian", true) => pfaffian::<GaussRat>(&mut s),
        ("pfaffian", false) => pfaffian::<C>(&mut s),
        ("schwarzian", true) => schwarzian_suite::<GaussRat>(&mut s),
        ("schwarzian", false) => schwarzian_suite::<C>(&mut s),
        ("projective", true) => projective::<GaussRat>(&mut s),
        ("projective", false) => projective::<C>(&mut s),
        ("isotropy", true) => isotropy::<GaussRat>(&mut s),
        ("isotropy", false) => isotropy::<C>(&mut s),
        // Inherently numerical: these run in floating point in both modes.
        ("maurer-cartan", _) => maurer_cartan_suite(&mut s),
        ("prolong-structure", _) => prolong_structure(&mut s),
        _ => unreachable!("suite names are validated"),
    }
    s.checks
}

/// Runs the scenario's suite, or every suite concurrently for `all`.
pub fn run_suite(sc: &Scenario) -> Result<Report, HarnessError> {
    sc.validate()?;
    let names: Vec<&'static str> = match sc.suite.as_str() {
        "all" => crate::scenario::SUITES[..7].to_vec(),
        other => vec![crate::scenario::SUITES.iter().copied().find(|s| *s == other).expect("validated")],
    };
    let checks = std::thread::scope(|scope| {
        let handles: Vec<_> = names.iter().map(|&n| scope.spawn(move || run_one(sc, n))).collect();
        handles.into_iter().flat_map(|h| h.join().expect("suite thread")).collect::<Vec<_>>()
    });
    Ok(Report::new(sc, checks))
}
