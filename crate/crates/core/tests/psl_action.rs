use foliation_core::linalg::Mat;
use foliation_core::psl::*;
use foliation_core::random::{self, SeededRng};
use foliation_core::{q, Error, GaussRat, Scalar, TruncatedSeries};
use num_complex::Complex64 as C;

fn cplx(re: f64) -> C {
    C::new(re, 0.0)
}

fn random_group(rng: &mut SeededRng, n: usize) -> GroupElement<C> {
    loop {
        let m = Mat::from_fn(n + 1, n + 1, |i, j| {
            let base = if i == j { 1.0 } else { 0.0 };
            cplx(base + random::uniform(rng, -0.4, 0.4))
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
            let s = if random::uniform(rng, 0.0, 1.0) < 0.5 { -1.0 } else { 1.0 };
            cplx(s * random::uniform(rng, 0.5, 1.5))
        })
        .collect();
    let w = Mat::from_fn(n, n, |_, _| cplx(random::uniform(rng, -1.0, 1.0)));
    ProlongPoint::new(y, z, w).unwrap()
}

fn dist(a: &ProlongPoint<C>, b: &ProlongPoint<C>) -> f64 {
    a.flatten().iter().zip(b.flatten()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn exact_point(rng: &mut SeededRng, n: usize, y_zero: bool) -> ProlongPoint<GaussRat> {
    let y = if y_zero { vec![GaussRat::zero(); n] } else { random::vector(rng, n) };
    ProlongPoint::new(y, random::nonzero_vector(rng, n), random::matrix(rng, n, n)).unwrap()
}

fn exact_isotropy(rng: &mut SeededRng, n: usize) -> GroupElement<GaussRat> {
    GroupElement::from_isotropy(&random::invertible_matrix(rng, n), &random::vector(rng, n)).unwrap()
}

#[test]
fn composition_law_floating() {
    let mut rng = random::rng(11);
    let mut done = 0;
    while done < 100 {
        let n = 1 + done % 3;
        let (g1, g2, pt) = (random_group(&mut rng, n), random_group(&mut rng, n), random_point(&mut rng, n));
        let (Ok(a), Ok(g21)) = (prolonged_action(&g1, &pt), g2.compose(&g1)) else { continue };
        let (Ok(lhs), Ok(rhs)) = (prolonged_action(&g2, &a), prolonged_action(&g21, &pt)) else { continue };
        assert!(dist(&lhs, &rhs) < 1e-9, "trial {done}: {}", dist(&lhs, &rhs));
        let id = prolonged_action(&GroupElement::identity(n), &pt).unwrap();
        assert!(dist(&id, &pt) < 1e-15);
        done += 1;
    }
}

#[test]
fn composition_law_exact_on_isotropy() {
    let mut rng = random::rng(5);
    for n in 1..=3 {
        for _ in 0..10 {
            let (h1, h2) = (exact_isotropy(&mut rng, n), exact_isotropy(&mut rng, n));
            let pt = exact_point(&mut rng, n, true);
            let lhs = prolonged_action(&h2, &prolonged_action(&h1, &pt).unwrap()).unwrap();
            let rhs = prolonged_action(&h2.compose(&h1).unwrap(), &pt).unwrap();
            assert_eq!(lhs, rhs);
            let (a, b) = h1.isotropy_parts().unwrap();
            let (z, w) = fiber_action(&a, &b, &pt.z, &pt.w).unwrap();
            let fast = prolonged_action(&h1, &pt).unwrap();
            assert_eq!((fast.z.clone(), fast.w.clone()), (z, w));
            assert_eq!(fast, prolonged_action_jet(&h1, &pt).unwrap());
        }
    }
}

#[test]
fn fast_path_agrees_with_jet_oracle_off_origin() {
    let mut rng = random::rng(8);
    for n in 1..=2 {
        for _ in 0..5 {
            let g = GroupElement::new(random::invertible_matrix(&mut rng, n + 1)).unwrap();
            let pt = exact_point(&mut rng, n, false);
            match (prolonged_action(&g, &pt), prolonged_action_jet(&g, &pt)) {
                (Ok(a), Ok(b)) => assert_eq!(a, b),
                (Err(Error::ChartEscape), Err(Error::ChartEscape)) => {}
                other => panic!("paths disagree: {other:?}"),
            }
        }
    }
}

#[test]
fn affine_derivatives_at_origin() {
    let g = GroupElement::from_isotropy(
        &Mat::from_rows(vec![vec![q(2, 1), q(1, 3)], vec![q(-1, 1), q(1, 2)]]),
        &[q(3, 1), q(-2, 5)],
    )
    .unwrap();
    let (l, jac, hess) = affine_derivatives(&g, &[GaussRat::zero(), GaussRat::zero()]).unwrap();
    assert!(l.iter().all(|c| c.is_zero()));
    let m = g.matrix();
    for i in 0..2 {
        for j1 in 0..2 {
            assert_eq!(jac[(i, j1)], m[(i + 1, j1 + 1)]);
            for j2 in 0..2 {
                let expect = -(m[(i + 1, j1 + 1)].clone() * &m[(0, j2 + 1)]) - m[(i + 1, j2 + 1)].clone() * &m[(0, j1 + 1)];
                assert_eq!(hess[i][(j1, j2)], expect);
            }
        }
    }
}

#[test]
fn n1_affine_example() {
    let g = GroupElement::from_isotropy(&Mat::from_rows(vec![vec![q(3, 1)]]), &[q(2, 1)]).unwrap();
    let y = q(1, 5);
    let l = affine_action(&g, &[y.clone()]).unwrap();
    assert_eq!(l[0], q(3, 1) * &y * &(GaussRat::one() + q(2, 1) * &y).inv().unwrap());
    assert_eq!(affine_action(&g, &[q(-1, 2)]), Err(Error::ChartEscape));
}

#[test]
fn isotropy_lemma_random_trials() {
    let mut rng = random::rng(2024);
    for n in 2..=3 {
        for _ in 0..20 {
            let pt = exact_point(&mut rng, n, true);
            assert_eq!(isotropy_nullspace(&pt).unwrap().dimension, 0);
        }
        let zero = ProlongPoint::new(vec![GaussRat::zero(); n], vec![GaussRat::zero(); n], random::matrix(&mut rng, n, n)).unwrap();
        assert_eq!(isotropy_nullspace(&zero).unwrap().dimension, 2 * n);
    }
}

#[test]
fn isotropy_lemma_generic_points() {
    let mut rng = random::rng(2025);
    for n in 2..=3 {
        for _ in 0..50 {
            let pt = ProlongPoint::new(vec![GaussRat::zero(); n], random::generic_vector(&mut rng, n), random::generic_matrix(&mut rng, n, n)).unwrap();
            assert_eq!(isotropy_nullspace(&pt).unwrap().dimension, 0);
        }
    }
}

#[test]
fn special_point_with_nonzero_z_has_isotropy() {
    // Z ≠ 0 does not suffice: this point sits on the exceptional locus.
    let z = vec![q(0, 1), q(-9, 7)];
    let w = Mat::from_rows(vec![vec![q(9, 8), q(4, 9)], vec![q(0, 1), q(1, 2)]]);
    let ns = isotropy_nullspace(&ProlongPoint::new(vec![GaussRat::zero(); 2], z.clone(), w.clone()).unwrap()).unwrap();
    assert_eq!(ns.dimension, 2);
    for (x, b) in &ns.basis {
        assert!(x.mul_vec(&z).iter().all(|c| c.is_zero()));
        let bz = Mat::from_fn(2, 2, |i, j| b[i].clone() * &z[j]);
        let xt = x.transpose();
        assert!(bz.sub(&w.mul(&xt).sub(&xt.mul(&w))).is_zero());
    }
}

#[test]
fn isotropy_dimension_is_conjugation_invariant() {
    let mut rng = random::rng(3);
    for n in 1..=3 {
        let base = ProlongPoint::new(vec![GaussRat::zero(); n], vec![GaussRat::zero(); n], random::matrix(&mut rng, n, n)).unwrap();
        let h = exact_isotropy(&mut rng, n);
        let moved = prolonged_action(&h, &base).unwrap();
        assert_eq!(isotropy_nullspace(&base).unwrap().dimension, isotropy_nullspace(&moved).unwrap().dimension);
    }
}

#[test]
fn trace_identity() {
    let mut rng = random::rng(17);
    for n in 1..=3 {
        let a = random::invertible_matrix(&mut rng, n);
        let (b, z, w) = (random::vector(&mut rng, n), random::vector(&mut rng, n), random::matrix(&mut rng, n, n));
        let t = trace_identity_residual(&a, &b, &z, &w).unwrap();
        assert_eq!(t.residual, t.expected);
        assert!(t.conjugation_defect.is_zero());
    }
}

#[test]
fn incidence_point_checks() {
    let f = claim3_fiber(&[q(2, 1)], &[q(0, 1), q(3, 1)]).unwrap();
    let n = incidence_tangent_dim(&f.a, &f.b, &f.z, &f.particular).unwrap();
    assert_eq!(n, 7);
    let mut off = f.particular.clone();
    off[(0, 1)] = q(1, 1);
    assert_eq!(incidence_tangent_dim(&f.a, &f.b, &f.z, &off), Err(Error::NotOnIncidence));
}

fn basepoint() -> ProlongPoint<C> {
    ProlongPoint::new(vec![cplx(0.0)], vec![cplx(1.0)], Mat::from_rows(vec![vec![cplx(0.3)]])).unwrap()
}

#[test]
fn orbit_inversion_round_trip() {
    let mut rng = random::rng(99);
    let mut done = 0;
    while done < 30 {
        let n = 1 + done % 2;
        let q0 = random_point(&mut rng, n);
        let g = random_group(&mut rng, n);
        let Ok(x) = prolonged_action(&g, &q0) else { continue };
        let back = orbit_invert(&q0, &x, None).unwrap();
        let d = back.matrix().sub(g.matrix()).max_abs();
        assert!(d < 1e-8, "trial {done}: {d}");
        done += 1;
    }
    let q0 = basepoint();
    assert!(orbit_invert(&q0, &q0, None).unwrap().matrix().sub(&Mat::identity(2)).max_abs() < 1e-12);
    let bad = ProlongPoint::new(vec![cplx(0.1)], vec![cplx(0.0)], Mat::from_rows(vec![vec![cplx(0.5)]])).unwrap();
    assert!(matches!(orbit_invert(&q0, &bad, None), Err(Error::PoleLocus(_))));
}

#[test]
fn maurer_cartan_properties() {
    let q0 = basepoint();
    let mut rng = random::rng(4);
    let xi = Mat::from_rows(vec![vec![cplx(0.2), cplx(-0.7)], vec![cplx(0.4), cplx(-0.2)]]);
    let g = random_group(&mut rng, 1);
    let x = prolonged_action(&g, &q0).unwrap();
    let v = infinitesimal_action(&g, &q0, &xi).unwrap();
    let got = maurer_cartan(&q0, &x, &v).unwrap();
    assert!(got.sub(&xi).max_abs() < 1e-8);

    let k = random_group(&mut rng, 1);
    let kq = prolonged_action(&k, &q0).unwrap();
    let lhs = maurer_cartan(&kq, &x, &v).unwrap();
    let rhs = ad(&k, &got).unwrap();
    assert!(lhs.sub(&rhs).max_abs() < 1e-8);

    let v2: Vec<C> = (0..3).map(|i| cplx(0.3 * i as f64 - 0.1)).collect();
    let alpha = cplx(1.7);
    let combo: Vec<C> = v.iter().zip(&v2).map(|(a, b)| alpha * a + b).collect();
    let lin = maurer_cartan(&q0, &x, &combo).unwrap();
    let sep = maurer_cartan(&q0, &x, &v).unwrap().scale(&alpha).add(&maurer_cartan(&q0, &x, &v2).unwrap());
    assert!(lin.sub(&sep).max_abs() < 1e-10);
}

#[test]
fn form_diagnostics_n1() {
    let q0 = basepoint();
    let mut rng = random::rng(21);
    let points: Vec<_> = (0..5).map(|_| random_point(&mut rng, 1)).collect();
    let g = random_group(&mut rng, 1);
    let d = form_diagnostics(&q0, &points, &g, 1e-4).unwrap();
    assert!(d.flatness < 1e-4, "{d:?}");
    assert!(d.invariance < 1e-8, "{d:?}");
    assert!(d.verticality < 1e-8, "{d:?}");
}

fn series2(terms: &[(Vec<u32>, f64)], t: u32) -> TruncatedSeries<C> {
    let terms: Vec<(Vec<u32>, C)> = terms.iter().map(|(m, c)| (m.clone(), cplx(*c))).collect();
    TruncatedSeries::from_terms(2, t, &terms)
}

#[test]
fn two_chart_structure() {
    let t = 14;
    let phi0 = series2(&[(vec![1, 0], 1.0), (vec![0, 2], 0.5), (vec![1, 1], 0.25)], t);
    let g = GroupElement::new(Mat::from_rows(vec![vec![cplx(1.0), cplx(0.3)], vec![cplx(0.2), cplx(1.5)]])).unwrap();
    // φ₁ = L_g∘φ₀ as a series: (0.2 + 1.5φ₀)/(1 + 0.3φ₀).
    let one = TruncatedSeries::one(2, t);
    let num = &one.scale(&cplx(0.2)) + &phi0.scale(&cplx(1.5));
    let den = &one + &phi0.scale(&cplx(0.3));
    let phi1 = num.try_div(&den).unwrap();
    let charts = vec![
        AtlasChart { phi: vec![phi0], transition: GroupElement::identity(1) },
        AtlasChart { phi: vec![phi1], transition: g },
    ];
    let section = ProlongSection {
        z: vec![series2(&[(vec![0, 0], 1.0), (vec![0, 1], 0.5), (vec![1, 0], 1.0 / 3.0)], t)],
        w: vec![series2(&[(vec![1, 1], 0.2)], t)],
    };
    let mut rng = random::rng(6);
    let samples: Vec<_> = (0..6)
        .map(|_| {
            let p = vec![cplx(random::uniform(&mut rng, -0.1, 0.1)), cplx(random::uniform(&mut rng, -0.1, 0.1))];
            (p, vec![cplx(random::uniform(&mut rng, 0.5, 1.5))], Mat::from_rows(vec![vec![cplx(random::uniform(&mut rng, -1.0, 1.0))]]))
        })
        .collect();
    let r = prolong_structure_pullback(1, &charts, &basepoint(), &samples, Some(&section), 1e-4).unwrap();
    assert!(r.overlap_residual < 1e-8, "{r:?}");
    assert!(r.tangent_kernel.unwrap() < 1e-8, "{r:?}");
    assert!(r.transverse_injectivity.unwrap() > 1e-8, "{r:?}");
    assert!(r.section_flatness.unwrap() < 1e-4, "{r:?}");
}
