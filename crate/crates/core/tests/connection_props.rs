mod common;

use common::{random_gauge, random_transverse, Sx};
use foliation_core::connection::*;
use foliation_core::multi_index::count_up_to;
use foliation_core::random;
use foliation_core::{q, GaussRat, Scalar, SeriesMatrix};
use proptest::prelude::*;

fn chart(q: usize, d: usize) -> FoliationChart {
    FoliationChart::new(q, d).unwrap()
}

fn all_zero(ms: &[SeriesMatrix<GaussRat>]) -> bool {
    ms.iter().all(|m| m.is_zero())
}

#[test]
fn degenerate_inputs_are_rejected() {
    assert!(matches!(FoliationChart::new(1, 0), Err(foliation_core::Error::Degenerate(_))));
    let c = chart(1, 1);
    let empty = SeriesMatrix::<GaussRat>::zeros(0, 0, 2, 3);
    assert!(matches!(ConnectionPatch::new(c, vec![empty]), Err(foliation_core::Error::Degenerate(_))));
}

#[test]
fn coordinate_fibration_has_zero_bott_patch() {
    let c = chart(2, 1);
    let t = 4;
    let tangent = vec![PolyVectorField::<GaussRat>::coordinate(2, 3, t)];
    let normal = vec![PolyVectorField::<GaussRat>::coordinate(0, 3, t), PolyVectorField::<GaussRat>::coordinate(1, 3, t)];
    let p = bott_patch(c, &tangent, &normal).unwrap();
    assert!(p.is_coordinate());
    assert!(p.matrices().iter().all(|m| m.is_zero()));
}

#[test]
fn non_involutive_frame_is_rejected() {
    let c = chart(1, 2);
    let t = 4;
    let x0 = Sx::var(0, 3, t);
    let one = Sx::one(3, t);
    let z = Sx::zero(3, t);
    // [∂y₁ + y₂∂x, ∂y₂] = −∂x leaves the tangent span.
    let v1 = PolyVectorField::new(vec![Sx::var(2, 3, t), one.clone(), z.clone()]).unwrap();
    let v2 = PolyVectorField::<GaussRat>::coordinate(2, 3, t);
    let w = PolyVectorField::new(vec![one.clone(), z.clone(), x0]).unwrap();
    assert!(matches!(bott_patch(c, &[v1, v2], &[w]), Err(foliation_core::Error::NonInvolutive(_))));
}

#[test]
fn transverse_jets_of_zero_connection() {
    let c = chart(1, 1);
    let p = ConnectionPatch::new(c, vec![SeriesMatrix::<GaussRat>::zeros(1, 1, 2, 5)]).unwrap();
    let j = transverse_jet_patch(&p, 1).unwrap();
    assert_eq!(j.rank(), 2);
    assert!(j.matrices()[0].is_zero());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn gauge_patches_are_flat_and_solved_exactly(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let (qd, d, r) = (1 + (seed % 2) as usize, 1 + ((seed / 2) % 2) as usize, 1 + ((seed / 4) % 3) as usize);
        let c = chart(qd, d);
        let g = random_gauge(&mut rng, c, r, 6, 2);
        let p = gauge_connection(c, &g).unwrap();
        prop_assert!(all_zero(&flatness_defect(&p).unwrap()));
        let f = flat_frame(&p).unwrap();
        prop_assert!(all_zero(&pfaffian_residual(&p, &f).unwrap()));
        let g0 = g.restrict_zero(&c.y_vars());
        let expect = (&g * &g0.inverse().unwrap()).truncate(p.order());
        prop_assert_eq!(f, expect);
    }

    #[test]
    fn pfaffian_solutions_are_linear(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let c = chart(1, 2);
        let r = 2;
        let p = gauge_connection(c, &random_gauge(&mut rng, c, r, 5, 2)).unwrap();
        let g1: Vec<Sx> = (0..r).map(|_| random_transverse(&mut rng, c, 5, 4)).collect();
        let g2: Vec<Sx> = (0..r).map(|_| random_transverse(&mut rng, c, 5, 4)).collect();
        let alpha = random::rational(&mut rng);
        let comb: Vec<Sx> = g1.iter().zip(&g2).map(|(a, b)| &a.scale(&alpha) + b).collect();
        let (s1, s2, s) = (solve_pfaffian(&p, &g1).unwrap(), solve_pfaffian(&p, &g2).unwrap(), solve_pfaffian(&p, &comb).unwrap());
        prop_assert_eq!(solve_pfaffian(&p, &g1).unwrap(), s1.clone());
        for i in 0..r {
            prop_assert_eq!(s[i].clone(), &s1[i].scale(&alpha) + &s2[i]);
        }
    }

    #[test]
    fn tensor_dual_determinant(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let c = chart(1, 1);
        let (g, h) = (random_gauge(&mut rng, c, 2, 5, 2), random_gauge(&mut rng, c, 2, 5, 2));
        let (pg, ph) = (gauge_connection(c, &g).unwrap(), gauge_connection(c, &h).unwrap());
        let t = tensor(&pg, &ph).unwrap();
        let direct = gauge_connection(c, &g.kron(&h)).unwrap();
        prop_assert_eq!(t.matrices(), direct.matrices());
        prop_assert_eq!(dual(&dual(&pg)), pg.clone());
        let det = determinant(&pg);
        prop_assert_eq!(det.matrices()[0][(0, 0)].clone(), pg.matrices()[0].trace());
        prop_assert!(all_zero(&flatness_defect(&dual(&pg)).unwrap()));
    }

    #[test]
    fn bott_patches_of_submersions_are_flat(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let (qd, d) = (1 + (seed % 2) as usize, 2);
        let c = chart(qd, d);
        let nv = c.nvars();
        let phi: Vec<Sx> = (0..qd)
            .map(|i| {
                let mut s = random::series(&mut rng, nv, 6, 3, 0.4);
                let mut e = vec![0; nv];
                e[i] = 1;
                s.set_coeff(&e, random::nonzero_rational(&mut rng));
                for j in 0..qd {
                    if j != i {
                        let mut e = vec![0; nv];
                        e[j] = 1;
                        s.set_coeff(&e, GaussRat::zero());
                    }
                }
                s
            })
            .collect();
        let (tangent, normal) = frames_from_submersion(c, &phi).unwrap();
        let p = bott_patch(c, &tangent, &normal).unwrap();
        prop_assert!(all_zero(&flatness_defect(&p).unwrap()));
        // A leaf-dependent change of tangent frame introduces structure functions.
        let t = tangent[0].order();
        let h = random::series_vanishing(&mut rng, nv, t, 2).add_constant(&GaussRat::one());
        let mixed: Vec<PolyVectorField<GaussRat>> = vec![
            tangent[0].clone(),
            PolyVectorField::new(
                tangent[1].components.iter().zip(&tangent[0].components).map(|(b, a)| &(&h * b) + a).collect(),
            ).unwrap(),
        ];
        let pm = bott_patch(c, &mixed, &normal).unwrap();
        prop_assert!(!pm.is_coordinate());
        let defect = flatness_defect(&pm).unwrap();
        let valid = defect[0].order().saturating_sub(1);
        prop_assert!(defect.iter().all(|m| m.is_zero_through(valid)));
    }

    #[test]
    fn bott_gauge_rule_for_rescaled_normal(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let c = chart(1, 1);
        let t = 6;
        let a = random::series(&mut rng, 2, t, 3, 0.3);
        let v = PolyVectorField::new(vec![a, Sx::one(2, t)]).unwrap();
        let w = PolyVectorField::<GaussRat>::coordinate(0, 2, t);
        let h = random::series_vanishing(&mut rng, 2, t, 3).add_constant(&random::nonzero_rational(&mut rng));
        let w2 = PolyVectorField::new(vec![h.clone(), Sx::zero(2, t)]).unwrap();
        let p = bott_patch(c, &[v.clone()], &[w]).unwrap();
        let p2 = bott_patch(c, &[v.clone()], &[w2]).unwrap();
        let shift = v.apply(&h).unwrap().try_div(&h.truncate(t - 1)).unwrap();
        let expect = &p.matrices()[0][(0, 0)] + &shift;
        let got = &p2.matrices()[0][(0, 0)];
        let valid = got.order().min(expect.order()).saturating_sub(1);
        prop_assert!((got - &expect).is_zero_through(valid));
    }

    #[test]
    fn transverse_jet_patch_carries_jets_of_flat_sections(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let (qd, r, k) = (1 + (seed % 2) as usize, 1 + ((seed / 2) % 2) as usize, 1 + ((seed / 4) % 2) as u32);
        let c = chart(qd, 1);
        let p = gauge_connection(c, &random_gauge(&mut rng, c, r, 7, 2)).unwrap();
        let jp = transverse_jet_patch(&p, k).unwrap();
        prop_assert_eq!(jp.rank(), r * count_up_to(qd, k));
        prop_assert!(all_zero(&flatness_defect(&jp).unwrap()));
        let g: Vec<Sx> = (0..r).map(|_| random_transverse(&mut rng, c, 7, 5)).collect();
        let f = solve_pfaffian(&p, &g).unwrap();
        let jv = transverse_jet_vector(c, &f, k).unwrap();
        let n = jv.len();
        let col = SeriesMatrix::from_fn(n, 1, |i, _| jv[i].clone());
        prop_assert!(all_zero(&pfaffian_residual(&jp, &col).unwrap()));
        // Leading block reproduces the patch one order lower.
        let lower = transverse_jet_patch(&p, k - 1).unwrap();
        let m = lower.rank();
        let t = jp.order();
        prop_assert_eq!(jp.matrices()[0].block(0, 0, m, m), lower.matrices()[0].truncate(t));
    }

    #[test]
    fn jet_patch_frame_matches_jets_of_flat_frame(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let c = chart(1, 1);
        let (r, k) = (2, 2);
        let p = gauge_connection(c, &random_gauge(&mut rng, c, r, 7, 2)).unwrap();
        let jp = transverse_jet_patch(&p, k).unwrap();
        let frame = flat_frame(&p).unwrap();
        let x = Sx::var(0, 2, frame.order());
        let mut cols = Vec::new();
        for i in 0..=k {
            for l in 0..r {
                let sec: Vec<Sx> = frame.column(l).iter().map(|f| &x.pow(i) * f).collect();
                cols.push(transverse_jet_vector(c, &sec, k).unwrap());
            }
        }
        let n = cols.len();
        let m = SeriesMatrix::from_fn(n, n, |a, b| cols[b][a].clone());
        let t = jp.order();
        let m0 = m.restrict_zero(&c.y_vars()).truncate(t);
        let jf = flat_frame(&jp).unwrap();
        prop_assert_eq!((&jf * &m0).truncate(t), m.truncate(t));
    }

    #[test]
    fn jet_patch_determinant_bookkeeping(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let c = chart(1, 1);
        let t = 7;
        let h = random::series_vanishing(&mut rng, 2, t, 3).add_constant(&random::nonzero_rational(&mut rng));
        let w = PolyVectorField::new(vec![h, random::series(&mut rng, 2, t, 2, 0.5)]).unwrap();
        let v = PolyVectorField::<GaussRat>::coordinate(1, 2, t);
        let p = bott_patch(c, &[v], &[w]).unwrap();
        let tr = determinant(&p).matrices()[0][(0, 0)].clone();
        for k in 1..=2u32 {
            let d = determinant(&transverse_jet_patch(&p, k).unwrap());
            let got = d.matrices()[0][(0, 0)].clone();
            prop_assert_eq!(got.clone(), tr.truncate(got.order()).scale(&GaussRat::from_i64(k as i64 + 1)));
        }
    }
}

#[test]
fn nilpotent_determinant_is_zero() {
    let c = chart(1, 1);
    let mut a = SeriesMatrix::<GaussRat>::zeros(2, 2, 2, 4);
    a[(0, 1)] = Sx::one(2, 4);
    let p = ConnectionPatch::new(c, vec![a]).unwrap();
    assert!(determinant(&p).matrices()[0].is_zero());
    let g = [Sx::one(2, 4), Sx::constant(q(1, 2), 2, 4)];
    assert_eq!(solve_pfaffian(&p, &g).unwrap()[0], &Sx::one(2, 4) + &Sx::var(1, 2, 4).scale(&q(1, 2)));
}
