use foliation_core::ode::*;
use foliation_core::random;
use foliation_core::{GaussRat, Mat, Scalar, SeriesMatrix, TruncatedSeries};
use proptest::prelude::*;

type S1 = TruncatedSeries<GaussRat>;

fn uni(rng: &mut random::SeededRng, t: u32, deg: u32) -> S1 {
    random::series(rng, 1, t, deg, 0.3)
}

fn random_equation(rng: &mut random::SeededRng, r: usize, k: usize, t: u32) -> TransverseEquation<GaussRat> {
    let coeffs = (0..k).map(|_| SeriesMatrix::from_fn(r, r, |_, _| uni(rng, t, 3))).collect();
    TransverseEquation::new(coeffs).unwrap()
}

fn random_germ(rng: &mut random::SeededRng, t: u32) -> S1 {
    let mut f = random::series_vanishing(rng, 1, t, 4);
    f.set_coeff(&[1], random::nonzero_rational(rng));
    f
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn fundamental_basis_has_identity_jets(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let (r, k) = (1 + (seed % 2) as usize, 1 + ((seed / 2) % 3) as usize);
        let eq = random_equation(&mut rng, r, k, 8);
        let basis = fundamental_basis(&eq).unwrap();
        prop_assert_eq!(basis.len(), r * k);
        prop_assert_eq!(initial_jet_matrix(&eq, &basis).unwrap(), Mat::identity(r * k));
        for f in &basis {
            let res = eq.apply(f).unwrap();
            prop_assert!(res.iter().all(|c| c.is_zero()));
        }
    }

    #[test]
    fn solutions_are_flat_for_the_extension(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let (r, k) = (1 + (seed % 3) as usize, 1 + ((seed / 3) % 3) as usize);
        let eq = random_equation(&mut rng, r, k, 9);
        let ext = induced_extension(&eq);
        prop_assert_eq!(ext.size(), r * k);
        let jets = random::vector(&mut rng, r * k);
        let f = solve_ode(&eq, &jets).unwrap();
        let res = ext.kernel_residual(&f, k).unwrap();
        prop_assert!(res.iter().all(|c| c.is_zero()));
        let tr: S1 = (0..r).fold(S1::zero(1, eq.series_order()), |acc, i| &acc + &eq.coeffs()[k - 1][(i, i)]);
        prop_assert_eq!(ext.trace(), tr);
    }

    #[test]
    fn schwarzian_is_mobius_invariant(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let t = 9;
        let f = random_germ(&mut rng, t);
        let (al, be, ga) = (random::nonzero_rational(&mut rng), random::rational(&mut rng), random::rational(&mut rng));
        let de = random::nonzero_rational(&mut rng);
        prop_assume!(!(al.clone() * &de - be.clone() * &ga).is_zero());
        let m = mobius_germ(al, be, ga, de, t).unwrap();
        let mf = m.compose_polynomial(std::slice::from_ref(&f)).unwrap();
        prop_assert_eq!(schwarzian(&mf).unwrap(), schwarzian(&f).unwrap());
        prop_assert!(schwarzian(&m).unwrap().is_zero());
    }

    #[test]
    fn schwarzian_cocycle(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let (f1, f2) = (random_germ(&mut rng, 9), random_germ(&mut rng, 9));
        prop_assert!(cocycle_defect(&f1, &f2).unwrap().is_zero());
    }

    #[test]
    fn projective_round_trips(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let (a, b) = (uni(&mut rng, 8, 4), uni(&mut rng, 8, 4));
        let pd = ode_to_projective(&a, &b).unwrap();
        let back = projective_to_ode(&a, &pd.c).unwrap();
        prop_assert_eq!(back.clone(), b.truncate(back.order()));
        let c = uni(&mut rng, 7, 4);
        let b2 = projective_to_ode(&a, &c).unwrap();
        prop_assert_eq!(ode_to_projective(&a, &b2).unwrap().c, c.truncate(b2.order().min(7)));
    }

    #[test]
    fn ratio_of_solutions_has_schwarzian_c(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let t = 10;
        let (a, b) = (uni(&mut rng, t, 3), uni(&mut rng, t, 3));
        let eq = TransverseEquation::second_order(&a, &b).unwrap();
        let basis = fundamental_basis(&eq).unwrap();
        let theta = schwarzian_ratio(&basis[0][0], &basis[1][0]).unwrap();
        let c = ode_to_projective(&a, &b).unwrap().c;
        let o = theta.order().min(c.order());
        prop_assert_eq!(theta.truncate(o), c.truncate(o));
        // Any other basis gives the same ratio Schwarzian.
        let jets = random::vector(&mut rng, 4);
        prop_assume!(!(jets[0].clone() * &jets[3] - jets[1].clone() * &jets[2]).is_zero());
        let g1 = solve_ode(&eq, &[jets[0].clone(), jets[1].clone()]).unwrap();
        let g2 = solve_ode(&eq, &[jets[2].clone(), jets[3].clone()]).unwrap();
        prop_assert_eq!(schwarzian_ratio(&g1[0], &g2[0]).unwrap(), theta);
    }
}

#[test]
fn degenerate_equations_are_rejected() {
    let lead = SeriesMatrix::<GaussRat>::from_fn(1, 1, |_, _| S1::var(0, 1, 4));
    let a0 = SeriesMatrix::<GaussRat>::zeros(1, 1, 1, 4);
    assert!(matches!(
        TransverseEquation::with_leading(&lead, vec![a0]),
        Err(foliation_core::Error::NotMonic(_))
    ));
    let x = S1::var(0, 1, 6);
    assert!(matches!(schwarzian(&(&x * &x)), Err(foliation_core::Error::CriticalGerm)));
    let one = S1::one(1, 6);
    assert!(matches!(cocycle_defect(&x, &(&x + &one)), Err(foliation_core::Error::ConstantTerm)));
    assert!(matches!(schwarzian_ratio(&x, &x.scale(&GaussRat::from_i64(2))), Err(foliation_core::Error::DependentJets)));
}
