mod common;

use common::{random_diffeo, Sx};
use foliation_core::jets::*;
use foliation_core::multi_index::MultiIndex;
use foliation_core::random;
use foliation_core::{q, GaussRat, SeriesMatrix};
use proptest::prelude::*;

#[test]
fn change_of_basis_matrices_are_inverse() {
    for n in 1..=3 {
        for k in 0..=5 {
            let ring = JetRing::full(n, k);
            let to2: SeriesMatrix<GaussRat> = ring.change_matrix(Basis::B2, 8);
            let to1 = ring.change_matrix(Basis::B1, 8);
            let id = SeriesMatrix::identity(ring.dim(), n, 8);
            assert_eq!(&to2 * &to1, id, "n={n} k={k}");
            assert_eq!(&to1 * &to2, id, "n={n} k={k}");
        }
    }
}

#[test]
fn jet_of_square_in_one_variable() {
    let x = Sx::var(0, 1, 6);
    let j = jet_of_function(&(&x * &x), 2, &[0]).unwrap();
    let expect = [&x * &x, x.scale(&q(2, 1)), Sx::one(1, 6)];
    for (c, e) in j.coeffs().iter().zip(&expect) {
        assert_eq!(*c, e.truncate(4));
    }
}

#[test]
fn symbols_fill_the_kernel_of_truncation() {
    for (n, k) in [(1, 1), (1, 3), (2, 2), (2, 3), (3, 2)] {
        let ring = JetRing::full(n, k);
        let point: Vec<GaussRat> = (0..n).map(|i| q(i as i64 + 2, 3)).collect();
        assert!(check_exactness(&ring, &point).unwrap().holds(), "n={n} k={k}");
    }
    let ring = JetRing::transverse(3, 2, 2).unwrap();
    assert!(check_exactness(&ring, &[q(1, 2), q(-1, 3), q(2, 1)]).unwrap().holds());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn jet_map_is_multiplicative(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let n = 1 + (seed % 2) as usize;
        let k = 1 + (seed % 3) as u32;
        let vars: Vec<usize> = (0..n).collect();
        let (f, g) = (random::series(&mut rng, n, 7, 7, 0.3), random::series(&mut rng, n, 7, 7, 0.3));
        let lhs = jet_of_function(&(&f * &g), k, &vars).unwrap();
        let rhs = jet_of_function(&f, k, &vars).unwrap().mul(&jet_of_function(&g, k, &vars).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn basis_change_round_trip(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let ring = JetRing::full(2, 3);
        let coeffs = (0..ring.dim()).map(|_| random::series(&mut rng, 2, 5, 5, 0.3)).collect();
        let e = JetElement::new(ring, Basis::B1, coeffs).unwrap();
        prop_assert_eq!(e.to_basis(Basis::B2).to_basis(Basis::B1), e);
    }

    #[test]
    fn prolongation_is_functorial(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let n = 1 + (seed % 2) as usize;
        let (phi, psi) = (random_diffeo(&mut rng, n, 6), random_diffeo(&mut rng, n, 6));
        let comp: Vec<Sx> = phi.iter().map(|p| p.compose(&psi).unwrap()).collect();
        let direct = prolong_map_1(&comp).unwrap();
        let chained = prolong_map_1(&phi).unwrap().compose(&prolong_map_1(&psi).unwrap()).unwrap();
        let t = direct.fiber.order().min(chained.fiber.order());
        prop_assert_eq!(direct.fiber.truncate(t), chained.fiber.truncate(t));
        for (a, b) in direct.base.iter().zip(&chained.base) {
            prop_assert_eq!(a.truncate(t), b.truncate(t));
        }
    }

    #[test]
    fn prolongation_transports_vector_field_jets(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let n = 1 + (seed % 2) as usize;
        let phi = random_diffeo(&mut rng, n, 6);
        let v: Vec<Sx> = (0..n).map(|_| random::series(&mut rng, n, 6, 4, 0.3)).collect();
        let data = prolong_map_1(&phi).unwrap();
        let jet = vector_field_jet(&v).unwrap();
        let fast = data.apply_to_jet(&jet).unwrap();
        let oracle = pushforward_jet(&phi, &v).unwrap();
        let t = fast[0].order().min(oracle[0].order());
        for (a, b) in fast.iter().zip(&oracle) {
            prop_assert_eq!(a.truncate(t), b.truncate(t));
        }
    }

    #[test]
    fn transverse_jets_ignore_leaf_derivatives(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let f = random::series(&mut rng, 3, 6, 6, 0.3);
        let j = jet_of_function(&f, 2, &[0]).unwrap();
        prop_assert_eq!(j.ring().dim(), 3);
        let second = j.coeff(&MultiIndex(vec![2])).unwrap();
        let expect = f.diff(0).unwrap().diff(0).unwrap().scale(&q(1, 2));
        prop_assert_eq!(second.clone(), expect.truncate(4));
    }
}
