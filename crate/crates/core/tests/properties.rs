use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ttexp::als::AlsSolver;
use ttexp::basis::{hermite_eval, multiply_coeffs};
use ttexp::galerkin::{assemble_b, assemble_w, ExponentTT, GalerkinSystem, Weights};
use ttexp::tt::TTTensor;

fn random_tt(dims: &[usize], rank: usize, seed: u64) -> TTTensor {
    let m = dims.len();
    let ranks: Vec<usize> = (0..=m).map(|k| if k == 0 || k == m { 1 } else { rank }).collect();
    TTTensor::random(dims, &ranks, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn dense_dist(a: &TTTensor, b: &TTTensor) -> f64 {
    let (x, y) = (a.to_dense().unwrap().data, b.to_dense().unwrap().data);
    x.iter().zip(&y).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn rounding_meets_tolerance(
        dims in prop::collection::vec(2usize..5, 2..5),
        rank in 1usize..5,
        tol in 1e-6f64..0.5,
        seed in any::<u64>(),
    ) {
        // a second, nearly parallel summand makes the spectrum non-trivial
        let a = random_tt(&dims, rank, seed);
        let t = a.add(&random_tt(&dims, rank, seed ^ 1).scale(0.05)).unwrap();
        let r = t.round(tol, None);
        let nrm = t.norm();
        prop_assert!(dense_dist(&t, &r) <= tol * nrm * (1.0 + 1e-10) + 1e-13 * nrm);
        for (k, (&rk, &tk)) in r.ranks().iter().zip(&t.ranks()).enumerate() {
            prop_assert!(rk <= tk, "bond {}", k);
        }
        let exact = t.round(0.0, None);
        prop_assert!(dense_dist(&t, &exact) <= 1e-12 * nrm);
    }

    #[test]
    fn capped_rounding_respects_cap(
        dims in prop::collection::vec(2usize..5, 2..5),
        cap in 1usize..3,
        seed in any::<u64>(),
    ) {
        let t = random_tt(&dims, 4, seed);
        prop_assert!(t.round(0.0, Some(cap)).max_rank() <= cap);
    }

    #[test]
    fn product_of_coefficients_matches_pointwise_product(
        d in 2usize..5,
        seed in any::<u64>(),
        y in prop::collection::vec(-2.0f64..2.0, 2),
    ) {
        let u = random_tt(&[d, d], 2, seed);
        let v = random_tt(&[d, d], 2, seed.wrapping_add(7));
        let p = multiply_coeffs(&u, &v, 2 * d - 1).unwrap();
        let rows = |n: usize| y.iter().map(|&x| hermite_eval(n, x).unwrap()).collect::<Vec<_>>();
        let lhs = p.evaluate(&rows(2 * d - 1)).unwrap();
        let rhs = u.evaluate(&rows(d)).unwrap() * v.evaluate(&rows(d)).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn assembled_ranks_respect_bounds(r in 1usize..4, m in 3usize..7, seed in any::<u64>()) {
        let h = ExponentTT::new(random_tt(&vec![3; m], r, seed), None).unwrap();
        let w = assemble_w(&h, 3, Weights::default()).unwrap();
        let b = assemble_b(&h, 3, Weights::default()).unwrap();
        prop_assert!(w.max_rank() <= 2 * (r + 1) * (r + 1) + 1);
        prop_assert!(b.max_rank() <= 2 * r * (r + 1));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    // Each local solve minimizes the quadratic functional over one core, so
    // the recorded functional values never increase.
    #[test]
    fn als_functional_is_monotone(seed in any::<u64>(), m in 2usize..4, rank in 1usize..4) {
        let h = ExponentTT::new(random_tt(&vec![3; m], 2, seed).scale(0.3), None).unwrap();
        let sys = GalerkinSystem::assemble(&h, 4, Weights::default()).unwrap();
        let u0 = random_tt(&sys.ansatz_dims, rank, seed.wrapping_add(1));
        let mut s = AlsSolver::new(&sys.w, &sys.b, u0).unwrap();
        for _ in 0..3 {
            s.sweep().unwrap();
        }
        let j = s.objective();
        prop_assert!(!j.is_empty());
        for pair in j.windows(2) {
            prop_assert!(pair[1] <= pair[0] + 1e-10 * pair[0].abs().max(1.0), "{:?}", pair);
        }
    }
}
