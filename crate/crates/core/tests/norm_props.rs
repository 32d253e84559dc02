use dyadlab_core::grid::make_grid;
use dyadlab_core::martingale::maximal;
use dyadlab_core::norms::{
    bmo_dyadic, bmo_nondyadic, bmo_so, duality_pair, duality_pair_haar, h1_norm, lp_norm,
    BmoSoOptions,
};
use dyadlab_core::{rng, StepFunction, ValueSpace};
use proptest::prelude::*;

fn random_operator_fn(l: usize, n: usize, seed: u64) -> StepFunction {
    let g = make_grid(1, l, &[]).unwrap();
    let mut r = rng::substream(seed, "b", n as u64);
    let v = rng::gaussian_vec(&mut r, g.fine_count() * n * n);
    StepFunction::new(g, ValueSpace::euclidean_operator(n, n), v).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn bmo_chain(l in 1usize..=5, n in 1usize..=3, seed in any::<u64>()) {
        let b = random_operator_fn(l, n, seed);
        let opts = BmoSoOptions { sphere_points: Some(200), ascent_starts: 2, ascent_iterations: 40, seed };
        let so = bmo_so(&b, &opts).unwrap().value;
        let dy = bmo_dyadic(&b);
        let sup = lp_norm(&b, f64::INFINITY);
        prop_assert!(so <= dy + 1e-12);
        prop_assert!(dy <= 2.0 * sup + 1e-12);
    }

    #[test]
    fn shifted_lattices_are_monotone(l in 1usize..=4, seed in any::<u64>()) {
        let b = random_operator_fn(l, 2, seed);
        let one = bmo_nondyadic(&b, 1).unwrap();
        let two = bmo_nondyadic(&b, 2).unwrap();
        let four = bmo_nondyadic(&b, 4).unwrap();
        prop_assert!(two >= one - 1e-12 && four >= two - 1e-12);
        prop_assert!((one - bmo_dyadic(&b)).abs() <= 1e-12 || one >= bmo_dyadic(&b));
    }

    #[test]
    fn h1_dominates_l1_and_maximal_dominates(l in 1usize..=5, n in 1usize..=3, seed in any::<u64>()) {
        let g = make_grid(1, l, &[]).unwrap();
        let mut r = rng::substream(seed, "h", 0);
        let h = StepFunction::new(g, ValueSpace::euclidean_tensor(n, n), rng::gaussian_vec(&mut r, (1 << l) * n * n)).unwrap();
        prop_assert!(h1_norm(&h) >= lp_norm(&h, 1.0) - 1e-12);
        let m = maximal(&h);
        for (i, mv) in m.values().iter().enumerate() {
            prop_assert!(*mv >= h.space().norm(h.at(i)) - 1e-12);
        }
    }

    #[test]
    fn pairing_agrees_in_both_bases(l in 1usize..=5, n in 1usize..=3, seed in any::<u64>()) {
        let b = random_operator_fn(l, n, seed);
        let mut r = rng::substream(seed, "h", 1);
        let h = StepFunction::new(b.grid().clone(), ValueSpace::euclidean_tensor(n, n), rng::gaussian_vec(&mut r, (1 << l) * n * n)).unwrap();
        let direct = duality_pair(&b, &h).unwrap().pairing;
        let haar = duality_pair_haar(&b, &h).unwrap();
        prop_assert!((direct - haar).abs() <= 1e-10 * (1.0 + direct.abs()));
    }
}
