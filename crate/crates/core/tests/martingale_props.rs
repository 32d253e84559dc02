use dyadlab_core::grid::make_grid;
use dyadlab_core::martingale::{
    diff, doob_check, expect, haar_analysis, haar_synthesis, random_sign_norm, sign_transform,
    umd_transform_norm, SignVector, UmdOptions,
};
use dyadlab_core::norms::lp_norm;
use dyadlab_core::{StepFunction, ValueSpace};
use proptest::prelude::*;

fn grid_and_values(
    max_levels: usize,
    width: usize,
) -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (1usize..=2, 1usize..=max_levels).prop_flat_map(move |(d, l)| {
        let l = if d == 2 { l.min(3) } else { l };
        prop::collection::vec(-5.0..5.0f64, (1usize << (d * l)) * width)
            .prop_map(move |v| (d, l, v))
    })
}

fn step(d: usize, l: usize, width: usize, values: Vec<f64>) -> StepFunction {
    let g = make_grid(d, l, &[]).unwrap();
    StepFunction::new(g, ValueSpace::euclidean(width), values).unwrap()
}

fn max_diff(a: &StepFunction, b: &StepFunction) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conditional_expectations_compose((d, l, v) in grid_and_values(5, 2)) {
        let f = step(d, l, 2, v);
        for j in 0..=l {
            for k in 0..=l {
                let lhs = expect(&expect(&f, j).unwrap(), k).unwrap();
                let rhs = expect(&f, j.min(k)).unwrap();
                prop_assert!(max_diff(&lhs, &rhs) <= 1e-12);
            }
        }
    }

    #[test]
    fn differences_are_orthogonal_projections((d, l, v) in grid_and_values(5, 1)) {
        let f = step(d, l, 1, v);
        let zero = StepFunction::zeros(f.grid(), *f.space());
        let mut total = zero.clone();
        for j in 0..=l {
            let dj = diff(&f, j).unwrap();
            total = total.combine(1.0, &dj, 1.0).unwrap();
            for k in 1..=l {
                let lhs = diff(&dj, k).unwrap();
                let rhs = if j == k { dj.clone() } else { zero.clone() };
                prop_assert!(max_diff(&lhs, &rhs) <= 1e-12);
            }
        }
        prop_assert!(max_diff(&total, &f) <= 1e-12);
    }

    #[test]
    fn expectation_is_self_adjoint((d, l, v) in grid_and_values(4, 1), seed in any::<u64>()) {
        let f = step(d, l, 1, v.clone());
        let w: Vec<f64> = v.iter().enumerate().map(|(i, x)| ((i as u64 ^ seed) % 7) as f64 - 3.0 + 0.5 * x).collect();
        let g = step(d, l, 1, w);
        for k in 0..=l {
            let a = expect(&f, k).unwrap().pair(&g).unwrap();
            let b = f.pair(&expect(&g, k).unwrap()).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn sign_transforms_are_isometries_at_p2((d, l, v) in grid_and_values(5, 3), bits in any::<u64>()) {
        let f = step(d, l, 3, v);
        let eps = SignVector::from_bits(bits, l + 1);
        let t = sign_transform(&f, &eps, false).unwrap();
        prop_assert!((lp_norm(&t, 2.0) - lp_norm(&f, 2.0)).abs() <= 1e-12 * (1.0 + lp_norm(&f, 2.0)));
    }

    #[test]
    fn haar_expansion_round_trips((d, l, v) in grid_and_values(5, 2)) {
        let g = make_grid(d, l, &[]).unwrap();
        let e = haar_analysis(&g, 2, &v);
        let back = haar_synthesis(&g, &e);
        prop_assert!(back.iter().zip(&v).all(|(a, b)| (a - b).abs() <= 1e-12));
    }

    #[test]
    fn doob_inequality(l in 1usize..=6, v in prop::collection::vec(-3.0..3.0f64, 64), p in prop::sample::select(vec![1.5, 2.0, 3.0])) {
        let f = step(1, l, 1, v[..1 << l].to_vec());
        prop_assert!(doob_check(&f, p).unwrap().pass);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn kahane_contraction(
        l in 1usize..=5,
        v in prop::collection::vec(-3.0..3.0f64, 32),
        a in prop::collection::vec(-1.0..1.0f64, 6),
        p in prop::sample::select(vec![1.0, 2.0, 3.0]),
    ) {
        let f = step(1, l, 1, v[..1 << l].to_vec());
        let ones = vec![1.0; l + 1];
        let lhs = random_sign_norm(&f, &a[..=l], p, 1.0).unwrap();
        let rhs = random_sign_norm(&f, &ones, p, 1.0).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-12);
    }
}

#[test]
fn transform_norm_is_symmetric_in_dual_exponents() {
    let g = make_grid(1, 3, &[]).unwrap();
    let opts = UmdOptions {
        restarts: 6,
        iterations: 300,
        ..UmdOptions::default()
    };
    for (p, q) in [(1.5, 3.0), (4.0, 4.0 / 3.0)] {
        let a = umd_transform_norm(p, &ValueSpace::scalar(), &g, &opts)
            .unwrap()
            .estimate;
        let b = umd_transform_norm(q, &ValueSpace::scalar(), &g, &opts)
            .unwrap()
            .estimate;
        assert!((a - b).abs() <= 0.02 * a.max(b), "{p}: {a} vs {q}: {b}");
        let pstar = p.max(q) - 1.0;
        assert!(a <= pstar + 1e-6 && b <= pstar + 1e-6);
    }
}
