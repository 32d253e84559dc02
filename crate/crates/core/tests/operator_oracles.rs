use dyadlab_core::grid::make_grid;
use dyadlab_core::linalg::Matrix;
use dyadlab_core::martingale::SignMode;
use dyadlab_core::paraproduct::{
    lambda, materialize, pi, pi_adjoint, pi_star_adjoint, pi_star_dual, random_symbol,
    scalar_identity_oracle, OpSpec, Symbol,
};
use dyadlab_core::rbound::{hilbert_p2_oracle, rbound_estimate, OperatorFamily, RBoundOptions};
use dyadlab_core::value::{nuclear_norm, op_norm_induced, trace_pair, TensorValue};
use dyadlab_core::{rng, StepFunction, ValueSpace};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows, m.cols, &m.data)
}

fn random_fn(
    grid: &dyadlab_core::DyadicGrid,
    width: usize,
    seed: u64,
    label: &str,
) -> StepFunction {
    let mut r = rng::substream(seed, label, width as u64);
    StepFunction::new(
        grid.clone(),
        ValueSpace::euclidean(width),
        rng::gaussian_vec(&mut r, grid.fine_count() * width),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn paraproduct_adjoints(l in 1usize..=5, n in 1usize..=4, seed in any::<u64>()) {
        let g = make_grid(1, l, &[]).unwrap();
        let b = random_symbol(&g, n, seed, 0).unwrap();
        let f = random_fn(&g, n, seed, "f");
        let h = random_fn(&g, n, seed, "g");
        let scale = 1.0 + f.pair(&f).unwrap().sqrt() * h.pair(&h).unwrap().sqrt();
        let lhs = pi(&b, &f).unwrap().pair(&h).unwrap();
        let rhs = f.pair(&pi_adjoint(&b, &h).unwrap()).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale * (1.0 + lhs.abs()));
        let lhs = pi_star_adjoint(&b, &h).unwrap().pair(&f).unwrap();
        let rhs = h.pair(&pi_star_dual(&b, &f).unwrap()).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale * (1.0 + lhs.abs()));
    }

    #[test]
    fn lambda_transpose_is_lambda_of_transpose(l in 1usize..=4, n in 1usize..=3, seed in any::<u64>()) {
        let g = make_grid(1, l, &[]).unwrap();
        let b = random_symbol(&g, n, seed, 1).unwrap();
        let a = materialize(&OpSpec::Lambda(&b), &g).unwrap().matrix;
        let bt = b.transpose();
        let at = materialize(&OpSpec::Lambda(&bt), &g).unwrap().matrix;
        prop_assert!(a.transpose().max_abs_diff(&at) <= 1e-12);
    }

    #[test]
    fn lambda_is_linear_in_the_symbol(l in 1usize..=4, n in 1usize..=3, seed in any::<u64>(), alpha in -3.0..3.0f64) {
        let g = make_grid(1, l, &[]).unwrap();
        let b = random_symbol(&g, n, seed, 2).unwrap();
        let c = random_symbol(&g, n, seed, 3).unwrap();
        let combo = b.combine(alpha, &c, 1.0).unwrap();
        let lhs = materialize(&OpSpec::Lambda(&combo), &g).unwrap().matrix;
        let mb = materialize(&OpSpec::Lambda(&b), &g).unwrap().matrix;
        let mc = materialize(&OpSpec::Lambda(&c), &g).unwrap().matrix;
        let rhs: Vec<f64> = mb.data.iter().zip(&mc.data).map(|(x, y)| alpha * x + y).collect();
        prop_assert!(lhs.data.iter().zip(&rhs).all(|(x, y)| (x - y).abs() <= 1e-12 * (1.0 + y.abs())));
    }

    #[test]
    fn telescoping_oracle(l in 1usize..=5, seed in any::<u64>()) {
        let g = make_grid(1, l, &[]).unwrap();
        let b = random_fn(&g, 1, seed, "b");
        let f = random_fn(&g, 1, seed, "f");
        let h = random_fn(&g, 1, seed, "h");
        let sym = Symbol::new(b.clone()).unwrap();
        let lhs = lambda(&sym, &f).unwrap().pair(&h).unwrap();
        let rhs = scalar_identity_oracle(&b, &f, &h).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn materialized_norm_matches_dense_svd(l in 1usize..=4, n in 1usize..=3, seed in any::<u64>()) {
        let g = make_grid(1, l, &[]).unwrap();
        let b = random_symbol(&g, n, seed, 4).unwrap();
        let m = materialize(&OpSpec::Pi(&b), &g).unwrap().matrix;
        let ours = op_norm_induced(&m, 2.0, 2.0, 0, 0).lower;
        let theirs = to_na(&m).singular_values().max();
        prop_assert!((ours - theirs).abs() <= 1e-9 * (1.0 + theirs));
    }

    #[test]
    fn nuclear_norm_matches_nalgebra(rows in 1usize..=4, cols in 1usize..=4, seed in any::<u64>()) {
        let mut r = rng::substream(seed, "tensor", 0);
        let v = TensorValue::from_coefficients(cols, rows, rng::gaussian_vec(&mut r, rows * cols));
        let theirs = to_na(&v.coefficients).singular_values().sum();
        prop_assert!((nuclear_norm(&v) - theirs).abs() <= 1e-10 * (1.0 + theirs));
        let top = to_na(&v.coefficients).singular_values().max();
        prop_assert!(nuclear_norm(&v) >= top - 1e-12);
        let b = Matrix::from_rows(rows, cols, rng::gaussian_vec(&mut r, rows * cols));
        let pairing = trace_pair(&b, &v).unwrap();
        let bound = op_norm_induced(&b, 2.0, 2.0, 0, 0).upper * nuclear_norm(&v);
        prop_assert!(pairing.abs() <= bound + 1e-9);
    }

    #[test]
    fn rbound_collapse_and_scaling(len in 1usize..=8, n in 1usize..=6, seed in any::<u64>(), alpha in -2.0..2.0f64) {
        let mut r = rng::substream(seed, "family", 0);
        let ops: Vec<Matrix> = (0..len).map(|_| Matrix::from_rows(n, n, rng::gaussian_vec(&mut r, n * n))).collect();
        let fam = OperatorFamily::euclidean(ops).unwrap();
        let opts = RBoundOptions { restarts: 2, iterations: 10 };
        let est = rbound_estimate(&fam, 2.0, len.min(8), SignMode::Exact, seed, &opts).unwrap();
        let oracle = hilbert_p2_oracle(&fam).unwrap();
        prop_assert!((est.lower - oracle).abs() <= 1e-8 * (1.0 + oracle));
        let scaled = rbound_estimate(&fam.scaled(alpha), 2.0, len.min(8), SignMode::Exact, seed, &opts).unwrap();
        prop_assert!((scaled.lower - alpha.abs() * est.lower).abs() <= 1e-8 * (1.0 + est.lower));
    }
}

#[test]
fn subfamily_rbounds_are_smaller() {
    let mut r = rng::substream(7, "family", 1);
    let ops: Vec<Matrix> = (0..4)
        .map(|_| Matrix::from_rows(3, 3, rng::gaussian_vec(&mut r, 9)))
        .collect();
    let space = ValueSpace::Vector { n: 3, q: 3.0 };
    let fam = OperatorFamily::new(ops, space).unwrap();
    let opts = RBoundOptions::default();
    let whole = rbound_estimate(&fam, 3.0, 4, SignMode::Exact, 1, &opts).unwrap();
    for idx in [vec![0usize], vec![1, 2], vec![0, 2, 3]] {
        let sub = fam.subfamily(&idx).unwrap();
        let part = rbound_estimate(&sub, 3.0, idx.len(), SignMode::Exact, 1, &opts).unwrap();
        assert!(
            part.lower <= whole.lower * (1.0 + 1e-6),
            "{idx:?}: {} > {}",
            part.lower,
            whole.lower
        );
    }
    let single = fam.subfamily(&[1]).unwrap();
    let one = rbound_estimate(&single, 3.0, 1, SignMode::Exact, 1, &opts).unwrap();
    let direct = op_norm_induced(&single.operators[0], 3.0, 3.0, 20, 1);
    assert!(one.lower <= direct.upper + 1e-9);
    assert!((one.lower - direct.lower).abs() <= 1e-3 * direct.lower);
}
