use onebit_core::linalg::{dot, norm2};
use onebit_core::operators::fwht_inplace;
use onebit_core::rng;
use onebit_core::{
    CirculantOperator, CirculantSpec, DenseOperator, HadamardPreconditioner, SensingOperator, StackedCirculant,
};
use proptest::prelude::*;

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm2(&diff) / norm2(b).max(f64::MIN_POSITIVE)
}

fn dims() -> impl Strategy<Value = (usize, usize, u64)> {
    (1usize..200).prop_flat_map(|n| (Just(n), 1..=n, any::<u64>()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn forward_and_adjoint_match_dense_oracle((n, m, seed) in dims()) {
        let op = CirculantOperator::random(n, m, seed).unwrap();
        let dense = DenseOperator::from_circulant(op.spec());
        let mut s = rng::stream(seed, &[1]);
        let x = rng::gaussian_vec(&mut s, n);
        let b = rng::gaussian_vec(&mut s, m);
        prop_assert!(rel_err(&op.forward(&x).unwrap(), &dense.forward(&x).unwrap()) <= 1e-10);
        prop_assert!(rel_err(&op.adjoint(&b).unwrap(), &dense.adjoint(&b).unwrap()) <= 1e-10);
    }

    #[test]
    fn adjoint_identity((n, m, seed) in dims()) {
        let op = CirculantOperator::random(n, m, seed).unwrap();
        let mut s = rng::stream(seed, &[2]);
        let x = rng::gaussian_vec(&mut s, n);
        let b = rng::gaussian_vec(&mut s, m);
        let lhs = dot(&op.forward(&x).unwrap(), &b);
        let rhs = dot(&x, &op.adjoint(&b).unwrap());
        prop_assert!((lhs - rhs).abs() <= 1e-8 * norm2(&x) * norm2(&b));
    }

    #[test]
    fn adjoint_without_sign_flips_drops_xi((n, m, seed) in dims()) {
        let op = CirculantOperator::random(n, m, seed).unwrap();
        let b = rng::gaussian_vec(&mut rng::stream(seed, &[3]), m);
        let plain = op.apply_adjoint(&b, false).unwrap();
        let flipped = op.apply_adjoint(&b, true).unwrap();
        for ((p, f), s) in plain.iter().zip(&flipped).zip(op.spec().xi()) {
            prop_assert!((p * s - f).abs() <= 1e-12 * (1.0 + p.abs()));
        }
    }

    #[test]
    fn stacked_operator_matches_dense_blocks(n in 1usize..40, extra in 0usize..90, seed in any::<u64>()) {
        let m = n + extra;
        let op = StackedCirculant::random(n, m, seed).unwrap();
        let x = rng::gaussian_vec(&mut rng::stream(seed, &[4]), n);
        let mut expected = Vec::new();
        for block in op.blocks() {
            expected.extend(DenseOperator::from_circulant(block.spec()).forward(&x).unwrap());
        }
        prop_assert_eq!(expected.len(), m);
        prop_assert!(rel_err(&op.forward(&x).unwrap(), &expected) <= 1e-10);
    }

    #[test]
    fn hadamard_is_orthogonal(log_n in 0u32..11, seed in any::<u64>()) {
        let n = 1usize << log_n;
        let h = HadamardPreconditioner::random(n, seed).unwrap();
        let x = rng::gaussian_vec(&mut rng::stream(seed, &[5]), n);
        let y = h.apply(&x).unwrap();
        prop_assert!((norm2(&y) - norm2(&x)).abs() <= 1e-10 * norm2(&x).max(1.0));
        prop_assert!(rel_err(&h.adjoint(&y).unwrap(), &x) <= 1e-12);
    }

    #[test]
    fn fwht_twice_is_n_times_identity(log_n in 0u32..10, seed in any::<u64>()) {
        let n = 1usize << log_n;
        let x = rng::gaussian_vec(&mut rng::stream(seed, &[6]), n);
        let mut y = x.clone();
        fwht_inplace(&mut y);
        fwht_inplace(&mut y);
        let scaled: Vec<f64> = y.iter().map(|v| v / n as f64).collect();
        prop_assert!(rel_err(&scaled, &x) <= 1e-12);
    }
}

#[test]
fn explicit_generator_reproduces_dense_product() {
    let g = vec![0.5, -1.0, 2.0, 0.25, 1.5];
    let xi = vec![1.0, -1.0, -1.0, 1.0, 1.0];
    let spec = CirculantSpec::from_parts(g.clone(), xi.clone(), 3).unwrap();
    let op = CirculantOperator::new(spec).unwrap();
    let x = [1.0, 2.0, -1.0, 0.5, 3.0];
    let expected: Vec<f64> = (0..3)
        .map(|i| (0..5).map(|j| g[(j + 5 - i) % 5] * xi[j] * x[j]).sum())
        .collect();
    assert!(rel_err(&op.forward(&x).unwrap(), &expected) < 1e-14);
}
