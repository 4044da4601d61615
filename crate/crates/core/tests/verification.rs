use onebit_core::measurement::monte_carlo_gain;
use onebit_core::rng;
use onebit_core::verification::*;
use onebit_core::{CirculantOperator, NoiseModel, PriorSpec};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gram_schmidt_invariants(n in 2usize..96, frac in 0.05f64..1.0, seed in any::<u64>()) {
        let m = ((n as f64 * frac) as usize).clamp(1, n);
        let x = rng::unit_vec(&mut rng::stream(seed, &[1]), n);
        let xi = rng::rademacher_vec(&mut rng::stream(seed, &[2]), n);
        let r = orthogonality_diagnostic(&x, &xi, m).unwrap();
        prop_assert!(r.reconstruction_defect <= 1e-10);
        prop_assert!(r.orthogonality_defect <= 1e-8);
        prop_assert!(r.beta_measured >= 0.0);
        let d = shift_decomposition(&x, &xi, m).unwrap();
        for s in &d.shifts {
            prop_assert!((onebit_core::linalg::norm2(s) - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn identical_pairs_satisfy_srec(seed in any::<u64>()) {
        let op = CirculantOperator::random(64, 16, seed).unwrap();
        let x = rng::unit_vec(&mut rng::stream(seed, &[3]), 64);
        prop_assert!(srec_check_pairs(&op, vec![(x.clone(), x)], 0.5, 0.05).unwrap().passes());
    }
}

#[test]
fn monte_carlo_gain_gives_consistent_residual() {
    let n = 256;
    let model = NoiseModel::bit_flip(0.1, 1).unwrap();
    let (mc, stderr) = monte_carlo_gain(&model, 1_000_000, &mut rng::stream(4, &[]));
    let op = CirculantOperator::random(n, 128, 5).unwrap();
    let mut x = vec![0.0; n];
    x[0] = 1.0;
    let h = onebit_core::HadamardPreconditioner::random(n, 6).unwrap();
    let x = h.apply(&x).unwrap();
    let closed = lemma1_residual(&op, &x, &model, 0).unwrap();
    let estimated = lemma1_residual_with_gain(&op, &x, &model, mc, 0).unwrap();
    let rho = onebit_core::linalg::norm_inf(&x);
    // the two residuals differ by at most |Δλ| ‖x‖∞
    assert!((closed.residual_linf - estimated.residual_linf).abs() <= 3.0 * stderr * rho + 1e-12);
}

#[test]
fn impulse_is_exactly_orthogonal_at_large_n() {
    let mut x = vec![0.0; 4096];
    x[17] = 1.0;
    for r in orthogonality_experiment(&x, 64, 10, 3).unwrap() {
        assert_eq!(r.beta_measured, 0.0);
    }
}

#[test]
fn srec_holds_on_linear_range_at_full_rows() {
    let prior = PriorSpec::NormalizedLinear {
        n: 128,
        k: 3,
        radius: 1.0,
        seed: 1,
    }
    .build()
    .unwrap();
    let op = CirculantOperator::random(128, 128, 2).unwrap();
    let r = srec_check(&op, &prior, 200, 0.5, 0.05, &mut rng::stream(3, &[])).unwrap();
    assert!(r.passes(), "{:?}", r.violations.first());
}

#[test]
fn corruption_beyond_diameter_saturates() {
    let base = onebit_core::ProblemSpec {
        n: 64,
        m: 64,
        prior: PriorSpec::NormalizedLinear {
            n: 64,
            k: 3,
            radius: 1.0,
            seed: 1,
        },
        noise: NoiseModel::noiseless(),
        corruption: Default::default(),
        decoder: Default::default(),
        method: Default::default(),
        precondition: false,
        enforce_linf: None,
    };
    // ς/λ ≥ 2
    let sweep = corruption_sweep(&base, &[0.0, 1.8], 12, 4).unwrap();
    assert!(sweep[1].varsigma / sweep[1].lambda >= 2.0);
    assert!(sweep.iter().all(|r| r.median <= 2.0 + 1e-9));
    assert!(sweep[1].median > sweep[0].median);
}
