use rayon::prelude::*;

use crate::error::Result;
use crate::linalg::norm_inf;
use crate::measurement::{measure, NoiseModel};
use crate::operators::CirculantOperator;
use crate::priors::{sample_signal, GenerativePrior, SignalSpec};
use crate::rng::{self, tag};

/// One draw of `‖(1/m) Ãᵀ b − λ D_ξ x*‖∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationReport {
    pub trial: usize,
    pub n: usize,
    pub m: usize,
    pub residual_linf: f64,
    /// `√((t + log n)/m)` with `t = log n`.
    pub bound_scale: f64,
    pub ratio: f64,
    pub lambda: f64,
    /// `‖x*‖∞` actually achieved.
    pub rho: f64,
    /// `ρ · m · (t + log m)`, the quantity the theory wants small.
    pub rho_product: f64,
}

/// `√(2 log n / m)`
pub fn bound_scale(n: usize, m: usize) -> f64 {
    (2.0 * (n as f64).ln() / m as f64).sqrt()
}

/// Measures `x_star` (already ℓ∞-flattened by the caller) and reports the
/// concentration residual with the model's closed-form gain.
pub fn lemma1_residual(
    op: &CirculantOperator,
    x_star: &[f64],
    model: &NoiseModel,
    stream: u64,
) -> Result<ConcentrationReport> {
    lemma1_residual_with_gain(op, x_star, model, model.lambda(), stream)
}

/// As [`lemma1_residual`] with an explicit gain `lambda`.
pub fn lemma1_residual_with_gain(
    op: &CirculantOperator,
    x_star: &[f64],
    model: &NoiseModel,
    lambda: f64,
    stream: u64,
) -> Result<ConcentrationReport> {
    let (n, m) = (op.n(), op.m());
    let b = measure(op, x_star, model, stream)?;
    let correlation = op.apply_adjoint(&b, false)?;
    let residual_linf = correlation
        .iter()
        .zip(x_star.iter().zip(op.spec().xi()))
        .map(|(c, (x, s))| (c / m as f64 - lambda * s * x).abs())
        .fold(0.0, f64::max);
    let scale = bound_scale(n, m);
    let rho = norm_inf(x_star);
    let t = (n as f64).ln();
    Ok(ConcentrationReport {
        trial: stream as usize,
        n,
        m,
        residual_linf,
        bound_scale: scale,
        ratio: residual_linf / scale,
        lambda,
        rho,
        rho_product: rho * m as f64 * (t + (m as f64).ln()),
    })
}

/// `trials` independent draws of operator, one-sparse signal, Hadamard
/// flattening and noise at `(n, m)`. `n` must be a power of two.
pub fn lemma1_experiment(
    n: usize,
    m: usize,
    model: &NoiseModel,
    trials: usize,
    seed: u64,
) -> Result<Vec<ConcentrationReport>> {
    let prior = GenerativePrior::sparse(n, 1)?;
    let spec = SignalSpec {
        prior: &prior,
        enforce_linf: None,
        precondition_with_hadamard: true,
    };
    (0..trials)
        .into_par_iter()
        .map(|trial| {
            let t = trial as u64;
            let op = CirculantOperator::random(n, m, rng::derive_seed(seed, &[tag::OPERATOR, t]))?;
            let signal = sample_signal(&spec, &mut rng::stream(seed, &[tag::SIGNAL, t]))?;
            let noise = NoiseModel {
                seed: rng::derive_seed(seed, &[tag::NOISE, model.seed]),
                ..*model
            };
            lemma1_residual(&op, &signal.effective(), &noise, t)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::median;

    #[test]
    fn pure_noise_limit_keeps_bound_finite() {
        let op = CirculantOperator::random(256, 64, 1).unwrap();
        let x = rng::unit_vec(&mut rng::stream(2, &[]), 256);
        let model = NoiseModel::bit_flip(0.5 - 1e-12, 3).unwrap();
        let report = lemma1_residual(&op, &x, &model, 0).unwrap();
        assert!(report.lambda < 1e-10);
        let b = measure(&op, &x, &model, 0).unwrap();
        let plain = norm_inf(&op.apply_adjoint(&b, false).unwrap()) / 64.0;
        assert!((report.residual_linf - plain).abs() < 1e-9);
        assert!(report.ratio.is_finite());
    }

    #[test]
    fn residual_shrinks_with_more_measurements() {
        let model = NoiseModel::bit_flip(0.1, 0).unwrap();
        let small: Vec<f64> = lemma1_experiment(256, 32, &model, 20, 4)
            .unwrap()
            .iter()
            .map(|r| r.residual_linf)
            .collect();
        let large: Vec<f64> = lemma1_experiment(256, 256, &model, 20, 4)
            .unwrap()
            .iter()
            .map(|r| r.residual_linf)
            .collect();
        assert!(median(&large) < median(&small));
    }
}
