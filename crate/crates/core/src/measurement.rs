//! Quantization models `θ`, their gains `λ = E[θ(g) g]`, measurement
//! generation and ℓ₂-bounded sign-flip corruption.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Open01, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::{norm2, sign};
use crate::operators::SensingOperator;
use crate::rng::{self, StreamRng};

/// Gauss–Hermite nodes used for the logit gain.
pub const GAUSS_HERMITE_NODES: usize = 80;

/// Observation noise applied by `θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseKind {
    /// `θ(x) = τ sign(x)` with `P(τ = −1) = p`.
    BitFlip { p: f64 },
    /// `θ(x) = sign(x + e)`, `e ~ N(0, σ²)`.
    Gaussian { sigma: f64 },
    /// `θ(x) = sign(x + e)`, `e` standard logistic.
    Logit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    #[serde(flatten)]
    pub kind: NoiseKind,
    #[serde(default)]
    pub seed: u64,
}

impl NoiseModel {
    pub fn new(kind: NoiseKind, seed: u64) -> Result<Self> {
        let model = Self { kind, seed };
        model.validate()?;
        Ok(model)
    }

    pub fn bit_flip(p: f64, seed: u64) -> Result<Self> {
        Self::new(NoiseKind::BitFlip { p }, seed)
    }

    pub fn gaussian(sigma: f64, seed: u64) -> Result<Self> {
        Self::new(NoiseKind::Gaussian { sigma }, seed)
    }

    pub fn logit(seed: u64) -> Self {
        Self {
            kind: NoiseKind::Logit,
            seed,
        }
    }

    pub fn noiseless() -> Self {
        Self {
            kind: NoiseKind::BitFlip { p: 0.0 },
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            NoiseKind::BitFlip { p } if !(0.0..0.5).contains(&p) => Err(Error::Config(format!(
                "bit-flip probability must lie in [0, 1/2), got {p}"
            ))),
            NoiseKind::Gaussian { sigma } if !(sigma >= 0.0 && sigma.is_finite()) => {
                Err(Error::Config(format!("Gaussian noise level must be >= 0, got {sigma}")))
            }
            _ => Ok(()),
        }
    }

    /// Quantization gain `λ = E[θ(g) g]`.
    pub fn lambda(&self) -> f64 {
        match self.kind {
            NoiseKind::BitFlip { p } => (1.0 - 2.0 * p) * (2.0 / PI).sqrt(),
            NoiseKind::Gaussian { sigma } => (2.0 / (PI * (1.0 + sigma * sigma))).sqrt(),
            NoiseKind::Logit => logit_gain(),
        }
    }

    /// Applies `θ` to one pre-quantization value.
    pub fn theta<R: Rng + ?Sized>(&self, z: f64, rng: &mut R) -> f64 {
        match self.kind {
            NoiseKind::BitFlip { p } => {
                let s = sign(z);
                if p > 0.0 && rng.random::<f64>() < p {
                    -s
                } else {
                    s
                }
            }
            NoiseKind::Gaussian { sigma } => {
                if sigma == 0.0 {
                    sign(z)
                } else {
                    sign(z + sigma * rng.sample::<f64, _>(StandardNormal))
                }
            }
            NoiseKind::Logit => {
                let u: f64 = rng.sample(Open01);
                sign(z + (u / (1.0 - u)).ln())
            }
        }
    }

    /// Quantizes `z` with noise drawn from `rng`.
    pub fn quantize_with<R: Rng + ?Sized>(&self, z: &[f64], rng: &mut R) -> Vec<f64> {
        z.iter().map(|&v| self.theta(v, rng)).collect()
    }

    /// Quantizes `z` with the noise stream keyed by `(seed, stream)`.
    pub fn quantize(&self, z: &[f64], stream: u64) -> Vec<f64> {
        self.quantize_with(z, &mut self.rng(stream))
    }

    pub fn rng(&self, stream: u64) -> StreamRng {
        rng::stream(self.seed, &[rng::tag::NOISE, stream])
    }
}

/// `λ` for the given model; see [`NoiseModel::lambda`].
pub fn lambda_of(model: &NoiseModel) -> f64 {
    model.lambda()
}

/// `½ E[sech²(g/2)]` by Gauss–Hermite quadrature.
pub fn logit_gain() -> f64 {
    gauss_hermite_expectation(GAUSS_HERMITE_NODES, |g| {
        let c = (g / 2.0).cosh();
        0.5 / (c * c)
    })
}

/// `E[f(g)]` for `g ~ N(0, 1)` using an `nodes`-point Gauss–Hermite rule
/// (probabilists' weight), nodes from the Golub–Welsch eigenproblem.
pub fn gauss_hermite_expectation(nodes: usize, f: impl Fn(f64) -> f64) -> f64 {
    let jacobi = nalgebra::DMatrix::from_fn(nodes, nodes, |i, j| {
        if i + 1 == j {
            (j as f64).sqrt()
        } else if j + 1 == i {
            (i as f64).sqrt()
        } else {
            0.0
        }
    });
    let eig = nalgebra::SymmetricEigen::new(jacobi);
    let mut terms: Vec<(f64, f64)> = (0..nodes)
        .map(|k| {
            let v0 = eig.eigenvectors[(0, k)];
            (eig.eigenvalues[k], v0 * v0)
        })
        .collect();
    // deterministic summation order
    terms.sort_by(|a, b| a.0.total_cmp(&b.0));
    terms.iter().map(|&(x, w)| w * f(x)).sum()
}

/// Monte-Carlo estimate of `E[θ(g) g]`: `(mean, standard error)`.
pub fn monte_carlo_gain<R: Rng + ?Sized>(model: &NoiseModel, draws: usize, rng: &mut R) -> (f64, f64) {
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..draws {
        let g: f64 = rng.sample(StandardNormal);
        let v = model.theta(g, rng) * g;
        sum += v;
        sum_sq += v * v;
    }
    let n = draws as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Tolerance on `|‖x*‖₂ − 1|` accepted by [`measure`].
pub const UNIT_NORM_TOL: f64 = 1e-9;

/// `b = θ(A x*)` with noise from stream `stream` of the model.
pub fn measure<A: SensingOperator + ?Sized>(
    op: &A,
    x_star: &[f64],
    model: &NoiseModel,
    stream: u64,
) -> Result<Vec<f64>> {
    let norm = norm2(x_star);
    if (norm - 1.0).abs() > UNIT_NORM_TOL {
        return Err(Error::Precondition(format!("signal must have unit norm, got {norm}")));
    }
    let z = op.forward(x_star)?;
    Ok(model.quantize(&z, stream))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CorruptionStrategy {
    #[default]
    RandomFlips,
    /// Flip the entries with the smallest `|⟨a_i, x*⟩|`.
    SmallestMarginFlips,
    /// Flip the entries with the largest `|⟨a_i, x*⟩|`, which removes the
    /// most correlation with `x*`.
    LargestMarginFlips,
}

/// Post-quantization tampering with `(1/√m)‖b̃ − b‖₂ ≤ ς`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct CorruptionBudget {
    pub varsigma: f64,
    #[serde(default)]
    pub strategy: CorruptionStrategy,
}

impl CorruptionBudget {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn new(varsigma: f64, strategy: CorruptionStrategy) -> Result<Self> {
        let budget = Self { varsigma, strategy };
        budget.validate()?;
        Ok(budget)
    }

    pub fn validate(&self) -> Result<()> {
        if self.varsigma >= 0.0 && self.varsigma.is_finite() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "corruption budget must be >= 0, got {}",
                self.varsigma
            )))
        }
    }

    /// `⌊m ς² / 4⌋`; each flip of a ±1 entry adds 4 to `‖b̃ − b‖₂²`.
    pub fn flip_count(&self, m: usize) -> usize {
        let exact = m as f64 * self.varsigma * self.varsigma / 4.0;
        // absorb representation error such as 0.2² · 100 / 4 = 1.0000000000000002
        (exact + 1e-9).floor() as usize
    }
}

/// Flips `⌊m ς² / 4⌋` entries of `b`. `margins` (the pre-quantization
/// values `⟨a_i, x*⟩`) are required by the margin-based strategies.
pub fn adversarially_corrupt(
    b: &[f64],
    budget: &CorruptionBudget,
    margins: Option<&[f64]>,
    rng: &mut StreamRng,
) -> Result<Vec<f64>> {
    budget.validate()?;
    let m = b.len();
    let flips = budget.flip_count(m);
    if flips > m {
        return Err(Error::Budget { flips, m });
    }
    let mut out = b.to_vec();
    if flips == 0 {
        return Ok(out);
    }
    let chosen: Vec<usize> = match budget.strategy {
        CorruptionStrategy::RandomFlips => {
            // full shuffle, so a larger budget on the same stream flips a
            // superset of the entries
            let mut order: Vec<usize> = (0..m).collect();
            order.shuffle(rng);
            order.truncate(flips);
            order
        }
        CorruptionStrategy::SmallestMarginFlips | CorruptionStrategy::LargestMarginFlips => {
            let margins =
                margins.ok_or_else(|| Error::Config("margin-based corruption needs the measurement margins".into()))?;
            check_len(m, margins.len(), "corruption margins")?;
            let largest = budget.strategy == CorruptionStrategy::LargestMarginFlips;
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&i, &j| {
                let by_size = margins[i].abs().total_cmp(&margins[j].abs());
                if largest { by_size.reverse() } else { by_size }.then(i.cmp(&j))
            });
            order.truncate(flips);
            order
        }
    };
    for i in chosen {
        out[i] = -out[i];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{CirculantOperator, CirculantSpec};

    #[test]
    fn noiseless_bit_flip_is_sign() {
        let model = NoiseModel::bit_flip(0.0, 1).unwrap();
        assert_eq!(model.quantize(&[3.0, -2.0], 0), vec![1.0, -1.0]);
    }

    #[test]
    fn zero_sigma_gaussian_is_sign() {
        let model = NoiseModel::gaussian(0.0, 5).unwrap();
        let z = [0.3, -1e-9, 0.0, -7.0, 2.0];
        assert_eq!(model.quantize(&z, 3), vec![1.0, -1.0, 1.0, -1.0, 1.0]);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(NoiseModel::bit_flip(0.5, 0).is_err());
        assert!(NoiseModel::bit_flip(-0.1, 0).is_err());
        assert!(NoiseModel::gaussian(-1.0, 0).is_err());
        assert!(NoiseModel::gaussian(f64::NAN, 0).is_err());
    }

    #[test]
    fn closed_form_gains() {
        let p0 = NoiseModel::bit_flip(0.0, 0).unwrap().lambda();
        assert!((p0 - 0.797_884_560_802_865_4).abs() < 1e-12);
        let s1 = NoiseModel::gaussian(1.0, 0).unwrap().lambda();
        assert!((s1 - 0.564_189_583_547_756_3).abs() < 1e-12);
        let almost_half = NoiseModel::bit_flip(0.5 - 1e-9, 0).unwrap().lambda();
        assert!(almost_half < 1e-8);
    }

    #[test]
    fn gains_decrease_with_noise_level() {
        let ps: Vec<f64> = (0..50).map(|i| i as f64 * 0.01).collect();
        let lam: Vec<f64> = ps
            .iter()
            .map(|&p| NoiseModel::bit_flip(p, 0).unwrap().lambda())
            .collect();
        assert!(lam.windows(2).all(|w| w[1] < w[0]));
        let sig: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let lam: Vec<f64> = sig
            .iter()
            .map(|&s| NoiseModel::gaussian(s, 0).unwrap().lambda())
            .collect();
        assert!(lam.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn quadrature_integrates_polynomials() {
        // E[g^2] = 1, E[g^4] = 3, E[g^6] = 15
        assert!((gauss_hermite_expectation(64, |g| g * g) - 1.0).abs() < 1e-10);
        assert!((gauss_hermite_expectation(64, |g| g.powi(4)) - 3.0).abs() < 1e-9);
        assert!((gauss_hermite_expectation(64, |g| g.powi(6)) - 15.0).abs() < 1e-8);
        // E[cos g] = e^{-1/2}
        assert!((gauss_hermite_expectation(64, f64::cos) - (-0.5f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn logit_gain_is_stable_in_node_count() {
        let f = |g: f64| 0.5 / (g / 2.0).cosh().powi(2);
        let a = gauss_hermite_expectation(64, f);
        let b = gauss_hermite_expectation(GAUSS_HERMITE_NODES, f);
        assert!((a - b).abs() < 1e-10);
        assert!(a > 0.0 && a < 0.5);
    }

    #[test]
    fn bit_flip_fraction_concentrates() {
        let model = NoiseModel::bit_flip(0.1, 99).unwrap();
        let m = 1_000_000;
        let b = model.quantize(&vec![1.0; m], 0);
        let frac = b.iter().filter(|&&v| v < 0.0).count() as f64 / m as f64;
        assert!((frac - 0.1).abs() <= 3.0 * (0.09f64 / m as f64).sqrt(), "{frac}");
    }

    #[test]
    fn symmetric_noise_on_symmetric_input_is_balanced() {
        for model in [NoiseModel::gaussian(0.7, 4).unwrap(), NoiseModel::logit(4)] {
            let mut rng = rng::stream(8, &[]);
            let n = 400_000;
            let z = rng::gaussian_vec(&mut rng, n);
            let mean = model.quantize(&z, 1).iter().sum::<f64>() / n as f64;
            assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "{mean}");
        }
    }

    #[test]
    fn measurement_is_odd_in_signal() {
        let op = CirculantOperator::random(64, 20, 3).unwrap();
        let mut rng = rng::stream(1, &[]);
        let x = rng::unit_vec(&mut rng, 64);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let model = NoiseModel::noiseless();
        let b = measure(&op, &x, &model, 0).unwrap();
        let c = measure(&op, &neg, &model, 0).unwrap();
        assert!(b.iter().zip(&c).all(|(u, v)| *u == -*v));
    }

    #[test]
    fn identity_measurement_is_sign_of_signal() {
        let n = 8;
        let mut g = vec![0.0; n];
        g[0] = 1.0;
        let op = CirculantOperator::new(CirculantSpec::from_parts(g, vec![1.0; n], n).unwrap()).unwrap();
        let x = crate::linalg::normalized(&[1.0, -2.0, 3.0, -1.0, 0.5, 0.0, 2.0, -0.1], 0.0).unwrap();
        let b = measure(&op, &x, &NoiseModel::noiseless(), 0).unwrap();
        assert_eq!(b, x.iter().map(|&v| sign(v)).collect::<Vec<_>>());
    }

    #[test]
    fn non_unit_signal_rejected() {
        let op = CirculantOperator::random(8, 4, 0).unwrap();
        assert!(matches!(
            measure(&op, &[1.0; 8], &NoiseModel::noiseless(), 0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn flip_budget_arithmetic() {
        let b = vec![1.0; 100];
        let budget = CorruptionBudget::new(0.2, CorruptionStrategy::RandomFlips).unwrap();
        assert_eq!(budget.flip_count(100), 1);
        let out = adversarially_corrupt(&b, &budget, None, &mut rng::stream(0, &[])).unwrap();
        let realized = crate::linalg::dist2(&out, &b) / 10.0;
        assert!((realized - 0.2).abs() < 1e-12);

        let zero = CorruptionBudget::none();
        assert_eq!(
            adversarially_corrupt(&b, &zero, None, &mut rng::stream(0, &[])).unwrap(),
            b
        );

        let all = CorruptionBudget::new(2.0, CorruptionStrategy::RandomFlips).unwrap();
        let out = adversarially_corrupt(&b, &all, None, &mut rng::stream(0, &[])).unwrap();
        assert!((crate::linalg::dist2(&out, &b) / 10.0 - 2.0).abs() < 1e-12);

        let too_much = CorruptionBudget::new(2.5, CorruptionStrategy::RandomFlips).unwrap();
        assert!(matches!(
            adversarially_corrupt(&b, &too_much, None, &mut rng::stream(0, &[])),
            Err(Error::Budget { .. })
        ));
    }

    #[test]
    fn smallest_margin_flips_target_small_margins() {
        let b = vec![1.0, -1.0, 1.0, -1.0];
        let margins = [2.0, -0.1, 0.05, -3.0];
        let budget = CorruptionBudget::new(1.0, CorruptionStrategy::SmallestMarginFlips).unwrap();
        let out = adversarially_corrupt(&b, &budget, Some(&margins), &mut rng::stream(0, &[])).unwrap();
        assert_eq!(out, vec![1.0, -1.0, -1.0, -1.0]);
        assert!(adversarially_corrupt(&b, &budget, None, &mut rng::stream(0, &[])).is_err());
    }

    #[test]
    fn largest_margin_flips_target_large_margins() {
        let b = vec![1.0, -1.0, 1.0, -1.0];
        let margins = [2.0, -0.1, 0.05, -3.0];
        let budget = CorruptionBudget::new(1.0, CorruptionStrategy::LargestMarginFlips).unwrap();
        let out = adversarially_corrupt(&b, &budget, Some(&margins), &mut rng::stream(0, &[])).unwrap();
        assert_eq!(out, vec![1.0, -1.0, 1.0, 1.0]);
    }

    #[test]
    fn random_flip_sets_are_nested_across_budgets() {
        let b = vec![1.0; 400];
        let small = CorruptionBudget::new(0.2, CorruptionStrategy::RandomFlips).unwrap();
        let large = CorruptionBudget::new(0.4, CorruptionStrategy::RandomFlips).unwrap();
        let a = adversarially_corrupt(&b, &small, None, &mut rng::stream(3, &[])).unwrap();
        let c = adversarially_corrupt(&b, &large, None, &mut rng::stream(3, &[])).unwrap();
        assert_eq!(a.iter().filter(|v| **v < 0.0).count(), 4);
        assert!(a.iter().zip(&c).all(|(x, y)| *x > 0.0 || *y < 0.0));
    }
}
