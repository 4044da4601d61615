//! The seeded measure → corrupt → decode pipeline shared by the CLI and
//! the verification experiments.
//!
//! Every random quantity in trial `t` of an experiment with master seed `s`
//! comes from a stream keyed by `(s, purpose, t)`, so a trial can be
//! replayed in isolation and parallel execution does not change results.
//! The operator and signal streams do not depend on `m` or on the
//! corruption budget: sweeps over those parameters reuse the same
//! generator, signs and signal in each trial. Requests with `m > n` stack
//! independent circulant blocks.

use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::norm_inf;
use crate::measurement::{adversarially_corrupt, CorruptionBudget, NoiseModel};
use crate::operators::{Preconditioned, SensingOperator, StackedCirculant};
use crate::priors::{sample_signal, GenerativePrior, PriorSpec, SignalSpec};
use crate::rng::{self, tag};
use crate::solvers::{biht_decode, direct_projection_decode, pgd_decode, DecoderConfig, ReconstructionResult};

/// Which decoder a trial runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecoderKind {
    #[default]
    Pgd,
    DirectProjection,
    Biht {
        s: usize,
    },
}

fn default_noise() -> NoiseModel {
    NoiseModel::noiseless()
}

/// One fully specified recovery problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub n: usize,
    pub m: usize,
    pub prior: PriorSpec,
    #[serde(default = "default_noise")]
    pub noise: NoiseModel,
    #[serde(default)]
    pub corruption: CorruptionBudget,
    #[serde(default)]
    pub decoder: DecoderConfig,
    #[serde(default)]
    pub method: DecoderKind,
    /// Measure `A H x*` with a fresh randomly signed Hadamard transform.
    #[serde(default)]
    pub precondition: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enforce_linf: Option<f64>,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::Config("n and m must be >= 1".into()));
        }
        if self.prior.n() != self.n {
            return Err(Error::Config(format!(
                "prior dimension {} does not match n={}",
                self.prior.n(),
                self.n
            )));
        }
        if self.precondition && !self.n.is_power_of_two() {
            return Err(Error::Config(format!(
                "Hadamard preconditioning needs a power-of-two n, got {}",
                self.n
            )));
        }
        if let DecoderKind::Biht { s } = self.method {
            if s == 0 || s > self.n {
                return Err(Error::Config(format!("BIHT sparsity must be in [1, n], got {s}")));
            }
        }
        self.noise.validate()?;
        self.corruption.validate()?;
        self.decoder.validate()
    }

    pub fn with_m(&self, m: usize) -> Self {
        Self { m, ..self.clone() }
    }

    pub fn with_corruption(&self, corruption: CorruptionBudget) -> Self {
        Self {
            corruption,
            ..self.clone()
        }
    }
}

/// Outcome of one trial. Everything except `wall_time` is a deterministic
/// function of `(spec, master_seed, trial)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub m: usize,
    pub varsigma: f64,
    pub error: f64,
    pub objective: f64,
    pub iterations_run: usize,
    pub restart_index: usize,
    /// ℓ∞ norm of the signal that meets `A`.
    pub rho: f64,
    pub flips: usize,
    pub lambda: f64,
    pub wall_time: Duration,
}

/// Seeds of one trial, exposed for replay metadata.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialSeeds {
    pub operator: u64,
    pub signal: u64,
    pub noise: u64,
    pub corruption: u64,
    pub decoder: u64,
}

impl TrialSeeds {
    pub fn derive(spec: &ProblemSpec, master_seed: u64, trial: usize) -> Self {
        let t = trial as u64;
        Self {
            operator: rng::derive_seed(master_seed, &[tag::OPERATOR, t]),
            signal: rng::derive_seed(master_seed, &[tag::SIGNAL, t]),
            noise: rng::derive_seed(master_seed, &[tag::NOISE, spec.noise.seed, t]),
            corruption: rng::derive_seed(master_seed, &[tag::CORRUPTION, t]),
            decoder: rng::derive_seed(master_seed, &[tag::DECODER, spec.decoder.seed, t]),
        }
    }
}

/// Runs one trial against an already built prior.
pub fn run_trial(spec: &ProblemSpec, prior: &GenerativePrior, master_seed: u64, trial: usize) -> Result<TrialRecord> {
    let seeds = TrialSeeds::derive(spec, master_seed, trial);
    let op = StackedCirculant::random(spec.n, spec.m, seeds.operator)?;

    let signal_spec = SignalSpec {
        prior,
        enforce_linf: spec.enforce_linf,
        precondition_with_hadamard: spec.precondition,
    };
    let signal = sample_signal(&signal_spec, &mut rng::stream(seeds.signal, &[]))?;
    let effective = signal.effective();

    let margins = op.forward(&effective)?;
    let b = spec.noise.quantize_with(&margins, &mut rng::stream(seeds.noise, &[]));
    let b_tilde = adversarially_corrupt(
        &b,
        &spec.corruption,
        Some(&margins),
        &mut rng::stream(seeds.corruption, &[]),
    )?;

    let decoder = DecoderConfig {
        seed: seeds.decoder,
        ..spec.decoder
    };
    let result = match &signal.preconditioner {
        Some(h) => {
            let composed = Preconditioned::new(&op, h.clone())?;
            decode(spec, &composed, &b_tilde, prior, &decoder)?
        }
        None => decode(spec, &op, &b_tilde, prior, &decoder)?,
    }
    .with_truth(&signal.x_star);

    Ok(TrialRecord {
        trial,
        m: spec.m,
        varsigma: spec.corruption.varsigma,
        error: result.error.expect("truth attached"),
        objective: result.objective,
        iterations_run: result.iterations_run,
        restart_index: result.restart_index,
        rho: norm_inf(&effective),
        flips: spec.corruption.flip_count(spec.m),
        lambda: spec.noise.lambda(),
        wall_time: result.wall_time,
    })
}

fn decode<A: SensingOperator + ?Sized>(
    spec: &ProblemSpec,
    op: &A,
    b: &[f64],
    prior: &GenerativePrior,
    cfg: &DecoderConfig,
) -> Result<ReconstructionResult> {
    match spec.method {
        DecoderKind::Pgd => pgd_decode(op, b, prior, cfg),
        DecoderKind::DirectProjection => direct_projection_decode(op, b, prior),
        DecoderKind::Biht { s } => biht_decode(op, b, s, cfg),
    }
}

/// Runs trials `0..trials` in parallel on the current rayon pool; the
/// result is ordered by trial index.
pub fn run_trials(spec: &ProblemSpec, master_seed: u64, trials: usize) -> Result<Vec<TrialRecord>> {
    spec.validate()?;
    let prior = spec.prior.build()?;
    (0..trials)
        .into_par_iter()
        .map(|t| run_trial(spec, &prior, master_seed, t))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::CorruptionStrategy;

    fn spec() -> ProblemSpec {
        ProblemSpec {
            n: 64,
            m: 48,
            prior: PriorSpec::NormalizedLinear {
                n: 64,
                k: 3,
                radius: 1.0,
                seed: 1,
            },
            noise: NoiseModel::noiseless(),
            corruption: CorruptionBudget::none(),
            decoder: DecoderConfig {
                iterations: 20,
                ..Default::default()
            },
            method: DecoderKind::Pgd,
            precondition: false,
            enforce_linf: None,
        }
    }

    fn strip(mut r: Vec<TrialRecord>) -> Vec<TrialRecord> {
        r.iter_mut().for_each(|t| t.wall_time = Duration::ZERO);
        r
    }

    #[test]
    fn trials_are_reproducible() {
        let a = strip(run_trials(&spec(), 5, 4).unwrap());
        let b = strip(run_trials(&spec(), 5, 4).unwrap());
        assert_eq!(a, b);
        let c = strip(run_trials(&spec(), 6, 4).unwrap());
        assert_ne!(a, c);
    }

    #[test]
    fn validation_catches_mismatches() {
        let mut s = spec();
        s.m = 0;
        assert!(s.validate().is_err());
        let mut s = spec();
        s.prior = PriorSpec::Sparse { n: 32, s: 2 };
        assert!(s.validate().is_err());
        let mut s = spec();
        s.n = 60;
        s.prior = PriorSpec::Sparse { n: 60, s: 2 };
        s.precondition = true;
        assert!(s.validate().is_err());
    }

    #[test]
    fn more_rows_than_n_are_supported() {
        let mut s = spec();
        s.m = 150;
        let records = run_trials(&s, 3, 3).unwrap();
        assert!(records.iter().all(|r| r.error < 0.3 && r.m == 150));
    }

    #[test]
    fn zero_budget_matches_uncorrupted() {
        let base = spec();
        let with_zero = base.with_corruption(CorruptionBudget::new(0.0, CorruptionStrategy::RandomFlips).unwrap());
        assert_eq!(
            strip(run_trials(&base, 1, 3).unwrap()),
            strip(run_trials(&with_zero, 1, 3).unwrap())
        );
    }

    #[test]
    fn preconditioned_pipeline_recovers() {
        let mut s = spec();
        s.m = 64;
        s.precondition = true;
        let records = run_trials(&s, 2, 5).unwrap();
        for r in &records {
            assert!(r.error < 0.6, "{r:?}");
            assert!(r.rho <= 1.0);
        }
    }
}
