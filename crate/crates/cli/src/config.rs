//! Experiment configuration files.
//!
//! A config is a TOML document; every field has a per-command default, so
//! an empty file (or no file) is valid. Flags override file values. The
//! resolved config is what gets written to the sidecar next to the CSV.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use onebit_core::verification::{bounds, lemma10_measurements, DEFAULT_DENSE_CAP_ENTRIES, MIN_TIMED_ITERATIONS};
use onebit_core::{CorruptionBudget, DecoderConfig, DecoderKind, NoiseModel, PriorSpec, ProblemSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    Scaling,
    VerifyLemma1,
    VerifyOrtho,
    VerifySrec,
    Bench,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Scaling => "scaling",
            Command::VerifyLemma1 => "verify-lemma1",
            Command::VerifyOrtho => "verify-ortho",
            Command::VerifySrec => "verify-srec",
            Command::Bench => "bench",
        }
    }
}

/// Parameters used only by the verification and benchmark commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckParams {
    pub alpha: f64,
    pub delta: f64,
    pub pairs: usize,
    pub iterations: usize,
    pub dense_cap_entries: usize,
}

impl Default for CheckParams {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            delta: 0.05,
            pairs: 1000,
            iterations: MIN_TIMED_ITERATIONS,
            dense_cap_entries: DEFAULT_DENSE_CAP_ENTRIES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    pub master_seed: u64,
    pub trials: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Row counts swept by `scaling` and `verify-lemma1`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub m_grid: Vec<usize>,
    #[serde(default)]
    pub check: CheckParams,
    pub problem: ProblemSpec,
}

fn linear(n: usize, k: usize) -> PriorSpec {
    PriorSpec::NormalizedLinear {
        n,
        k,
        radius: 1.0,
        seed: 0,
    }
}

fn problem(n: usize, m: usize, prior: PriorSpec, noise: NoiseModel) -> ProblemSpec {
    ProblemSpec {
        n,
        m,
        prior,
        noise,
        corruption: CorruptionBudget::none(),
        decoder: DecoderConfig::default(),
        method: DecoderKind::Pgd,
        precondition: false,
        enforce_linf: None,
    }
}

/// Row count for the S-REC check: the sample-complexity formula with unit
/// constant, capped at `n`.
pub fn srec_rows(prior: &PriorSpec, alpha: f64, delta: f64) -> Result<usize> {
    let built = prior.build()?;
    let lr = built.lipschitz_estimate()? * built.radius().unwrap_or(1.0);
    let raw = lemma10_measurements(built.latent_dim(), lr / delta, prior.n(), alpha);
    Ok((raw.ceil() as usize).clamp(1, prior.n()))
}

impl ExperimentConfig {
    /// Defaults reproduce the reference experiment of each command.
    pub fn defaults(command: Command) -> Self {
        let noiseless = NoiseModel::noiseless();
        let (trials, m_grid, problem) = match command {
            Command::Simulate => (10, vec![], problem(256, 400, linear(256, 5), noiseless)),
            Command::Scaling => (
                50,
                vec![100, 200, 400, 800, 1600, 3200],
                problem(1024, 100, linear(1024, 10), noiseless),
            ),
            Command::VerifyLemma1 => (
                50,
                vec![256, 1024],
                problem(
                    1024,
                    1024,
                    PriorSpec::Sparse { n: 1024, s: 1 },
                    NoiseModel::bit_flip(0.1, 0).expect("valid"),
                ),
            ),
            Command::VerifyOrtho => (
                100,
                vec![],
                problem(4096, 64, PriorSpec::Sparse { n: 4096, s: 1 }, noiseless),
            ),
            Command::VerifySrec => (1, vec![], problem(512, 512, linear(512, 5), noiseless)),
            Command::Bench => (
                1,
                vec![],
                problem(12288, 5000, PriorSpec::Sparse { n: 12288, s: 1 }, noiseless),
            ),
        };
        let mut config = Self {
            command,
            master_seed: bounds::CALIBRATION_SEED,
            trials,
            output: None,
            m_grid,
            check: CheckParams::default(),
            problem,
        };
        if command == Command::VerifySrec {
            config.problem.m = srec_rows(&config.problem.prior, config.check.alpha, config.check.delta)
                .expect("default prior is valid");
        }
        config
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| anyhow::anyhow!("config parse error: {e}"))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            bail!("trials must be >= 1");
        }
        self.problem.validate()?;
        match self.command {
            Command::Scaling | Command::VerifyLemma1 => {
                if self.m_grid.is_empty() || self.m_grid.windows(2).any(|w| w[0] >= w[1]) {
                    bail!("m_grid must be non-empty and strictly ascending");
                }
                if self.m_grid.contains(&0) {
                    bail!("m_grid entries must be >= 1");
                }
            }
            Command::VerifyOrtho | Command::VerifySrec | Command::Bench if self.problem.m > self.problem.n => {
                bail!("{} needs m <= n", self.command.name());
            }
            _ => {}
        }
        if self.command == Command::Scaling && self.trials < 10 {
            bail!("scaling needs at least 10 trials per grid point");
        }
        if self.command == Command::VerifyLemma1 {
            if !self.problem.n.is_power_of_two() {
                bail!("verify-lemma1 flattens with a Hadamard transform and needs a power-of-two n");
            }
            if self.m_grid.iter().any(|&m| m > self.problem.n) {
                bail!("verify-lemma1 needs every m <= n");
            }
        }
        if self.command == Command::VerifyOrtho && !self.problem.n.is_power_of_two() {
            bail!("verify-ortho flattens with a Hadamard transform and needs a power-of-two n");
        }
        if self.command == Command::Bench && self.check.iterations < MIN_TIMED_ITERATIONS {
            bail!("bench needs at least {MIN_TIMED_ITERATIONS} timed iterations");
        }
        if self.command == Command::VerifySrec
            && (!(0.0..1.0).contains(&self.check.alpha) || self.check.delta < 0.0 || self.check.pairs == 0)
        {
            bail!("verify-srec needs alpha in [0, 1), delta >= 0 and pairs >= 1");
        }
        Ok(())
    }
}
