//! `onebit`: reproducible experiments, verification suites and benchmarks
//! on top of `onebit-core`.
//!
//! Every command writes a CSV with a header row and, when `--out` is given,
//! a sidecar `<out>.meta.toml` holding the fully resolved configuration.
//! Passing that sidecar back with `--config` replays the run.

pub mod commands;
pub mod config;

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

pub use commands::{execute, Outcome};
pub use config::{Command, ExperimentConfig};

#[derive(Debug, Parser)]
#[command(
    name = "onebit",
    version,
    about = "1-bit compressive sensing experiments with circulant operators"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Run the measure-corrupt-decode pipeline and write one row per trial.
    Simulate(Overrides),
    /// Median error over a grid of measurement counts.
    Scaling(Overrides),
    /// ℓ∞ concentration of the back-projected measurements.
    VerifyLemma1(Overrides),
    /// Gram–Schmidt orthogonality of signed signal shifts.
    VerifyOrtho(Overrides),
    /// Two-sided near-isometry on random pairs from the prior's range.
    VerifySrec(Overrides),
    /// Per-iteration cost of the FFT operator against its dense matrix.
    Bench(Overrides),
}

impl CliCommand {
    pub fn split(&self) -> (Command, &Overrides) {
        match self {
            CliCommand::Simulate(o) => (Command::Simulate, o),
            CliCommand::Scaling(o) => (Command::Scaling, o),
            CliCommand::VerifyLemma1(o) => (Command::VerifyLemma1, o),
            CliCommand::VerifyOrtho(o) => (Command::VerifyOrtho, o),
            CliCommand::VerifySrec(o) => (Command::VerifySrec, o),
            CliCommand::Bench(o) => (Command::Bench, o),
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML config; flags take precedence over its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    /// Comma-separated row counts, e.g. `100,200,400`.
    #[arg(long, value_delimiter = ',')]
    pub m_grid: Option<Vec<usize>>,
    /// Latent dimension of the linear or MLP prior.
    #[arg(long)]
    pub k: Option<usize>,
    /// Sparsity of the sparse prior, or of BIHT.
    #[arg(long)]
    pub s: Option<usize>,
    /// Corruption budget ς.
    #[arg(long)]
    pub varsigma: Option<f64>,
    /// Timed iterations for `bench`.
    #[arg(long)]
    pub iterations: Option<usize>,
}

/// Builds the effective configuration: command defaults, then the config
/// file, then flags.
pub fn resolve(command: Command, o: &Overrides) -> Result<ExperimentConfig> {
    use onebit_core::{DecoderKind, PriorSpec};

    let mut config = match &o.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::defaults(command),
    };
    if config.command != command {
        anyhow::bail!(
            "config was written for `{}` but `{}` was requested",
            config.command.name(),
            command.name()
        );
    }
    let p = &mut config.problem;
    if let Some(n) = o.n {
        p.n = n;
        p.prior = p.prior.with_n(n);
    }
    if let Some(k) = o.k {
        match &mut p.prior {
            PriorSpec::NormalizedLinear { k: slot, .. } | PriorSpec::ReluMlp { k: slot, .. } => *slot = k,
            PriorSpec::Sparse { .. } => anyhow::bail!("--k does not apply to the sparse prior"),
        }
    }
    if let Some(s) = o.s {
        match (&mut p.prior, &mut p.method) {
            (_, DecoderKind::Biht { s: slot }) | (PriorSpec::Sparse { s: slot, .. }, _) => *slot = s,
            _ => anyhow::bail!("--s needs a sparse prior or the BIHT decoder"),
        }
    }
    if let Some(varsigma) = o.varsigma {
        p.corruption.varsigma = varsigma;
    }
    match o.m {
        Some(m) => p.m = m,
        None if command == Command::VerifySrec && o.config.is_none() && (o.n.is_some() || o.k.is_some()) => {
            p.m = config::srec_rows(&p.prior, config.check.alpha, config.check.delta)?;
        }
        None => {}
    }
    if let Some(grid) = &o.m_grid {
        config.m_grid = grid.clone();
    }
    if let Some(seed) = o.seed {
        config.master_seed = seed;
    }
    if let Some(trials) = o.trials {
        config.trials = trials;
    }
    if let Some(iterations) = o.iterations {
        config.check.iterations = iterations;
    }
    if let Some(out) = &o.out {
        config.output = Some(out.clone());
    }
    config.validate()?;
    Ok(config)
}

fn suffixed(out: &Path, suffix: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ext = out
        .extension()
        .map(|e| format!(".{}", e.to_string_lossy()))
        .unwrap_or_default();
    out.with_file_name(format!("{stem}{suffix}{ext}"))
}

/// Sidecar path for an output file: `<out>.meta.toml`.
pub fn meta_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.toml");
    PathBuf::from(name)
}

/// Writes the command's tables and the sidecar. Without an output path the
/// primary table goes to stdout and nothing else is written.
pub fn write_outcome(config: &ExperimentConfig, outcome: &Outcome) -> Result<()> {
    match &config.output {
        Some(out) => {
            for table in &outcome.tables {
                let path = match table.suffix {
                    Some(suffix) => suffixed(out, suffix),
                    None => out.clone(),
                };
                std::fs::write(&path, &table.bytes).with_context(|| format!("writing {}", path.display()))?;
            }
            let meta = meta_path(out);
            std::fs::write(&meta, config.to_toml()?).with_context(|| format!("writing {}", meta.display()))?;
        }
        None => {
            let primary = outcome.tables.iter().find(|t| t.suffix.is_none());
            if let Some(table) = primary {
                std::io::stdout().lock().write_all(&table.bytes)?;
            }
        }
    }
    Ok(())
}

/// Applies `ONEBIT_WORKERS` to the global rayon pool.
pub fn configure_workers() -> Result<()> {
    if let Ok(value) = std::env::var("ONEBIT_WORKERS") {
        let workers: usize = value
            .parse()
            .with_context(|| format!("ONEBIT_WORKERS must be a positive integer, got {value:?}"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build_global()
            .context("configuring the worker pool")?;
    }
    Ok(())
}
