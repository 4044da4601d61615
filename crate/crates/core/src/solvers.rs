//! Decoders for `x̂ = argmax_{x ∈ K} b̃ᵀ(A x)`.
//!
//! * [`pgd_decode`]: `x⁽ᵗ⁺¹⁾ = P_G(x⁽ᵗ⁾ + μ Aᵀ(b̃ − sign(A x⁽ᵗ⁾)))` from
//!   `x⁽⁰⁾ = 0`, keeping the iterate with the largest correlation objective
//!   across iterations and restarts.
//! * [`direct_projection_decode`]: a single projection of `Aᵀ b̃`.
//! * [`biht_decode`]: the same iteration with hard thresholding in place of
//!   `P_G`, normalized at the end.
//!
//! Observations are binarized on entry (`sign`, with `sign(0) = +1`), so any
//! positive rescaling of `b̃` gives the same output.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::{axpy, dist2, dot, normalized, sign};
use crate::operators::SensingOperator;
use crate::priors::{hard_threshold, GenerativePrior, ProjectionState};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecoderConfig {
    pub mu: f64,
    pub iterations: usize,
    pub restarts: usize,
    /// Early stop once `‖x⁽ᵗ⁺¹⁾ − x⁽ᵗ⁾‖₂ ≤ stop_tol`; 0 disables it.
    pub stop_tol: f64,
    pub seed: u64,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self {
            mu: 0.2,
            iterations: 300,
            restarts: 5,
            stop_tol: 0.0,
            seed: 0,
        }
    }
}

impl DecoderConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::Config(format!("step size mu must be > 0, got {}", self.mu)));
        }
        if self.iterations == 0 || self.restarts == 0 {
            return Err(Error::Config("iterations and restarts must be >= 1".into()));
        }
        if !(self.stop_tol >= 0.0) {
            return Err(Error::Config("stop_tol must be >= 0".into()));
        }
        Ok(())
    }

    /// Seed of restart `restart`.
    pub fn restart_seed(&self, restart: usize) -> u64 {
        rng::derive_seed(self.seed, &[rng::tag::DECODER, restart as u64])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult {
    pub x_hat: Vec<f64>,
    /// `b̃ᵀ(A x̂) / m`
    pub objective: f64,
    /// `‖x̂ − x*‖₂`, once ground truth is attached.
    pub error: Option<f64>,
    pub iterations_run: usize,
    pub wall_time: Duration,
    pub restart_index: usize,
}

impl ReconstructionResult {
    /// Attaches `‖x̂ − x*‖₂`.
    pub fn with_truth(mut self, x_star: &[f64]) -> Self {
        self.error = Some(dist2(&self.x_hat, x_star));
        self
    }
}

/// `b̃ᵀ(A x) / m`
pub fn correlation_objective<A: SensingOperator + ?Sized>(op: &A, b: &[f64], x: &[f64]) -> Result<f64> {
    let ax = op.forward(x)?;
    check_len(ax.len(), b.len(), "observations")?;
    Ok(dot(b, &ax) / b.len() as f64)
}

fn binarize(b: &[f64]) -> Vec<f64> {
    b.iter().map(|&v| sign(v)).collect()
}

/// Runs `restarts` decodes with distinct seeds and keeps the one with the
/// largest objective; ties go to the lowest restart index. Failed restarts
/// are skipped unless all fail.
pub fn run_restarts<F>(cfg: &DecoderConfig, mut decode: F) -> Result<ReconstructionResult>
where
    F: FnMut(usize, u64) -> Result<ReconstructionResult>,
{
    cfg.validate()?;
    let mut best: Option<ReconstructionResult> = None;
    let mut last_err = None;
    for restart in 0..cfg.restarts {
        match decode(restart, cfg.restart_seed(restart)) {
            Ok(mut result) => {
                result.restart_index = restart;
                if best.as_ref().is_none_or(|b| result.objective > b.objective) {
                    best = Some(result);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| Error::AllRestartsFailed {
        restarts: cfg.restarts,
        last: Box::new(last_err.expect("at least one restart ran")),
    })
}

/// Multi-restart projected gradient decoder.
///
/// With an exact projection (linear or sparse prior) every restart follows
/// the same trajectory, so a single run stands in for all of them.
pub fn pgd_decode<A: SensingOperator + ?Sized>(
    op: &A,
    b_tilde: &[f64],
    prior: &GenerativePrior,
    cfg: &DecoderConfig,
) -> Result<ReconstructionResult> {
    let started = Instant::now();
    let b = binarize(b_tilde);
    let effective = if prior.is_exact() {
        DecoderConfig { restarts: 1, ..*cfg }
    } else {
        *cfg
    };
    let mut result = run_restarts(&effective, |_, seed| pgd_run(op, &b, prior, cfg, seed, None))?;
    result.wall_time = started.elapsed();
    Ok(result)
}

/// One PGD trajectory from `init` (or from `0` when `None`).
pub fn pgd_decode_from<A: SensingOperator + ?Sized>(
    op: &A,
    b_tilde: &[f64],
    prior: &GenerativePrior,
    cfg: &DecoderConfig,
    init: &[f64],
) -> Result<ReconstructionResult> {
    cfg.validate()?;
    pgd_run(op, &binarize(b_tilde), prior, cfg, cfg.restart_seed(0), Some(init))
}

fn pgd_run<A: SensingOperator + ?Sized>(
    op: &A,
    b: &[f64],
    prior: &GenerativePrior,
    cfg: &DecoderConfig,
    seed: u64,
    init: Option<&[f64]>,
) -> Result<ReconstructionResult> {
    let started = Instant::now();
    let (m, n) = (op.rows(), op.cols());
    check_len(m, b.len(), "observations")?;
    check_len(n, prior.n(), "prior dimension")?;

    let mut state = ProjectionState::new(seed);
    let mut x = match init {
        Some(x0) => {
            check_len(n, x0.len(), "initial iterate")?;
            x0.to_vec()
        }
        None => vec![0.0; n],
    };
    // At x = 0 no measurement is predicted, so the first residual is b̃ itself.
    let mut ax = if x.iter().all(|&v| v == 0.0) {
        None
    } else {
        Some(op.forward(&x)?)
    };

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut iterations_run = 0;
    for t in 0..cfg.iterations {
        let residual: Vec<f64> = match &ax {
            None => b.to_vec(),
            Some(ax) => b.iter().zip(ax).map(|(bi, ai)| bi - sign(*ai)).collect(),
        };
        let mut v = x.clone();
        axpy(cfg.mu, &op.adjoint(&residual)?, &mut v);
        let next = prior.project_with(&v, t, &mut state)?;
        let a_next = op.forward(&next)?;
        let objective = dot(b, &a_next) / m as f64;
        if best.as_ref().is_none_or(|(o, _)| objective > *o) {
            best = Some((objective, next.clone()));
        }
        let step = dist2(&next, &x);
        x = next;
        ax = Some(a_next);
        iterations_run = t + 1;
        if cfg.stop_tol > 0.0 && step <= cfg.stop_tol {
            break;
        }
    }
    let (objective, x_hat) = best.expect("iterations >= 1");
    Ok(ReconstructionResult {
        x_hat,
        objective,
        error: None,
        iterations_run,
        wall_time: started.elapsed(),
        restart_index: 0,
    })
}

/// `P_G(Aᵀ b̃)`.
pub fn direct_projection_decode<A: SensingOperator + ?Sized>(
    op: &A,
    b_tilde: &[f64],
    prior: &GenerativePrior,
) -> Result<ReconstructionResult> {
    let started = Instant::now();
    check_len(op.rows(), b_tilde.len(), "observations")?;
    let b = binarize(b_tilde);
    let x_hat = prior.project(&op.adjoint(&b)?)?;
    let objective = correlation_objective(op, &b, &x_hat)?;
    Ok(ReconstructionResult {
        x_hat,
        objective,
        error: None,
        iterations_run: 1,
        wall_time: started.elapsed(),
        restart_index: 0,
    })
}

/// Binary iterative hard thresholding with sparsity `s`. Deterministic, so
/// `cfg.restarts` is ignored; the last iterate is returned, normalized.
pub fn biht_decode<A: SensingOperator + ?Sized>(
    op: &A,
    b_tilde: &[f64],
    s: usize,
    cfg: &DecoderConfig,
) -> Result<ReconstructionResult> {
    cfg.validate()?;
    let started = Instant::now();
    let (m, n) = (op.rows(), op.cols());
    check_len(m, b_tilde.len(), "observations")?;
    if s == 0 || s > n {
        return Err(Error::Config(format!("need 1 <= s <= n, got s={s}, n={n}")));
    }
    let b = binarize(b_tilde);
    let mut x = vec![0.0; n];
    let mut ax: Option<Vec<f64>> = None;
    let mut iterations_run = 0;
    for t in 0..cfg.iterations {
        let residual: Vec<f64> = match &ax {
            None => b.clone(),
            Some(ax) => b.iter().zip(ax).map(|(bi, ai)| bi - sign(*ai)).collect(),
        };
        let mut v = x.clone();
        axpy(cfg.mu, &op.adjoint(&residual)?, &mut v);
        let next = hard_threshold(&v, s);
        let step = dist2(&next, &x);
        x = next;
        ax = Some(op.forward(&x)?);
        iterations_run = t + 1;
        if cfg.stop_tol > 0.0 && step <= cfg.stop_tol {
            break;
        }
    }
    let x_hat = normalized(&x, 1e-300).ok_or_else(|| Error::Projection("BIHT iterate vanished".into()))?;
    let objective = correlation_objective(op, &b, &x_hat)?;
    Ok(ReconstructionResult {
        x_hat,
        objective,
        error: None,
        iterations_run,
        wall_time: started.elapsed(),
        restart_index: 0,
    })
}
