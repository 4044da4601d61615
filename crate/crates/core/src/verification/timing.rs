use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::linalg::{median, norm_inf};
use crate::operators::{CirculantOperator, DenseOperator, SensingOperator};
use crate::rng::{self, tag};

pub const WARMUP_ITERATIONS: usize = 5;
pub const MIN_TIMED_ITERATIONS: usize = 20;
/// Largest dense matrix materialized by default (800 MB of `f64`).
pub const DEFAULT_DENSE_CAP_ENTRIES: usize = 100_000_000;

/// Median per-iteration cost of one forward plus one adjoint application.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingReport {
    pub n: usize,
    pub m: usize,
    pub iterations: usize,
    pub circulant_ms: f64,
    /// `None` when the dense arm exceeded the memory cap.
    pub dense_ms: Option<f64>,
    pub speedup: Option<f64>,
    /// Largest output difference between the arms, relative to
    /// `max(1, ‖reference‖∞)`.
    pub max_output_diff: Option<f64>,
}

fn time_core<A: SensingOperator + ?Sized>(op: &A, x: &[f64], b: &[f64], iterations: usize) -> Result<f64> {
    let mut samples = Vec::with_capacity(iterations);
    for i in 0..WARMUP_ITERATIONS + iterations {
        let start = Instant::now();
        std::hint::black_box(op.forward(std::hint::black_box(x))?);
        std::hint::black_box(op.adjoint(std::hint::black_box(b))?);
        let elapsed: Duration = start.elapsed();
        if i >= WARMUP_ITERATIONS {
            samples.push(elapsed.as_secs_f64() * 1e3);
        }
    }
    Ok(median(&samples))
}

fn relative_diff(a: &[f64], reference: &[f64]) -> f64 {
    let scale = norm_inf(reference).max(1.0);
    a.iter().zip(reference).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

/// Times the linear-algebra core of one decoder iteration for the FFT
/// operator and its explicitly materialized dense counterpart on identical
/// inputs. Runs on the calling thread only.
pub fn timing_benchmark(
    n: usize,
    m: usize,
    iterations: usize,
    seed: u64,
    dense_cap_entries: usize,
) -> Result<TimingReport> {
    if iterations < MIN_TIMED_ITERATIONS {
        return Err(Error::Config(format!(
            "need at least {MIN_TIMED_ITERATIONS} timed iterations, got {iterations}"
        )));
    }
    let circulant = CirculantOperator::random(n, m, rng::derive_seed(seed, &[tag::OPERATOR]))?;
    let x = rng::gaussian_vec(&mut rng::stream(seed, &[tag::SIGNAL]), n);
    let b = rng::gaussian_vec(&mut rng::stream(seed, &[tag::NOISE]), m);

    let circulant_ms = time_core(&circulant, &x, &b, iterations)?;
    let dense = match DenseOperator::from_circulant_capped(circulant.spec(), dense_cap_entries) {
        Ok(d) => Some(d),
        Err(Error::Budget { .. }) | Err(Error::Config(_)) => None,
        Err(e) => return Err(e),
    };
    let (dense_ms, speedup, max_output_diff) = match dense {
        Some(d) => {
            let ms = time_core(&d, &x, &b, iterations)?;
            let diff = relative_diff(&circulant.forward(&x)?, &d.forward(&x)?)
                .max(relative_diff(&circulant.adjoint(&b)?, &d.adjoint(&b)?));
            (Some(ms), Some(ms / circulant_ms), Some(diff))
        }
        None => (None, None, None),
    };
    Ok(TimingReport {
        n,
        m,
        iterations,
        circulant_ms,
        dense_ms,
        speedup,
        max_output_diff,
    })
}
