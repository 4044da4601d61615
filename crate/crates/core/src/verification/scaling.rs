use crate::error::{Error, Result};
use crate::experiment::{run_trials, ProblemSpec, TrialRecord};
use crate::linalg::{median, quantile};
use crate::measurement::CorruptionBudget;

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub m: usize,
    pub median_error: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingTable {
    pub rows: Vec<ScalingRow>,
    /// Least-squares slope of `log median_error` against `log m`.
    pub slope: f64,
    /// Per-trial records, grouped by grid point in grid order.
    pub records: Vec<TrialRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub varsigma: f64,
    pub median: f64,
    pub iqr: f64,
    pub lambda: f64,
    /// `median(ς) − median(0)`
    pub excess: f64,
    /// `excess / (ς/λ)`, zero at `ς = 0`.
    pub normalized: f64,
}

fn summarize(m: usize, errors: &[f64]) -> ScalingRow {
    let q1 = quantile(errors, 0.25);
    let q3 = quantile(errors, 0.75);
    ScalingRow {
        m,
        median_error: median(errors),
        q1,
        q3,
        iqr: q3 - q1,
        trials: errors.len(),
    }
}

/// Least-squares slope of `ln y` on `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Config("slope fit needs at least two paired points".into()));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::Precondition("log-log fit needs positive values".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Precondition("slope fit needs distinct x values".into()));
    }
    Ok(sxy / sxx)
}

/// Counts adjacent increases of the median along the grid and whether each
/// one is no larger than the IQR of either of its two grid points.
pub fn inversions_within_iqr(rows: &[ScalingRow]) -> (usize, bool) {
    let mut count = 0;
    let mut within = true;
    for w in rows.windows(2) {
        let rise = w[1].median_error - w[0].median_error;
        if rise > 0.0 {
            count += 1;
            within &= rise <= w[0].iqr.max(w[1].iqr);
        }
    }
    (count, within)
}

/// Runs the full pipeline at every `m` in `grid` with `trials` trials each.
/// Trial `t` sees the same generator, signs and signal at every grid point.
pub fn error_scaling_experiment(grid: &[usize], base: &ProblemSpec, trials: usize, seed: u64) -> Result<ScalingTable> {
    if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("m grid must be non-empty and strictly ascending".into()));
    }
    if trials < 10 {
        return Err(Error::Config(format!(
            "need at least 10 trials per grid point, got {trials}"
        )));
    }
    let mut rows = Vec::with_capacity(grid.len());
    let mut records = Vec::with_capacity(grid.len() * trials);
    for &m in grid {
        let batch = run_trials(&base.with_m(m), seed, trials)?;
        let errors: Vec<f64> = batch.iter().map(|r| r.error).collect();
        rows.push(summarize(m, &errors));
        records.extend(batch);
    }
    let slope = if rows.len() >= 2 {
        let x: Vec<f64> = rows.iter().map(|r| r.m as f64).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.median_error).collect();
        loglog_slope(&x, &y)?
    } else {
        f64::NAN
    };
    Ok(ScalingTable { rows, slope, records })
}

/// Median error over `trials` at each corruption level of `varsigmas`,
/// which must contain `0`. Uses the base spec's corruption strategy.
pub fn corruption_sweep(base: &ProblemSpec, varsigmas: &[f64], trials: usize, seed: u64) -> Result<Vec<SweepRow>> {
    if !varsigmas.contains(&0.0) {
        return Err(Error::Config("corruption sweep needs a varsigma = 0 reference".into()));
    }
    let lambda = base.noise.lambda();
    let mut rows = Vec::with_capacity(varsigmas.len());
    for &varsigma in varsigmas {
        let budget = CorruptionBudget::new(varsigma, base.corruption.strategy)?;
        let errors: Vec<f64> = run_trials(&base.with_corruption(budget), seed, trials)?
            .iter()
            .map(|r| r.error)
            .collect();
        let s = summarize(base.m, &errors);
        rows.push(SweepRow {
            varsigma,
            median: s.median_error,
            iqr: s.iqr,
            lambda,
            excess: 0.0,
            normalized: 0.0,
        });
    }
    let reference = rows.iter().find(|r| r.varsigma == 0.0).map(|r| r.median).unwrap_or(0.0);
    for row in &mut rows {
        row.excess = row.median - reference;
        if row.varsigma > 0.0 {
            row.normalized = row.excess / (row.varsigma / lambda);
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::priors::PriorSpec;

    fn base(n: usize) -> ProblemSpec {
        ProblemSpec {
            n,
            m: n / 2,
            prior: PriorSpec::NormalizedLinear {
                n,
                k: 3,
                radius: 1.0,
                seed: 9,
            },
            noise: crate::measurement::NoiseModel::noiseless(),
            corruption: CorruptionBudget::none(),
            decoder: Default::default(),
            method: Default::default(),
            precondition: false,
            enforce_linf: None,
        }
    }

    #[test]
    fn slope_of_power_law_is_exact() {
        let x = [100.0, 200.0, 400.0, 800.0];
        let y: Vec<f64> = x.iter().map(|m: &f64| 3.0 * m.powf(-0.5)).collect();
        assert!((loglog_slope(&x, &y).unwrap() + 0.5).abs() < 1e-12);
    }

    #[test]
    fn inversion_counting() {
        let row = |m, med, iqr| ScalingRow {
            m,
            median_error: med,
            q1: 0.0,
            q3: iqr,
            iqr,
            trials: 10,
        };
        let rows = [row(1, 0.5, 0.1), row(2, 0.55, 0.1), row(4, 0.3, 0.1)];
        assert_eq!(inversions_within_iqr(&rows), (1, true));
        let rows = [row(1, 0.5, 0.01), row(2, 0.6, 0.01)];
        assert_eq!(inversions_within_iqr(&rows), (1, false));
    }

    #[test]
    fn grid_validation() {
        assert!(error_scaling_experiment(&[32, 16], &base(64), 10, 0).is_err());
        assert!(error_scaling_experiment(&[16, 32], &base(64), 5, 0).is_err());
    }

    #[test]
    fn error_decreases_along_grid() {
        let table = error_scaling_experiment(&[8, 64], &base(64), 10, 1).unwrap();
        assert_eq!(table.records.len(), 20);
        assert!(table.rows[1].median_error < table.rows[0].median_error);
        assert!(table.slope < 0.0);
    }

    #[test]
    fn saturation_under_heavy_corruption() {
        let sweep = corruption_sweep(&base(64), &[0.0, 2.0], 10, 2).unwrap();
        // every sign flipped: the decoder lands on the antipode
        assert!(sweep[1].median > 1.5 && sweep[1].median <= 2.0 + 1e-9);
        assert!(sweep[1].excess > 0.0);
    }
}
