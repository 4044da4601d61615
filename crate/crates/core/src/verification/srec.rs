use crate::error::{Error, Result};
use crate::linalg::norm2;
use crate::operators::SensingOperator;
use crate::priors::GenerativePrior;
use crate::rng::StreamRng;

/// Margins of one pair: both are `>= 0` when the two-sided bound holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SrecPair {
    pub index: usize,
    pub distance: f64,
    pub measured: f64,
    /// `‖(1/√m) A d‖ − ((1−α)‖d‖ − δ)`
    pub lower_margin: f64,
    /// `(1+α)‖d‖ + δ − ‖(1/√m) A d‖`
    pub upper_margin: f64,
}

impl SrecPair {
    pub fn holds(&self) -> bool {
        self.lower_margin >= 0.0 && self.upper_margin >= 0.0
    }
}

/// Non-uniform check over sampled pairs; a pass says nothing about pairs
/// that were not drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct SrecReport {
    pub m: usize,
    pub pairs: usize,
    pub alpha: f64,
    pub delta: f64,
    pub worst_lower_margin: f64,
    pub worst_upper_margin: f64,
    pub violations: Vec<SrecPair>,
}

impl SrecReport {
    pub fn passes(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Margins of a single pair.
pub fn srec_pair<A: SensingOperator + ?Sized>(
    op: &A,
    index: usize,
    x1: &[f64],
    x2: &[f64],
    alpha: f64,
    delta: f64,
) -> Result<SrecPair> {
    let d: Vec<f64> = x1.iter().zip(x2).map(|(a, b)| a - b).collect();
    let distance = norm2(&d);
    let measured = norm2(&op.forward(&d)?) / (op.rows() as f64).sqrt();
    Ok(SrecPair {
        index,
        distance,
        measured,
        lower_margin: measured - ((1.0 - alpha) * distance - delta),
        upper_margin: (1.0 + alpha) * distance + delta - measured,
    })
}

pub fn srec_check_pairs<A, I>(op: &A, pairs: I, alpha: f64, delta: f64) -> Result<SrecReport>
where
    A: SensingOperator + ?Sized,
    I: IntoIterator<Item = (Vec<f64>, Vec<f64>)>,
{
    if !(0.0..1.0).contains(&alpha) || !(delta >= 0.0) {
        return Err(Error::Config(format!(
            "need alpha in [0, 1) and delta >= 0, got {alpha}, {delta}"
        )));
    }
    let mut report = SrecReport {
        m: op.rows(),
        pairs: 0,
        alpha,
        delta,
        worst_lower_margin: f64::INFINITY,
        worst_upper_margin: f64::INFINITY,
        violations: Vec::new(),
    };
    for (index, (x1, x2)) in pairs.into_iter().enumerate() {
        let pair = srec_pair(op, index, &x1, &x2, alpha, delta)?;
        report.worst_lower_margin = report.worst_lower_margin.min(pair.lower_margin);
        report.worst_upper_margin = report.worst_upper_margin.min(pair.upper_margin);
        if !pair.holds() {
            report.violations.push(pair);
        }
        report.pairs += 1;
    }
    if report.pairs == 0 {
        return Err(Error::Config("S-REC check needs at least one pair".into()));
    }
    Ok(report)
}

/// Samples `pairs` independent pairs from the prior's range and checks
/// `(1−α)‖x₁−x₂‖ − δ ≤ ‖(1/√m) A (x₁−x₂)‖ ≤ (1+α)‖x₁−x₂‖ + δ`.
pub fn srec_check<A: SensingOperator + ?Sized>(
    op: &A,
    prior: &GenerativePrior,
    pairs: usize,
    alpha: f64,
    delta: f64,
    rng: &mut StreamRng,
) -> Result<SrecReport> {
    let drawn = (0..pairs)
        .map(|_| Ok((prior.sample(rng)?, prior.sample(rng)?)))
        .collect::<Result<Vec<_>>>()?;
    srec_check_pairs(op, drawn, alpha, delta)
}

/// `k log(Lr/δ) · log²(k log(Lr/δ)) · log² n / α²` with unit constant.
pub fn lemma10_measurements(k: usize, lr_over_delta: f64, n: usize, alpha: f64) -> f64 {
    let complexity = k as f64 * lr_over_delta.ln().max(1.0);
    complexity * complexity.ln().max(1.0).powi(2) * (n as f64).ln().powi(2) / (alpha * alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{CirculantOperator, CirculantSpec};
    use crate::rng;

    #[test]
    fn identical_points_always_pass() {
        let op = CirculantOperator::random(32, 8, 0).unwrap();
        let x = rng::unit_vec(&mut rng::stream(1, &[]), 32);
        let r = srec_check_pairs(&op, vec![(x.clone(), x)], 0.5, 0.05).unwrap();
        assert!(r.passes());
        assert!((r.worst_lower_margin - 0.05).abs() < 1e-15);
    }

    #[test]
    fn identity_rows_have_known_scale() {
        let n = 16;
        let mut g = vec![0.0; n];
        g[0] = 1.0;
        let op = CirculantOperator::new(CirculantSpec::from_parts(g, vec![1.0; n], n).unwrap()).unwrap();
        let mut stream = rng::stream(2, &[]);
        let pairs: Vec<_> = (0..50)
            .map(|_| (rng::unit_vec(&mut stream, n), rng::unit_vec(&mut stream, n)))
            .collect();
        // (1/√n) ‖d‖ exactly: the lower bound is tight at α = 1 − 1/√n
        let alpha = 1.0 - 1.0 / (n as f64).sqrt() + 1e-12;
        let r = srec_check_pairs(&op, pairs.clone(), alpha, 0.0).unwrap();
        assert!(r.passes());
        assert!(r.worst_lower_margin.abs() < 1e-11);
        let r = srec_check_pairs(&op, pairs, 0.5, 0.0).unwrap();
        assert_eq!(r.violations.len(), 50);
    }

    #[test]
    fn sample_complexity_grows_with_latent_dimension() {
        assert!(lemma10_measurements(10, 1e3, 512, 0.5) > lemma10_measurements(5, 1e3, 512, 0.5));
        assert!(lemma10_measurements(5, 1e3, 512, 0.25) > lemma10_measurements(5, 1e3, 512, 0.5));
    }
}
