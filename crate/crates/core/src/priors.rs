//! Projection oracles onto structured subsets of the unit sphere.
//!
//! Three families are supported:
//!
//! * `normalized_linear`: `{ W z / ‖W z‖ : ‖z‖ ≤ r }` for a fixed `n × k`
//!   map `W`. Projection is exact (least squares onto the column space).
//! * `relu_mlp`: `G(z) = h(z) / ‖h(z)‖` with `h` a ReLU network. Projection
//!   runs Adam over the latent with a staged step schedule.
//! * `sparse`: unit-norm `s`-sparse vectors; projection keeps the `s` largest
//!   magnitudes and normalizes.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::{self, norm2, norm_inf, normalized};
use crate::operators::HadamardPreconditioner;
use crate::rng::{self, StreamRng};

/// Latents whose image norm falls below this are rejected when sampling.
pub const DEGENERATE_IMAGE_NORM: f64 = 1e-8;
/// Upper bound on rejection-sampling attempts.
pub const MAX_SAMPLING_ATTEMPTS: usize = 1000;

const PROJECTION_FLOOR: f64 = 1e-12;

/// One stage of the inner latent optimizer: used while the outer iteration
/// index is below `until_iteration`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleStage {
    pub until_iteration: usize,
    pub steps: usize,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionSchedule {
    pub stages: Vec<ScheduleStage>,
}

impl Default for ProjectionSchedule {
    /// 30 steps at 0.3 for the first 20 outer iterations, 10 at 0.2 up to
    /// iteration 100, then 5 at 0.1.
    fn default() -> Self {
        let stage = |until_iteration, steps, learning_rate| ScheduleStage {
            until_iteration,
            steps,
            learning_rate,
        };
        Self {
            stages: vec![stage(20, 30, 0.3), stage(100, 10, 0.2), stage(300, 5, 0.1)],
        }
    }
}

impl ProjectionSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.stages.is_empty() {
            return Err(Error::Config("projection schedule has no stages".into()));
        }
        for s in &self.stages {
            if s.steps == 0 || !(s.learning_rate > 0.0) {
                return Err(Error::Config(format!("invalid schedule stage {s:?}")));
            }
        }
        Ok(())
    }

    /// Stage for outer iteration `iteration`; past the last boundary the
    /// last stage stays in force.
    pub fn stage_for(&self, iteration: usize) -> ScheduleStage {
        *self
            .stages
            .iter()
            .find(|s| iteration < s.until_iteration)
            .unwrap_or_else(|| self.stages.last().expect("validated schedule"))
    }
}

/// Serializable description of a prior. Weights are regenerated from the
/// seed, never stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorSpec {
    NormalizedLinear {
        n: usize,
        k: usize,
        #[serde(default = "default_radius")]
        radius: f64,
        #[serde(default)]
        seed: u64,
    },
    ReluMlp {
        n: usize,
        k: usize,
        hidden: Vec<usize>,
        #[serde(default = "default_radius")]
        radius: f64,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        schedule: ProjectionSchedule,
    },
    Sparse {
        n: usize,
        s: usize,
    },
}

fn default_radius() -> f64 {
    1.0
}

impl PriorSpec {
    pub fn n(&self) -> usize {
        match *self {
            PriorSpec::NormalizedLinear { n, .. } | PriorSpec::ReluMlp { n, .. } | PriorSpec::Sparse { n, .. } => n,
        }
    }

    /// Same prior at a different ambient dimension.
    pub fn with_n(&self, n: usize) -> Self {
        let mut spec = self.clone();
        match &mut spec {
            PriorSpec::NormalizedLinear { n: d, .. }
            | PriorSpec::ReluMlp { n: d, .. }
            | PriorSpec::Sparse { n: d, .. } => *d = n,
        }
        spec
    }

    pub fn build(&self) -> Result<GenerativePrior> {
        match self {
            &PriorSpec::NormalizedLinear { n, k, radius, seed } => {
                if k == 0 || k > n {
                    return Err(Error::Config(format!("need 1 <= k <= n, got k={k}, n={n}")));
                }
                let mut rng = rng::stream(seed, &[rng::tag::PRIOR]);
                let w = DMatrix::from_fn(n, k, |_, _| rng.sample::<f64, _>(StandardNormal));
                GenerativePrior::normalized_linear(w, radius)
            }
            PriorSpec::ReluMlp {
                n,
                k,
                hidden,
                radius,
                seed,
                schedule,
            } => {
                let mut widths = vec![*k];
                widths.extend(hidden.iter().copied());
                widths.push(*n);
                if widths.contains(&0) {
                    return Err(Error::Config("MLP layer widths must be positive".into()));
                }
                let mut rng = rng::stream(*seed, &[rng::tag::PRIOR]);
                let layers = widths
                    .windows(2)
                    .map(|w| DenseLayer::random(w[0], w[1], &mut rng))
                    .collect();
                GenerativePrior::relu_mlp(layers, *radius, schedule.clone())
            }
            &PriorSpec::Sparse { n, s } => GenerativePrior::sparse(n, s),
        }
    }
}

/// Fully connected layer `x ↦ W x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
}

impl DenseLayer {
    /// He-style Gaussian initialization with a small bias.
    pub fn random<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Self {
        let scale = (2.0 / fan_in as f64).sqrt();
        let weights = DMatrix::from_fn(fan_out, fan_in, |_, _| scale * rng.sample::<f64, _>(StandardNormal));
        let bias = DVector::from_fn(fan_out, |_, _| 0.1 * rng.sample::<f64, _>(StandardNormal));
        Self { weights, bias }
    }
}

#[derive(Debug, Clone)]
struct LinearRange {
    weights: DMatrix<f64>,
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    radius: f64,
}

#[derive(Debug, Clone)]
struct MlpRange {
    layers: Vec<DenseLayer>,
    radius: f64,
}

#[derive(Debug, Clone)]
enum PriorKind {
    NormalizedLinear(LinearRange),
    ReluMlp(MlpRange),
    Sparse { s: usize },
}

/// Mutable per-decode state of the projection: the warm-start latent and the
/// random stream used to initialize it.
#[derive(Debug, Clone)]
pub struct ProjectionState {
    latent: Option<Vec<f64>>,
    rng: StreamRng,
}

impl ProjectionState {
    pub fn new(seed: u64) -> Self {
        Self {
            latent: None,
            rng: rng::stream(seed, &[rng::tag::PRIOR]),
        }
    }

    pub fn latent(&self) -> Option<&[f64]> {
        self.latent.as_deref()
    }

    pub fn set_latent(&mut self, z: Vec<f64>) {
        self.latent = Some(z);
    }
}

/// A projection oracle onto `K ⊆ S^{n−1}`.
#[derive(Debug, Clone)]
pub struct GenerativePrior {
    n: usize,
    kind: PriorKind,
    schedule: ProjectionSchedule,
}

impl GenerativePrior {
    pub fn normalized_linear(weights: DMatrix<f64>, radius: f64) -> Result<Self> {
        let (n, k) = weights.shape();
        if k == 0 || k > n {
            return Err(Error::Config(format!("need 1 <= k <= n, got k={k}, n={n}")));
        }
        if !(radius > 0.0) {
            return Err(Error::Config(format!("latent radius must be > 0, got {radius}")));
        }
        let qr = weights.clone().qr();
        let (q, r) = qr.unpack();
        let scale = weights.norm().max(1.0);
        if (0..k).any(|i| r[(i, i)].abs() <= 1e-12 * scale) {
            return Err(Error::Config("generator matrix is rank deficient".into()));
        }
        Ok(Self {
            n,
            kind: PriorKind::NormalizedLinear(LinearRange { weights, q, r, radius }),
            schedule: ProjectionSchedule::default(),
        })
    }

    pub fn relu_mlp(layers: Vec<DenseLayer>, radius: f64, schedule: ProjectionSchedule) -> Result<Self> {
        schedule.validate()?;
        if layers.is_empty() {
            return Err(Error::Config("MLP needs at least one layer".into()));
        }
        for pair in layers.windows(2) {
            check_len(pair[0].weights.nrows(), pair[1].weights.ncols(), "MLP layer chaining")?;
        }
        for layer in &layers {
            check_len(layer.weights.nrows(), layer.bias.len(), "MLP bias")?;
        }
        if !(radius > 0.0) {
            return Err(Error::Config(format!("latent radius must be > 0, got {radius}")));
        }
        let n = layers.last().unwrap().weights.nrows();
        Ok(Self {
            n,
            kind: PriorKind::ReluMlp(MlpRange { layers, radius }),
            schedule,
        })
    }

    pub fn sparse(n: usize, s: usize) -> Result<Self> {
        if s == 0 || s > n {
            return Err(Error::Config(format!("need 1 <= s <= n, got s={s}, n={n}")));
        }
        Ok(Self {
            n,
            kind: PriorKind::Sparse { s },
            schedule: ProjectionSchedule::default(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Latent dimension (`s` for the sparse prior).
    pub fn latent_dim(&self) -> usize {
        match &self.kind {
            PriorKind::NormalizedLinear(l) => l.weights.ncols(),
            PriorKind::ReluMlp(m) => m.layers[0].weights.ncols(),
            PriorKind::Sparse { s } => *s,
        }
    }

    pub fn radius(&self) -> Option<f64> {
        match &self.kind {
            PriorKind::NormalizedLinear(l) => Some(l.radius),
            PriorKind::ReluMlp(m) => Some(m.radius),
            PriorKind::Sparse { .. } => None,
        }
    }

    pub fn schedule(&self) -> &ProjectionSchedule {
        &self.schedule
    }

    /// True when projection is a deterministic closed form (no latent search).
    pub fn is_exact(&self) -> bool {
        !matches!(self.kind, PriorKind::ReluMlp(_))
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            PriorKind::NormalizedLinear(_) => "normalized_linear",
            PriorKind::ReluMlp(_) => "relu_mlp",
            PriorKind::Sparse { .. } => "sparse",
        }
    }

    /// Projects `v` with a fresh state (outer iteration 0, seed 0).
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.project_with(v, 0, &mut ProjectionState::new(0))
    }

    /// Projects `v` onto the range. `iteration` selects the inner schedule
    /// stage for the MLP prior; `state` carries its warm-start latent.
    pub fn project_with(&self, v: &[f64], iteration: usize, state: &mut ProjectionState) -> Result<Vec<f64>> {
        check_len(self.n, v.len(), "projection input")?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Projection("input has non-finite entries".into()));
        }
        match &self.kind {
            PriorKind::NormalizedLinear(lin) => lin.project(v),
            PriorKind::Sparse { s } => project_sparse(v, *s),
            PriorKind::ReluMlp(mlp) => {
                let stage = self.schedule.stage_for(iteration);
                mlp.project(v, stage, state)
            }
        }
    }

    /// Upper bound on the Lipschitz constant of the latent map.
    pub fn lipschitz_estimate(&self) -> Result<f64> {
        match &self.kind {
            PriorKind::NormalizedLinear(l) => Ok(spectral_norm(&l.weights)),
            PriorKind::ReluMlp(m) => Ok(m.layers.iter().map(|l| spectral_norm(&l.weights)).product()),
            PriorKind::Sparse { .. } => Err(Error::NotApplicable("the sparse prior has no latent map".into())),
        }
    }

    /// Image of the latent `z` (before radius clamping), on the sphere.
    pub fn generate(&self, z: &[f64]) -> Result<Vec<f64>> {
        check_len(self.latent_dim(), z.len(), "latent")?;
        let image = match &self.kind {
            PriorKind::NormalizedLinear(l) => (&l.weights * DVector::from_column_slice(z)).as_slice().to_vec(),
            PriorKind::ReluMlp(m) => m.forward(z).output,
            PriorKind::Sparse { .. } => return Err(Error::NotApplicable("the sparse prior has no latent map".into())),
        };
        normalized(&image, DEGENERATE_IMAGE_NORM).ok_or_else(|| Error::Projection("latent maps to (near) zero".into()))
    }

    /// Draws a point of the range.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        match &self.kind {
            PriorKind::Sparse { s } => {
                let support = rand::seq::index::sample(rng, self.n, *s);
                let mut x = vec![0.0; self.n];
                loop {
                    for i in support.iter() {
                        x[i] = rng.sample(StandardNormal);
                    }
                    if let Some(u) = normalized(&x, DEGENERATE_IMAGE_NORM) {
                        return Ok(u);
                    }
                }
            }
            PriorKind::NormalizedLinear(_) | PriorKind::ReluMlp(_) => {
                let radius = self.radius().unwrap();
                for _ in 0..MAX_SAMPLING_ATTEMPTS {
                    let z = sample_ball(rng, self.latent_dim(), radius);
                    if let Ok(x) = self.generate(&z) {
                        return Ok(x);
                    }
                }
                Err(Error::Sampling {
                    attempts: MAX_SAMPLING_ATTEMPTS,
                    reason: "every latent mapped to (near) zero".into(),
                })
            }
        }
    }

    /// `‖project(x) − x‖₂`, a membership residual for points of the range.
    pub fn range_residual(&self, x: &[f64]) -> Result<f64> {
        let p = self.project(x)?;
        Ok(linalg::dist2(&p, x))
    }
}

impl LinearRange {
    fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        let v = DVector::from_column_slice(v);
        let coeffs = self.q.transpose() * &v;
        let mut z = self
            .r
            .solve_upper_triangular(&coeffs)
            .ok_or_else(|| Error::Projection("singular triangular factor".into()))?;
        let zn = z.norm();
        if zn > self.radius {
            z *= self.radius / zn;
        }
        let image = &self.weights * z;
        normalized(image.as_slice(), PROJECTION_FLOOR)
            .ok_or_else(|| Error::Projection("input is orthogonal to the generator's column space".into()))
    }
}

fn project_sparse(v: &[f64], s: usize) -> Result<Vec<f64>> {
    normalized(&hard_threshold(v, s), PROJECTION_FLOOR).ok_or_else(|| Error::Projection("input is zero".into()))
}

/// Hard thresholding: keep the `s` largest magnitudes (ties to the lower
/// index), zero the rest. No normalization.
pub fn hard_threshold(v: &[f64], s: usize) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&i, &j| v[j].abs().total_cmp(&v[i].abs()).then(i.cmp(&j)));
    let mut out = vec![0.0; v.len()];
    for &i in order.iter().take(s) {
        out[i] = v[i];
    }
    out
}

struct ForwardPass {
    /// Pre-activations of every layer; the last one is the network output.
    pre: Vec<DVector<f64>>,
    output: Vec<f64>,
}

impl MlpRange {
    fn forward(&self, z: &[f64]) -> ForwardPass {
        let mut act = DVector::from_column_slice(z);
        let mut pre = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let p = &layer.weights * &act + &layer.bias;
            act = if i + 1 < self.layers.len() {
                p.map(|v| v.max(0.0))
            } else {
                p.clone()
            };
            pre.push(p);
        }
        ForwardPass {
            output: act.as_slice().to_vec(),
            pre,
        }
    }

    /// `‖G(z) − v‖²` and its gradient in `z`; `None` when `h(z) ≈ 0`.
    fn loss_and_grad(&self, z: &[f64], v: &[f64]) -> Option<(f64, Vec<f64>)> {
        let pass = self.forward(z);
        let h_norm = norm2(&pass.output);
        if !(h_norm > PROJECTION_FLOOR) {
            return None;
        }
        let g: Vec<f64> = pass.output.iter().map(|x| x / h_norm).collect();
        let diff: Vec<f64> = g.iter().zip(v).map(|(a, b)| a - b).collect();
        let loss = linalg::dot(&diff, &diff);
        // d/dh of ‖h/‖h‖ − v‖² = (I − g gᵀ) 2(g − v) / ‖h‖
        let radial = linalg::dot(&diff, &g);
        let mut delta = DVector::from_iterator(
            g.len(),
            diff.iter().zip(&g).map(|(d, gi)| 2.0 * (d - radial * gi) / h_norm),
        );
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let back = layer.weights.transpose() * &delta;
            if i == 0 {
                return Some((loss, back.as_slice().to_vec()));
            }
            let mask = &pass.pre[i - 1];
            delta = back.zip_map(mask, |d, p| if p > 0.0 { d } else { 0.0 });
        }
        unreachable!("at least one layer")
    }

    fn project(&self, v: &[f64], stage: ScheduleStage, state: &mut ProjectionState) -> Result<Vec<f64>> {
        let k = self.layers[0].weights.ncols();
        let mut z = match state.latent.take() {
            Some(z) if z.len() == k => z,
            _ => sample_ball(&mut state.rng, k, self.radius),
        };
        let mut adam = Adam::new(k, stage.learning_rate);
        let mut best: Option<(f64, Vec<f64>)> = None;
        for _ in 0..stage.steps {
            let Some((loss, grad)) = self.loss_and_grad(&z, v) else {
                z = sample_ball(&mut state.rng, k, self.radius);
                continue;
            };
            if best.as_ref().is_none_or(|(b, _)| loss < *b) {
                best = Some((loss, z.clone()));
            }
            adam.step(&mut z, &grad);
            clamp_to_ball(&mut z, self.radius);
        }
        if let Some((loss, _)) = self.loss_and_grad(&z, v) {
            if best.as_ref().is_none_or(|(b, _)| loss < *b) {
                best = Some((loss, z.clone()));
            }
        }
        let (_, z) = best.ok_or_else(|| Error::Projection("latent search never left the degenerate region".into()))?;
        let pass = self.forward(&z);
        let x = normalized(&pass.output, PROJECTION_FLOOR)
            .ok_or_else(|| Error::Projection("latent maps to zero".into()))?;
        state.latent = Some(z);
        Ok(x)
    }
}

struct Adam {
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(dim: usize, lr: f64) -> Self {
        Self {
            lr,
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * grad[i];
            self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * grad[i] * grad[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + Self::EPS);
        }
    }
}

fn clamp_to_ball(z: &mut [f64], radius: f64) {
    let norm = norm2(z);
    if norm > radius {
        z.iter_mut().for_each(|v| *v *= radius / norm);
    }
}

/// Uniform draw from the ball `B₂ᵏ(r)`.
pub fn sample_ball<R: Rng + ?Sized>(rng: &mut R, k: usize, radius: f64) -> Vec<f64> {
    let dir = rng::unit_vec(rng, k);
    let u: f64 = rng.random();
    let scale = radius * u.powf(1.0 / k as f64);
    dir.into_iter().map(|d| d * scale).collect()
}

/// Largest singular value by power iteration on `WᵀW`.
pub fn spectral_norm(w: &DMatrix<f64>) -> f64 {
    let gram = w.transpose() * w;
    let k = gram.ncols();
    let mut v = DVector::from_element(k, 1.0 / (k as f64).sqrt());
    // a fixed start can be orthogonal to the top eigenvector; perturb deterministically
    for (i, x) in v.iter_mut().enumerate() {
        *x += 1e-3 * ((i as f64 + 1.0) * 0.618_033_988_75).fract();
    }
    v.normalize_mut();
    let mut estimate = 0.0;
    for _ in 0..100_000 {
        let mut next = &gram * &v;
        let norm = next.norm();
        if norm == 0.0 {
            return 0.0;
        }
        next /= norm;
        let converged = (norm - estimate).abs() <= 1e-15 * norm && (&next - &v).norm() < 1e-13;
        estimate = norm;
        v = next;
        if converged {
            break;
        }
    }
    estimate.sqrt()
}

/// Signal-generation settings for one trial.
#[derive(Debug, Clone, Copy)]
pub struct SignalSpec<'a> {
    pub prior: &'a GenerativePrior,
    /// Required bound `ρ` on the ℓ∞ norm of the measured signal.
    pub enforce_linf: Option<f64>,
    pub precondition_with_hadamard: bool,
}

impl<'a> SignalSpec<'a> {
    pub fn plain(prior: &'a GenerativePrior) -> Self {
        Self {
            prior,
            enforce_linf: None,
            precondition_with_hadamard: false,
        }
    }
}

/// A ground-truth signal `x*` together with the preconditioner, if any, that
/// the measurement pipeline applies before `A`.
#[derive(Debug, Clone)]
pub struct Signal {
    pub x_star: Vec<f64>,
    pub preconditioner: Option<HadamardPreconditioner>,
}

impl Signal {
    /// The vector that actually meets `A`: `H x*` or `x*`.
    pub fn effective(&self) -> Vec<f64> {
        match &self.preconditioner {
            Some(h) => h.apply(&self.x_star).expect("preconditioner sized to the signal"),
            None => self.x_star.clone(),
        }
    }

    /// ℓ∞ norm of [`effective`](Self::effective).
    pub fn rho(&self) -> f64 {
        norm_inf(&self.effective())
    }
}

/// Samples `x*` from the prior, enforcing the optional ℓ∞ bound either by
/// redrawing the Hadamard signs or by rejecting signals.
pub fn sample_signal<R: Rng + ?Sized>(spec: &SignalSpec<'_>, rng: &mut R) -> Result<Signal> {
    let n = spec.prior.n();
    if spec.precondition_with_hadamard {
        let x_star = spec.prior.sample(rng)?;
        for _ in 0..MAX_SAMPLING_ATTEMPTS {
            let h = HadamardPreconditioner::random(n, rng.random())?;
            let signal = Signal {
                x_star: x_star.clone(),
                preconditioner: Some(h),
            };
            if spec.enforce_linf.is_none_or(|rho| signal.rho() <= rho) {
                return Ok(signal);
            }
        }
        return Err(Error::Sampling {
            attempts: MAX_SAMPLING_ATTEMPTS,
            reason: format!("no Hadamard draw met ‖Hx*‖∞ <= {:?}", spec.enforce_linf),
        });
    }
    for _ in 0..MAX_SAMPLING_ATTEMPTS {
        let x_star = spec.prior.sample(rng)?;
        if spec.enforce_linf.is_none_or(|rho| norm_inf(&x_star) <= rho) {
            return Ok(Signal {
                x_star,
                preconditioner: None,
            });
        }
    }
    Err(Error::Sampling {
        attempts: MAX_SAMPLING_ATTEMPTS,
        reason: format!("no signal met ‖x*‖∞ <= {:?}", spec.enforce_linf),
    })
}
