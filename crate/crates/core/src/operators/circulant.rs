use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::SensingOperator;
use crate::error::{check_len, Error, Result};
use crate::linalg::{norm2, norm_inf};
use crate::rng;

/// Imaginary residue tolerated after a real-to-real round trip through the
/// complex FFT, relative to the input norm.
const IMAG_RESIDUE_TOL: f64 = 1e-9;

/// Computes `y_i = Σ_j g_{(j−i) mod n} x_j`, i.e. `C_g x` with
/// `C_g(i, j) = g_{j−i}`, via length-`n` FFTs.
pub fn circulant_multiply(g: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    if g.is_empty() {
        return Err(Error::Config("circulant generator must be non-empty".into()));
    }
    check_len(g.len(), x.len(), "circulant_multiply input")?;
    let engine = FftEngine::new(g)?;
    engine.correlate(x)
}

struct FftEngine {
    n: usize,
    spectrum: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    generator_scale: f64,
}

impl FftEngine {
    fn new(g: &[f64]) -> Result<Self> {
        let n = g.len();
        let mut planner = FftPlanner::<f64>::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let mut spectrum: Vec<Complex64> = g.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let mut scratch = vec![Complex64::default(); forward.get_inplace_scratch_len()];
        forward.process_with_scratch(&mut spectrum, &mut scratch);
        Ok(Self {
            n,
            spectrum,
            forward,
            inverse,
            generator_scale: norm_inf(g).max(1.0),
        })
    }

    /// `Σ_j g_{j−i} x_j` (conjugated spectrum) when `conjugate`, otherwise
    /// the cyclic convolution `Σ_i g_{j−i} x_i`.
    fn cyclic(&self, x: &[f64], conjugate: bool) -> Result<Vec<f64>> {
        let n = self.n;
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let scratch_len = self
            .forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len());
        let mut scratch = vec![Complex64::default(); scratch_len];
        self.forward.process_with_scratch(&mut buf, &mut scratch);
        for (b, s) in buf.iter_mut().zip(&self.spectrum) {
            *b *= if conjugate { s.conj() } else { *s };
        }
        self.inverse.process_with_scratch(&mut buf, &mut scratch);

        let scale = 1.0 / n as f64;
        let mut imag_residue = 0.0f64;
        let out = buf
            .iter()
            .map(|c| {
                imag_residue = imag_residue.max((c.im * scale).abs());
                c.re * scale
            })
            .collect();
        let limit = IMAG_RESIDUE_TOL * norm2(x) * self.generator_scale;
        if imag_residue > limit && imag_residue > f64::MIN_POSITIVE {
            return Err(Error::InternalConsistency(format!(
                "imaginary residue {imag_residue:e} exceeds {limit:e} after inverse FFT"
            )));
        }
        Ok(out)
    }

    fn correlate(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.cyclic(x, true)
    }

    fn convolve(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.cyclic(x, false)
    }
}

/// Parameters of `A = R_Ω C_g D_ξ` with `Ω = [m]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CirculantSpec {
    g: Vec<f64>,
    xi: Vec<f64>,
    m: usize,
    seed: Option<u64>,
}

impl CirculantSpec {
    /// Draws `g ~ N(0, I_n)` and a Rademacher `ξ` from `seed`.
    pub fn random(n: usize, m: usize, seed: u64) -> Result<Self> {
        let mut rng = rng::stream(seed, &[rng::tag::OPERATOR]);
        let g = rng::gaussian_vec(&mut rng, n);
        let xi = rng::rademacher_vec(&mut rng, n);
        let mut spec = Self::from_parts(g, xi, m)?;
        spec.seed = Some(seed);
        Ok(spec)
    }

    pub fn from_parts(g: Vec<f64>, xi: Vec<f64>, m: usize) -> Result<Self> {
        let n = g.len();
        if n == 0 {
            return Err(Error::Config("ambient dimension n must be at least 1".into()));
        }
        check_len(n, xi.len(), "sign vector xi")?;
        if m == 0 || m > n {
            return Err(Error::Config(format!("need 1 <= m <= n, got m={m}, n={n}")));
        }
        if let Some(bad) = xi.iter().find(|&&s| s != 1.0 && s != -1.0) {
            return Err(Error::Config(format!("sign vector entry {bad} is not ±1")));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("generator has non-finite entries".into()));
        }
        Ok(Self { g, xi, m, seed: None })
    }

    pub fn n(&self) -> usize {
        self.g.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Same generator and signs, different number of retained rows.
    pub fn with_rows(&self, m: usize) -> Result<Self> {
        let mut spec = Self::from_parts(self.g.clone(), self.xi.clone(), m)?;
        spec.seed = self.seed;
        Ok(spec)
    }

    /// Entry `(i, j)` of `A`: `g_{(j−i) mod n} ξ_j`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let n = self.n();
        self.g[(j + n - i % n) % n] * self.xi[j]
    }
}

/// FFT-backed realization of a [`CirculantSpec`]. Immutable and shareable
/// across threads; scratch buffers are allocated per call.
pub struct CirculantOperator {
    spec: CirculantSpec,
    engine: FftEngine,
}

impl fmt::Debug for CirculantOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CirculantOperator")
            .field("n", &self.spec.n())
            .field("m", &self.spec.m())
            .field("seed", &self.spec.seed())
            .finish()
    }
}

impl CirculantOperator {
    pub fn new(spec: CirculantSpec) -> Result<Self> {
        let engine = FftEngine::new(&spec.g)?;
        Ok(Self { spec, engine })
    }

    pub fn random(n: usize, m: usize, seed: u64) -> Result<Self> {
        Self::new(CirculantSpec::random(n, m, seed)?)
    }

    pub fn spec(&self) -> &CirculantSpec {
        &self.spec
    }

    pub fn n(&self) -> usize {
        self.spec.n()
    }

    pub fn m(&self) -> usize {
        self.spec.m()
    }

    /// `A x = R_Ω C_g D_ξ x`.
    pub fn apply_forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n(), x.len(), "apply_forward input")?;
        let flipped: Vec<f64> = x.iter().zip(&self.spec.xi).map(|(a, s)| a * s).collect();
        let mut y = self.engine.correlate(&flipped)?;
        y.truncate(self.m());
        Ok(y)
    }

    /// `Aᵀ b` when `with_sign_flips`, otherwise `Ãᵀ b = C_gᵀ R_Ωᵀ b`.
    pub fn apply_adjoint(&self, b: &[f64], with_sign_flips: bool) -> Result<Vec<f64>> {
        check_len(self.m(), b.len(), "apply_adjoint input")?;
        let mut padded = vec![0.0; self.n()];
        padded[..b.len()].copy_from_slice(b);
        let mut z = self.engine.convolve(&padded)?;
        if with_sign_flips {
            z.iter_mut().zip(&self.spec.xi).for_each(|(v, s)| *v *= s);
        }
        Ok(z)
    }
}

impl SensingOperator for CirculantOperator {
    fn rows(&self) -> usize {
        self.m()
    }
    fn cols(&self) -> usize {
        self.n()
    }
    fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.apply_forward(x)
    }
    fn adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.apply_adjoint(y, true)
    }
}
