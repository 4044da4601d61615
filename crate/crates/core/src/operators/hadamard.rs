use crate::error::{check_len, Error, Result};
use crate::rng;

/// In-place unnormalized Walsh–Hadamard butterfly. `data.len()` must be a
/// power of two.
pub fn fwht_inplace(data: &mut [f64]) {
    let n = data.len();
    debug_assert!(n.is_power_of_two());
    let mut half = 1;
    while half < n {
        for block in data.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        half *= 2;
    }
}

/// Randomly signed Hadamard transform `H = (1/√n) W_n D_ε`.
///
/// `H` is orthogonal but not symmetric; use [`adjoint`](Self::adjoint) to
/// map estimates back.
#[derive(Debug, Clone, PartialEq)]
pub struct HadamardPreconditioner {
    eps: Vec<f64>,
}

impl HadamardPreconditioner {
    pub fn random(n: usize, seed: u64) -> Result<Self> {
        check_power_of_two(n)?;
        let mut rng = rng::stream(seed, &[rng::tag::HADAMARD]);
        Self::from_signs(rng::rademacher_vec(&mut rng, n))
    }

    pub fn from_signs(eps: Vec<f64>) -> Result<Self> {
        check_power_of_two(eps.len())?;
        if eps.iter().any(|&s| s != 1.0 && s != -1.0) {
            return Err(Error::Config("Hadamard signs must be ±1".into()));
        }
        Ok(Self { eps })
    }

    pub fn len(&self) -> usize {
        self.eps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps.is_empty()
    }

    pub fn signs(&self) -> &[f64] {
        &self.eps
    }

    fn scale(&self) -> f64 {
        1.0 / (self.len() as f64).sqrt()
    }

    /// `H x`
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.len(), x.len(), "fwht_apply input")?;
        let s = self.scale();
        let mut out: Vec<f64> = x.iter().zip(&self.eps).map(|(a, e)| a * e).collect();
        fwht_inplace(&mut out);
        out.iter_mut().for_each(|v| *v *= s);
        Ok(out)
    }

    /// `Hᵀ y = (1/√n) D_ε W_n y`
    pub fn adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len(self.len(), y.len(), "fwht_adjoint input")?;
        let s = self.scale();
        let mut out = y.to_vec();
        fwht_inplace(&mut out);
        out.iter_mut().zip(&self.eps).for_each(|(v, e)| *v *= s * e);
        Ok(out)
    }
}

fn check_power_of_two(n: usize) -> Result<()> {
    if n.is_power_of_two() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "Hadamard preconditioning needs a power-of-two dimension, got {n}"
        )))
    }
}
