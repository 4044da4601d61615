//! Matrix-free sensing operators.
//!
//! The measurement map is `A = R_Ω C_g D_ξ` with `Ω = [m]`: a partial
//! Gaussian circulant matrix with random column sign flips, applied through
//! length-`n` FFTs. [`DenseOperator`] materializes the same map row by row
//! and serves as the brute-force control arm. [`Preconditioned`] composes an
//! operator with a randomly signed Walsh–Hadamard transform (`A H`).
//! [`StackedCirculant`] stacks independent blocks when more than `n` rows
//! are needed.

mod circulant;
mod dense;
mod hadamard;
mod stacked;

pub use circulant::{circulant_multiply, CirculantOperator, CirculantSpec};
pub use dense::DenseOperator;
pub use hadamard::{fwht_inplace, HadamardPreconditioner};
pub use stacked::StackedCirculant;

use crate::error::Result;

/// A real linear map `R^cols -> R^rows` with an exact adjoint.
pub trait SensingOperator: Send + Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn forward(&self, x: &[f64]) -> Result<Vec<f64>>;
    fn adjoint(&self, y: &[f64]) -> Result<Vec<f64>>;
}

impl<T: SensingOperator + ?Sized> SensingOperator for &T {
    fn rows(&self) -> usize {
        (**self).rows()
    }
    fn cols(&self) -> usize {
        (**self).cols()
    }
    fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).forward(x)
    }
    fn adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        (**self).adjoint(y)
    }
}

impl<T: SensingOperator + ?Sized> SensingOperator for Box<T> {
    fn rows(&self) -> usize {
        (**self).rows()
    }
    fn cols(&self) -> usize {
        (**self).cols()
    }
    fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).forward(x)
    }
    fn adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        (**self).adjoint(y)
    }
}

/// `A H`: the signal is passed through the Hadamard preconditioner before
/// measurement. The adjoint is `Hᵀ Aᵀ`.
#[derive(Debug, Clone)]
pub struct Preconditioned<A> {
    inner: A,
    hadamard: HadamardPreconditioner,
}

impl<A: SensingOperator> Preconditioned<A> {
    pub fn new(inner: A, hadamard: HadamardPreconditioner) -> Result<Self> {
        crate::error::check_len(inner.cols(), hadamard.len(), "preconditioner size")?;
        Ok(Self { inner, hadamard })
    }

    pub fn inner(&self) -> &A {
        &self.inner
    }

    pub fn hadamard(&self) -> &HadamardPreconditioner {
        &self.hadamard
    }
}

impl<A: SensingOperator> SensingOperator for Preconditioned<A> {
    fn rows(&self) -> usize {
        self.inner.rows()
    }
    fn cols(&self) -> usize {
        self.inner.cols()
    }
    fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.inner.forward(&self.hadamard.apply(x)?)
    }
    fn adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.hadamard.adjoint(&self.inner.adjoint(y)?)
    }
}
