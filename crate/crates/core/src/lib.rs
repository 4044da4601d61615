//! Robust 1-bit compressive sensing with randomly signed partial Gaussian
//! circulant sensing operators and projection-based signal priors.
//!
//! The crate is organized bottom-up:
//!
//! * [`operators`]: FFT-backed `A = R_Ω C_g D_ξ`, the randomly signed
//!   Walsh–Hadamard preconditioner and a dense control arm.
//! * [`measurement`]: quantization models, gains `λ`, corruption.
//! * [`priors`]: projection oracles onto subsets of the unit sphere.
//! * [`solvers`]: correlation-maximizing decoders.
//! * [`experiment`]: the seeded measure → corrupt → decode pipeline.
//! * [`verification`]: empirical checks of the concentration, orthogonality,
//!   restricted-eigenvalue and error-scaling guarantees, plus timing.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod linalg;
pub mod measurement;
pub mod operators;
pub mod priors;
pub mod rng;
pub mod solvers;
pub mod verification;

pub use error::{Error, Result};
pub use experiment::{run_trial, run_trials, DecoderKind, ProblemSpec, TrialRecord, TrialSeeds};

pub use measurement::{
    adversarially_corrupt, lambda_of, measure, CorruptionBudget, CorruptionStrategy, NoiseKind, NoiseModel,
};
pub use operators::{
    circulant_multiply, CirculantOperator, CirculantSpec, DenseOperator, HadamardPreconditioner, Preconditioned,
    SensingOperator, StackedCirculant,
};
pub use priors::{sample_signal, GenerativePrior, PriorSpec, ProjectionSchedule, Signal, SignalSpec};
pub use solvers::{
    biht_decode, direct_projection_decode, pgd_decode, run_restarts, DecoderConfig, ReconstructionResult,
};
