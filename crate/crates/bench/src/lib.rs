//! Shared fixtures for the criterion benchmarks.

use onebit_core::rng;
use onebit_core::{CirculantOperator, DenseOperator};

/// Shapes benchmarked for the operator core: `(n, m)`.
pub const SHAPES: [(usize, usize); 3] = [(784, 200), (4096, 1024), (12288, 5000)];

/// Largest dense matrix worth building in a benchmark run.
pub const DENSE_CAP: usize = 70_000_000;

pub struct OperatorFixture {
    pub circulant: CirculantOperator,
    pub dense: Option<DenseOperator>,
    pub x: Vec<f64>,
    pub b: Vec<f64>,
}

pub fn operator_fixture(n: usize, m: usize, seed: u64) -> OperatorFixture {
    let circulant = CirculantOperator::random(n, m, seed).expect("valid shape");
    let dense = DenseOperator::from_circulant_capped(circulant.spec(), DENSE_CAP).ok();
    OperatorFixture {
        x: rng::gaussian_vec(&mut rng::stream(seed, &[1]), n),
        b: rng::gaussian_vec(&mut rng::stream(seed, &[2]), m),
        circulant,
        dense,
    }
}
