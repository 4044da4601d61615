use crate::error::{check_len, Error, Result};
use crate::rng;

use super::{CirculantOperator, SensingOperator};

/// Independent randomly signed circulant blocks stacked vertically, for
/// row counts beyond `n`. Block `0` is drawn from `seed` itself, so for
/// `m ≤ n` this is the plain partial circulant operator; block `j ≥ 1` uses
/// a seed derived from `(seed, j)`. The last block is truncated to the
/// remaining rows.
#[derive(Debug)]
pub struct StackedCirculant {
    blocks: Vec<CirculantOperator>,
    rows: usize,
    cols: usize,
}

impl StackedCirculant {
    pub fn random(n: usize, m: usize, seed: u64) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::Config("n and m must be >= 1".into()));
        }
        let count = m.div_ceil(n);
        let mut blocks = Vec::with_capacity(count);
        for j in 0..count {
            let block_seed = if j == 0 {
                seed
            } else {
                rng::derive_seed(seed, &[j as u64])
            };
            // drawn at full size and truncated, so every prefix of rows is
            // shared across different m
            let full = CirculantOperator::random(n, n, block_seed)?;
            let rows = (m - j * n).min(n);
            blocks.push(if rows == n {
                full
            } else {
                CirculantOperator::new(full.spec().with_rows(rows)?)?
            });
        }
        Ok(Self {
            blocks,
            rows: m,
            cols: n,
        })
    }

    pub fn blocks(&self) -> &[CirculantOperator] {
        &self.blocks
    }
}

impl SensingOperator for StackedCirculant {
    fn rows(&self) -> usize {
        self.rows
    }

    fn cols(&self) -> usize {
        self.cols
    }

    fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.cols, x.len(), "stacked forward input")?;
        let mut out = Vec::with_capacity(self.rows);
        for block in &self.blocks {
            out.extend(block.forward(x)?);
        }
        Ok(out)
    }

    fn adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len(self.rows, y.len(), "stacked adjoint input")?;
        let mut out = vec![0.0; self.cols];
        let mut offset = 0;
        for block in &self.blocks {
            let part = block.adjoint(&y[offset..offset + block.m()])?;
            for (o, p) in out.iter_mut().zip(part) {
                *o += p;
            }
            offset += block.m();
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot;

    #[test]
    fn single_block_matches_plain_operator() {
        let stacked = StackedCirculant::random(32, 20, 7).unwrap();
        let plain = CirculantOperator::new(
            CirculantOperator::random(32, 32, 7)
                .unwrap()
                .spec()
                .with_rows(20)
                .unwrap(),
        )
        .unwrap();
        let x = rng::gaussian_vec(&mut rng::stream(1, &[]), 32);
        assert_eq!(stacked.forward(&x).unwrap(), plain.forward(&x).unwrap());
    }

    #[test]
    fn rows_beyond_n_extend_the_prefix() {
        let short = StackedCirculant::random(16, 16, 3).unwrap();
        let long = StackedCirculant::random(16, 40, 3).unwrap();
        assert_eq!(long.blocks().len(), 3);
        let x = rng::gaussian_vec(&mut rng::stream(2, &[]), 16);
        let (a, b) = (short.forward(&x).unwrap(), long.forward(&x).unwrap());
        assert_eq!(b.len(), 40);
        assert_eq!(&b[..16], &a[..]);
    }

    #[test]
    fn adjoint_identity() {
        let op = StackedCirculant::random(16, 37, 5).unwrap();
        let x = rng::gaussian_vec(&mut rng::stream(3, &[]), 16);
        let y = rng::gaussian_vec(&mut rng::stream(4, &[]), 37);
        let lhs = dot(&op.forward(&x).unwrap(), &y);
        let rhs = dot(&x, &op.adjoint(&y).unwrap());
        assert!((lhs - rhs).abs() < 1e-9 * lhs.abs().max(1.0));
    }
}
