use super::{CirculantSpec, SensingOperator};
use crate::error::{check_len, Error, Result};

/// Explicit row-major `m × n` matrix. Used as the unstructured control arm
/// and as a brute-force oracle for the FFT operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseOperator {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_len(rows * cols, data.len(), "dense matrix storage")?;
        Ok(Self { rows, cols, data })
    }

    /// Materializes `R_Ω C_g D_ξ` one row at a time; the full `n × n`
    /// circulant is never formed.
    pub fn from_circulant(spec: &CirculantSpec) -> Self {
        let (m, n) = (spec.m(), spec.n());
        let mut data = Vec::with_capacity(m * n);
        for i in 0..m {
            data.extend((0..n).map(|j| spec.entry(i, j)));
        }
        Self { rows: m, cols: n, data }
    }

    /// Same as [`from_circulant`](Self::from_circulant) but refuses to
    /// allocate more than `cap_entries` values.
    pub fn from_circulant_capped(spec: &CirculantSpec, cap_entries: usize) -> Result<Self> {
        let entries = spec.m().saturating_mul(spec.n());
        if entries > cap_entries {
            return Err(Error::Config(format!(
                "dense matrix with {entries} entries exceeds cap {cap_entries}"
            )));
        }
        Ok(Self::from_circulant(spec))
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

impl SensingOperator for DenseOperator {
    fn rows(&self) -> usize {
        self.rows
    }

    fn cols(&self) -> usize {
        self.cols
    }

    fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.cols, x.len(), "dense forward input")?;
        Ok(self
            .data
            .chunks_exact(self.cols)
            .map(|row| crate::linalg::dot(row, x))
            .collect())
    }

    fn adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len(self.rows, y.len(), "dense adjoint input")?;
        let mut out = vec![0.0; self.cols];
        for (row, &coef) in self.data.chunks_exact(self.cols).zip(y) {
            crate::linalg::axpy(coef, row, &mut out);
        }
        Ok(out)
    }
}
