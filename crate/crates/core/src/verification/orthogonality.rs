use rayon::prelude::*;

use crate::error::{check_len, Error, Result};
use crate::linalg::{axpy, dot, norm2, norm_inf};
use crate::rng::{self, tag};

/// `s_i = u_i + r_i` for the left shifts `s_i` of `D_ξ x`, built by
/// sequential Gram–Schmidt: `r_i` is the projection of `s_i` onto
/// `span{s_0, …, s_{i−1}}` and `u_i = s_i − r_i`.
#[derive(Debug, Clone)]
pub struct ShiftDecomposition {
    pub shifts: Vec<Vec<f64>>,
    pub orthogonal: Vec<Vec<f64>>,
    pub residuals: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalityReport {
    pub n: usize,
    pub m: usize,
    /// `max_i ‖r_i‖₂`
    pub beta_measured: f64,
    /// `2 √ρ`
    pub beta_bound: f64,
    /// `‖x‖∞`
    pub rho: f64,
    /// `max_{i≠j} |⟨s_i, s_j⟩|`
    pub pairwise_max_inner: f64,
    /// `max_{i≠j} |⟨u_i, u_j⟩|`
    pub orthogonality_defect: f64,
    /// `max_i ‖u_i + r_i − s_i‖₂`
    pub reconstruction_defect: f64,
}

impl OrthogonalityReport {
    pub fn passes(&self) -> bool {
        self.beta_measured <= self.beta_bound
    }
}

/// Left shift by `i`: entry `j` is `v_{(j+i) mod n}`.
fn shift_left(v: &[f64], i: usize) -> Vec<f64> {
    let n = v.len();
    (0..n).map(|j| v[(j + i) % n]).collect()
}

pub fn shift_decomposition(x: &[f64], xi: &[f64], m: usize) -> Result<ShiftDecomposition> {
    let n = x.len();
    check_len(n, xi.len(), "sign vector")?;
    if m == 0 || m > n {
        return Err(Error::Config(format!("need 1 <= m <= n, got m={m}, n={n}")));
    }
    let flipped: Vec<f64> = x.iter().zip(xi).map(|(a, s)| a * s).collect();
    let shifts: Vec<Vec<f64>> = (0..m).map(|i| shift_left(&flipped, i)).collect();

    // orthonormal basis of span{s_0, …, s_{i−1}}
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut orthogonal = Vec::with_capacity(m);
    let mut residuals = Vec::with_capacity(m);
    for s in &shifts {
        let mut u = s.clone();
        // two passes of modified Gram–Schmidt
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&u, q);
                if c != 0.0 {
                    axpy(-c, q, &mut u);
                }
            }
        }
        let r: Vec<f64> = s.iter().zip(&u).map(|(a, b)| a - b).collect();
        let un = norm2(&u);
        if un > 1e-12 * norm2(s).max(f64::MIN_POSITIVE) {
            basis.push(u.iter().map(|v| v / un).collect());
        }
        orthogonal.push(u);
        residuals.push(r);
    }
    Ok(ShiftDecomposition {
        shifts,
        orthogonal,
        residuals,
    })
}

/// Gram–Schmidt diagnostic of the `(m, β)`-orthogonality of the shifts of
/// `D_ξ x`.
pub fn orthogonality_diagnostic(x: &[f64], xi: &[f64], m: usize) -> Result<OrthogonalityReport> {
    let d = shift_decomposition(x, xi, m)?;
    let rho = norm_inf(x);
    let mut pairwise_max_inner = 0.0f64;
    let mut orthogonality_defect = 0.0f64;
    for i in 0..m {
        for j in 0..i {
            pairwise_max_inner = pairwise_max_inner.max(dot(&d.shifts[i], &d.shifts[j]).abs());
            orthogonality_defect = orthogonality_defect.max(dot(&d.orthogonal[i], &d.orthogonal[j]).abs());
        }
    }
    let reconstruction_defect = (0..m)
        .map(|i| {
            d.orthogonal[i]
                .iter()
                .zip(&d.residuals[i])
                .zip(&d.shifts[i])
                .map(|((u, r), s)| (u + r - s).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max);
    Ok(OrthogonalityReport {
        n: x.len(),
        m,
        beta_measured: d.residuals.iter().map(|r| norm2(r)).fold(0.0, f64::max),
        beta_bound: 2.0 * rho.sqrt(),
        rho,
        pairwise_max_inner,
        orthogonality_defect,
        reconstruction_defect,
    })
}

/// Diagnostic for `draws` Rademacher sign vectors at fixed `x`.
pub fn orthogonality_experiment(x: &[f64], m: usize, draws: usize, seed: u64) -> Result<Vec<OrthogonalityReport>> {
    (0..draws)
        .into_par_iter()
        .map(|d| {
            let xi = rng::rademacher_vec(&mut rng::stream(seed, &[tag::OPERATOR, d as u64]), x.len());
            orthogonality_diagnostic(x, &xi, m)
        })
        .collect()
}
