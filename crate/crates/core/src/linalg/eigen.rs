//! Power iteration for the dominant eigenpair of a symmetric PSD matrix.

use super::{dot, norm, Matrix};
use crate::error::{invalid, Result};

pub const DEFAULT_POWER_TOL: f64 = 1e-10;
pub const DEFAULT_POWER_MAX_ITERS: usize = 1000;

const SYMMETRY_TOL: f64 = 1e-8;
const NULL_ITERATE: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    /// Unit-norm eigenvector estimate.
    pub vector: Vec<f64>,
    /// Rayleigh quotient `vᵀ S v`.
    pub value: f64,
    pub iterations: usize,
    /// False when `max_iters` ran out before `‖S v − λ v‖ ≤ tol · λ`.
    pub converged: bool,
}

/// Dominant eigenpair of a symmetric positive semidefinite matrix.
///
/// Iteration starts at `(1, …, 1)/√d`; if that lands in the null space of
/// `S` it restarts from `e₁`. Running out of iterations is reported through
/// [`EigenPair::converged`], not as an error.
pub fn top_eigenvector(s: &Matrix, tol: f64, max_iters: usize) -> Result<EigenPair> {
    let d = s.rows();
    if d == 0 || s.cols() != d {
        return Err(invalid(format!(
            "top_eigenvector needs a nonempty square matrix, got {}x{}",
            s.rows(),
            s.cols()
        )));
    }
    let scale = s.max_abs();
    let asym = (0..d)
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .fold(0.0f64, |acc, (i, j)| acc.max((s[(i, j)] - s[(j, i)]).abs()));
    if asym > SYMMETRY_TOL * scale {
        return Err(invalid(format!(
            "matrix is not symmetric (max asymmetry {asym:e})"
        )));
    }

    let mut v = vec![1.0 / (d as f64).sqrt(); d];
    let mut w = s.matvec(&v)?;
    if norm(&w) < NULL_ITERATE {
        v = vec![0.0; d];
        v[0] = 1.0;
        w = s.matvec(&v)?;
    }

    let mut iterations = 0;
    loop {
        let value = dot(&v, &w).max(0.0);
        let residual = w
            .iter()
            .zip(&v)
            .map(|(wi, vi)| (wi - value * vi).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= tol * value {
            return Ok(EigenPair {
                vector: v,
                value,
                iterations,
                converged: true,
            });
        }
        let wn = norm(&w);
        if iterations >= max_iters || wn < NULL_ITERATE {
            return Ok(EigenPair {
                vector: v,
                value,
                iterations,
                converged: wn < NULL_ITERATE,
            });
        }
        v = w.iter().map(|x| x / wn).collect();
        w = s.matvec(&v)?;
        iterations += 1;
    }
}
