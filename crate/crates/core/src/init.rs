//! Spectral initialization over a union of subspaces.
//!
//! For each subspace the candidate coefficient vector is the top eigenvector
//! of the `d x d` matrix `B_r = (A U_r)ᵀ diag(y²) (A U_r)`, which maximizes
//! `‖y ∘ A U_r α‖₂` over unit `α`. The subspace with the largest objective
//! wins and its unit-norm lift is the starting point.

use crate::error::{invalid, Error, Result};
use crate::linalg::{top_eigenvector, Matrix, DEFAULT_POWER_MAX_ITERS, DEFAULT_POWER_TOL};
use crate::model::{SignalEstimate, UnionOfSubspaces};
use crate::operators::SubspaceOperators;

/// Objectives closer than this are treated as tied.
pub const OBJECTIVE_TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCandidate {
    pub subspace_index: usize,
    /// Unit-norm maximizer of `‖y ∘ A U_r α‖₂`.
    pub alpha_hat: Vec<f64>,
    /// `‖y ∘ A U_r α̂‖₂ = √(α̂ᵀ B_r α̂)`.
    pub objective: f64,
    /// False when power iteration hit its iteration cap.
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralInit {
    pub estimate: SignalEstimate,
    pub candidates: Vec<SpectralCandidate>,
}

/// Spectral candidate for one subspace basis `u_r` (n x d).
pub fn spectral_candidate(a: &Matrix, y: &[f64], u_r: &Matrix, r: usize) -> Result<SpectralCandidate> {
    if u_r.rows() != a.cols() {
        return Err(invalid(format!(
            "basis has {} rows, measurement matrix has {} columns",
            u_r.rows(),
            a.cols()
        )));
    }
    check_amplitudes(a, y)?;
    candidate_from_product(&a.matmul(u_r)?, y, r)
}

/// Candidate from a precomputed `A U_r`.
pub fn candidate_from_product(product: &Matrix, y: &[f64], r: usize) -> Result<SpectralCandidate> {
    if product.rows() != y.len() {
        return Err(invalid(format!(
            "{} amplitudes for {} measurements",
            y.len(),
            product.rows()
        )));
    }
    let weights: Vec<f64> = y.iter().map(|v| v * v).collect();
    let b = product.weighted_gram(Some(&weights));
    let eig = top_eigenvector(&b, DEFAULT_POWER_TOL, DEFAULT_POWER_MAX_ITERS)?;
    Ok(SpectralCandidate {
        subspace_index: r,
        objective: eig.value.sqrt(),
        alpha_hat: eig.vector,
        converged: eig.converged,
    })
}

/// Unit-norm starting point `x⁰ = U_{r*} α̂_{r*}`.
pub fn spectral_init(a: &Matrix, y: &[f64], union: &UnionOfSubspaces) -> Result<SignalEstimate> {
    let ops = SubspaceOperators::new(a, union)?;
    Ok(spectral_init_with(&ops, y)?.estimate)
}

/// Spectral initialization against cached operators, keeping every candidate.
pub fn spectral_init_with(ops: &SubspaceOperators<'_>, y: &[f64]) -> Result<SpectralInit> {
    check_amplitudes(ops.a(), y)?;
    let candidates = ops
        .operators()
        .iter()
        .enumerate()
        .map(|(r, op)| candidate_from_product(&op.product, y, r))
        .collect::<Result<Vec<_>>>()?;
    let best = select_candidate(&candidates);
    let chosen = &candidates[best];
    let estimate = SignalEstimate::from_coefficients(
        ops.union(),
        chosen.subspace_index,
        chosen.alpha_hat.clone(),
    )?;
    Ok(SpectralInit {
        estimate,
        candidates,
    })
}

/// Index of the largest objective, lowest index on ties.
pub fn select_candidate(candidates: &[SpectralCandidate]) -> usize {
    let mut best = 0;
    for (i, c) in candidates.iter().enumerate().skip(1) {
        if c.objective > candidates[best].objective + OBJECTIVE_TIE_TOL {
            best = i;
        }
    }
    best
}

fn check_amplitudes(a: &Matrix, y: &[f64]) -> Result<()> {
    if y.len() != a.rows() {
        return Err(invalid(format!(
            "{} amplitudes for {} measurements",
            y.len(),
            a.rows()
        )));
    }
    if y.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(invalid("amplitudes must be finite and nonnegative"));
    }
    if y.iter().all(|&v| v == 0.0) {
        return Err(Error::NoSignal);
    }
    Ok(())
}
