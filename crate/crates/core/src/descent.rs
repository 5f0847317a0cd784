//! Alternating minimization of `‖A x − p ∘ y‖₂` over `x ∈ 𝓜`, `p ∈ {±1}ᵐ`.
//!
//! With `x` fixed the optimal phase is `sign(A x)`; with `p` fixed the optimal
//! `x` is the best least-squares fit over every subspace of the union. Both
//! steps are exact, so the loss never increases.

use std::io::Write;

use crate::error::{invalid, Result};
use crate::linalg::{norm, Matrix};
use crate::model::{aligning_sign, signed_distance, SignalEstimate, UnionOfSubspaces};
use crate::operators::{SubspaceOperators, UnionFit};

pub const DEFAULT_MAX_ITERS: usize = 100;
pub const DEFAULT_TOL: f64 = 1e-12;

// Floor for the relative-change denominator.
const CHANGE_FLOOR: f64 = 1e-30;

/// A vector of ±1 signs.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector(Vec<f64>);

impl PhaseVector {
    pub fn new(signs: Vec<f64>) -> Result<Self> {
        if signs.iter().any(|&s| s != 1.0 && s != -1.0) {
            return Err(invalid("phase entries must be exactly +1 or -1"));
        }
        Ok(Self(signs))
    }

    /// `sign(z)` with `sign(0) = +1`.
    pub fn from_signs_of(z: &[f64]) -> Self {
        Self(z.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    /// `p ∘ y`
    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        self.0.iter().zip(y).map(|(p, v)| p * v).collect()
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|p| -p).collect())
    }

    pub fn disagreements(&self, other: &PhaseVector) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }
}

/// `p = sign(A x)`, the exact minimizer of the loss over phases for fixed `x`.
pub fn sign_step(a: &Matrix, x: &[f64]) -> Result<PhaseVector> {
    Ok(PhaseVector::from_signs_of(&a.matvec(x)?))
}

/// `‖A x − p ∘ y‖₂`
pub fn loss(a: &Matrix, x: &[f64], p: &PhaseVector, y: &[f64]) -> Result<f64> {
    if p.len() != a.rows() || y.len() != a.rows() {
        return Err(invalid(format!(
            "loss: {} measurements but {} phases and {} amplitudes",
            a.rows(),
            p.len(),
            y.len()
        )));
    }
    Ok(loss_from_product(&a.matvec(x)?, p, y))
}

fn loss_from_product(ax: &[f64], p: &PhaseVector, y: &[f64]) -> f64 {
    ax.iter()
        .zip(p.entries())
        .zip(y)
        .map(|((z, s), v)| (z - s * v).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Phase noise `(p − p*) ∘ y`.
pub fn phase_noise(p: &PhaseVector, p_star: &PhaseVector, y: &[f64]) -> Result<Vec<f64>> {
    if p.len() != p_star.len() || p.len() != y.len() {
        return Err(invalid(format!(
            "phase_noise: lengths {}, {}, {}",
            p.len(),
            p_star.len(),
            y.len()
        )));
    }
    Ok(p.entries()
        .iter()
        .zip(p_star.entries())
        .zip(y)
        .map(|((a, b), v)| (a - b) * v)
        .collect())
}

/// Exact `argmin_{x ∈ 𝓜} ‖A x − b‖₂`.
pub fn uos_least_squares(a: &Matrix, b: &[f64], union: &UnionOfSubspaces) -> Result<UnionFit> {
    SubspaceOperators::new(a, union)?.fit(b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentConfig {
    pub max_iters: usize,
    /// Stop once `dist(xᵗ, xᵗ⁻¹) / ‖xᵗ⁻¹‖₂` drops to this.
    pub tol: f64,
}

impl Default for DescentConfig {
    fn default() -> Self {
        Self {
            max_iters: DEFAULT_MAX_ITERS,
            tol: DEFAULT_TOL,
        }
    }
}

/// One full iteration `xᵗ⁻¹ → pᵗ → xᵗ`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateRecord {
    pub iteration: usize,
    /// `‖A xᵗ − pᵗ ∘ y‖₂`
    pub loss: f64,
    /// `‖A xᵗ⁻¹ − pᵗ ∘ y‖₂`, the loss right after the phase update.
    pub phase_step_loss: f64,
    pub subspace_index: usize,
    /// `dist(xᵗ, x*)`, when the truth is known.
    pub distance: Option<f64>,
    /// `‖eᵗ‖₂` with `eᵗ = (pᵗ − s·p*) ∘ y` and `s` aligning `xᵗ⁻¹` with `x*`.
    pub phase_noise: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryReport {
    pub iterates: Vec<IterateRecord>,
    pub final_estimate: SignalEstimate,
    pub converged: bool,
    pub iterations_used: usize,
    /// `dist(x⁰, x*)`, when the truth is known.
    pub initial_distance: Option<f64>,
}

impl RecoveryReport {
    pub fn losses(&self) -> impl Iterator<Item = f64> + '_ {
        self.iterates.iter().map(|r| r.loss)
    }

    /// True when every recorded loss is at most its predecessor plus `slack`.
    pub fn loss_is_non_increasing(&self, slack: f64) -> bool {
        self.iterates
            .windows(2)
            .all(|w| w[1].loss <= w[0].loss + slack)
    }

    /// Distances `dist(xᵗ, x*)` for `t = 0, 1, …` (empty without truth).
    pub fn distances(&self) -> Vec<f64> {
        self.initial_distance
            .into_iter()
            .chain(self.iterates.iter().filter_map(|r| r.distance))
            .collect()
    }

    /// `dist(xᵗ⁺¹, x*) / dist(xᵗ, x*)` over steps whose denominator exceeds
    /// `min_denominator`.
    pub fn contraction_ratios(&self, min_denominator: f64) -> Vec<f64> {
        self.distances()
            .windows(2)
            .filter(|w| w[0] > min_denominator)
            .map(|w| w[1] / w[0])
            .collect()
    }

    /// Pairs `(‖eᵗ⁺¹‖₂, dist(xᵗ, x*))` over steps whose distance exceeds
    /// `min_denominator`.
    pub fn phase_noise_pairs(&self, min_denominator: f64) -> Vec<(f64, f64)> {
        let dists = self.distances();
        self.iterates
            .iter()
            .zip(&dists)
            .filter_map(|(rec, &prev)| Some((rec.phase_noise?, prev)))
            .filter(|&(_, prev)| prev > min_denominator)
            .collect()
    }

    /// CSV trace with columns `iteration,loss,distance,subspace_index`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "iteration,loss,distance,subspace_index")?;
        for r in &self.iterates {
            let dist = r.distance.map(|d| format!("{d:e}")).unwrap_or_default();
            writeln!(w, "{},{:e},{},{}", r.iteration, r.loss, dist, r.subspace_index)?;
        }
        Ok(())
    }
}

/// Runs alternating minimization from `x0`. When `truth` is given the trace
/// carries distances and phase-noise norms.
pub fn am_descent(
    a: &Matrix,
    y: &[f64],
    union: &UnionOfSubspaces,
    x0: &SignalEstimate,
    config: &DescentConfig,
    truth: Option<&[f64]>,
) -> Result<RecoveryReport> {
    let ops = SubspaceOperators::new(a, union)?;
    am_descent_with(&ops, y, x0, config, truth)
}

pub fn am_descent_with(
    ops: &SubspaceOperators<'_>,
    y: &[f64],
    x0: &SignalEstimate,
    config: &DescentConfig,
    truth: Option<&[f64]>,
) -> Result<RecoveryReport> {
    let a = ops.a();
    if config.max_iters == 0 || config.tol.is_nan() || config.tol <= 0.0 {
        return Err(invalid("descent needs max_iters >= 1 and tol > 0"));
    }
    if y.len() != a.rows() || x0.x.len() != a.cols() {
        return Err(invalid(format!(
            "descent: A is {}x{}, y has length {}, x0 has length {}",
            a.rows(),
            a.cols(),
            y.len(),
            x0.x.len()
        )));
    }
    if let Some(t) = truth {
        if t.len() != a.cols() {
            return Err(invalid("truth has the wrong length"));
        }
    }
    let true_phase = truth.map(|t| a.matvec(t).map(|z| PhaseVector::from_signs_of(&z))).transpose()?;
    let initial_distance = truth.map(|t| signed_distance(&x0.x, t)).transpose()?;

    let mut current = x0.clone();
    let mut ax = a.matvec(&current.x)?;
    let mut iterates = Vec::new();
    let mut converged = false;

    for iteration in 1..=config.max_iters {
        let phase = PhaseVector::from_signs_of(&ax);
        let phase_step_loss = loss_from_product(&ax, &phase, y);
        let noise = match (truth, &true_phase) {
            (Some(t), Some(p_star)) => {
                let aligned = if aligning_sign(&current.x, t) < 0.0 {
                    p_star.negated()
                } else {
                    p_star.clone()
                };
                Some(norm(&phase_noise(&phase, &aligned, y)?))
            }
            _ => None,
        };

        let fit = ops.fit(&phase.apply(y))?;
        let next = fit.estimate;
        ax = a.matvec(&next.x)?;
        let step_loss = loss_from_product(&ax, &phase, y);
        let distance = truth.map(|t| signed_distance(&next.x, t)).transpose()?;
        iterates.push(IterateRecord {
            iteration,
            loss: step_loss,
            phase_step_loss,
            subspace_index: next.subspace_index,
            distance,
            phase_noise: noise,
        });

        let change = signed_distance(&next.x, &current.x)? / norm(&current.x).max(CHANGE_FLOOR);
        current = next;
        if change <= config.tol {
            converged = true;
            break;
        }
    }

    Ok(RecoveryReport {
        iterations_used: iterates.len(),
        iterates,
        final_estimate: current,
        converged,
        initial_distance,
    })
}

/// `min(‖x* − x̂‖, ‖x* + x̂‖) / ‖x*‖`.
pub fn relative_error(truth: &[f64], estimate: &[f64]) -> Result<f64> {
    Ok(signed_distance(truth, estimate)? / norm(truth))
}
