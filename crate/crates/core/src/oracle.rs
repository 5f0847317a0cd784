//! Independent checks on the solver: brute-force global minimization of the
//! joint loss on tiny instances, and Monte Carlo restricted-isometry
//! estimates over differences of union elements.

use rand::Rng;

use crate::descent::{loss, PhaseVector};
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, gaussian_vector, norm, seeded_rng, Matrix, SeedRng};
use crate::model::{SignalEstimate, UnionOfSubspaces};
use crate::operators::{SubspaceOperators, RESIDUAL_TIE_TOL};

/// Largest `m` the exhaustive oracle accepts (it solves `2^m · R` systems).
pub const MAX_ORACLE_MEASUREMENTS: usize = 16;

pub const DEFAULT_RIP_PROBES: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub best_phase: PhaseVector,
    pub best_estimate: SignalEstimate,
    /// `‖A x − p ∘ y‖₂` at the global minimizer.
    pub best_loss: f64,
    pub num_configs_searched: usize,
}

/// Global minimum of `‖A x − p ∘ y‖₂` over `x ∈ 𝓜` and all `2^m` phase
/// vectors. Phases are visited in lexicographic order with `+1 < −1`, and a
/// later configuration only wins by more than the residual tie band, so the
/// lexicographically smallest minimizer is returned.
pub fn exhaustive_phase_oracle(
    a: &Matrix,
    y: &[f64],
    union: &UnionOfSubspaces,
) -> Result<OracleResult> {
    let m = a.rows();
    if m > MAX_ORACLE_MEASUREMENTS {
        return Err(Error::Refused(format!(
            "exhaustive search over 2^{m} phases (limit is m <= {MAX_ORACLE_MEASUREMENTS})"
        )));
    }
    if y.len() != m {
        return Err(invalid(format!("{} amplitudes for {m} measurements", y.len())));
    }
    let ops = SubspaceOperators::new(a, union)?;
    let tie = RESIDUAL_TIE_TOL * norm(y);
    let configs = 1usize << m;
    let mut best: Option<(PhaseVector, SignalEstimate, f64)> = None;
    for code in 0..configs {
        let phase = phase_from_code(code, m);
        let fit = ops.fit(&phase.apply(y))?;
        if best.as_ref().is_none_or(|(_, _, res)| fit.residual < res - tie) {
            best = Some((phase, fit.estimate, fit.residual));
        }
    }
    let (best_phase, best_estimate, _) = best.expect("at least one configuration");
    let best_loss = loss(a, &best_estimate.x, &best_phase, y)?;
    Ok(OracleResult {
        best_phase,
        best_estimate,
        best_loss,
        num_configs_searched: configs * union.len(),
    })
}

/// Phase vector whose `i`-th entry is `−1` iff bit `m − 1 − i` of `code` is
/// set, so increasing codes enumerate phases lexicographically.
pub fn phase_from_code(code: usize, m: usize) -> PhaseVector {
    let signs = (0..m)
        .map(|i| if code >> (m - 1 - i) & 1 == 1 { -1.0 } else { 1.0 })
        .collect();
    PhaseVector::new(signs).expect("signs are ±1")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RipEstimate {
    /// `max(0, 1 − min ‖(A/√m) u‖²)`
    pub delta_lower: f64,
    /// `max(0, max ‖(A/√m) u‖² − 1)`
    pub delta_upper: f64,
    pub num_probes: usize,
}

/// Unit vector `(U_r α − U_q β)/‖·‖` with `r, q` uniform and `α, β` Gaussian.
pub fn sample_difference_probe(union: &UnionOfSubspaces, rng: &mut SeedRng) -> Vec<f64> {
    loop {
        let (u, _) = draw_difference(union, rng);
        let len = norm(&u);
        if len > 0.0 {
            return linalg::scale(&u, 1.0 / len);
        }
    }
}

fn draw_difference(union: &UnionOfSubspaces, rng: &mut SeedRng) -> (Vec<f64>, [(usize, Vec<f64>); 2]) {
    let d = union.subspace_dim();
    let r = rng.random_range(0..union.len());
    let q = rng.random_range(0..union.len());
    let alpha = gaussian_vector(d, rng);
    let beta = gaussian_vector(d, rng);
    let u = linalg::sub(
        &union.lift(r, &alpha).expect("index in range"),
        &union.lift(q, &beta).expect("index in range"),
    );
    (u, [(r, alpha), (q, beta)])
}

/// Random-probe estimate of the restricted isometry constants of `A/√m`
/// over the difference set `𝓜 − 𝓜`.
pub fn empirical_rip(
    a: &Matrix,
    union: &UnionOfSubspaces,
    num_probes: usize,
    seed: u64,
) -> Result<RipEstimate> {
    if num_probes == 0 {
        return Err(invalid("need at least one probe"));
    }
    let ops = SubspaceOperators::new(a, union)?;
    let inv_m = 1.0 / a.rows() as f64;
    let mut rng = seeded_rng(seed);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut taken = 0;
    while taken < num_probes {
        let (u, [(r, alpha), (q, beta)]) = draw_difference(union, &mut rng);
        let len = norm(&u);
        if len == 0.0 {
            continue;
        }
        let products = ops.operators();
        let mut au = products[r].product.matvec(&alpha)?;
        let aq = products[q].product.matvec(&beta)?;
        au.iter_mut().zip(&aq).for_each(|(x, y)| *x -= y);
        let value = linalg::dot(&au, &au) * inv_m / (len * len);
        lo = lo.min(value);
        hi = hi.max(value);
        taken += 1;
    }
    Ok(RipEstimate {
        delta_lower: (1.0 - lo).max(0.0),
        delta_upper: (hi - 1.0).max(0.0),
        num_probes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sample_gaussian_matrix;
    use crate::model::{generate_union, measure, random_orthogonal, synthesize_signal};

    #[test]
    fn codes_enumerate_lexicographically() {
        assert_eq!(phase_from_code(0, 3).entries(), &[1.0, 1.0, 1.0]);
        assert_eq!(phase_from_code(1, 3).entries(), &[1.0, 1.0, -1.0]);
        assert_eq!(phase_from_code(4, 3).entries(), &[-1.0, 1.0, 1.0]);
    }

    #[test]
    fn oracle_finds_feasible_truth_and_sign_pair() {
        let union = generate_union(6, 2, 2, 3).unwrap();
        let g = synthesize_signal(&union, 4).unwrap();
        let a = sample_gaussian_matrix(8, 6, 5).unwrap();
        let y = measure(&a, &g.x_star).unwrap();
        let res = exhaustive_phase_oracle(&a, &y, &union).unwrap();
        assert_eq!(res.num_configs_searched, 256 * 2);
        assert!(res.best_loss <= 1e-8 * norm(&y));
        // The winner is the lexicographically smaller of the ± pair.
        assert_eq!(res.best_phase.entries()[0], 1.0);
        let flipped = loss(&a, &res.best_estimate.negated().x, &res.best_phase.negated(), &y).unwrap();
        assert!((flipped - res.best_loss).abs() <= 1e-12);
        let direct = loss(&a, &res.best_estimate.x, &res.best_phase, &y).unwrap();
        assert!((direct - res.best_loss).abs() <= 1e-12);
    }

    #[test]
    fn oracle_refuses_large_m() {
        let union = generate_union(4, 1, 1, 0).unwrap();
        let a = sample_gaussian_matrix(17, 4, 0).unwrap();
        assert!(matches!(
            exhaustive_phase_oracle(&a, &[1.0; 17], &union),
            Err(Error::Refused(_))
        ));
    }

    #[test]
    fn exact_isometry_has_zero_constants() {
        let (m, n) = (40, 12);
        let q = random_orthogonal(m, 9).unwrap();
        let cols: Vec<usize> = (0..n).collect();
        let a = q.select_columns(&cols).unwrap().scaled((m as f64).sqrt());
        let union = generate_union(n, 3, 4, 1).unwrap();
        let rip = empirical_rip(&a, &union, 2000, 2).unwrap();
        assert!(rip.delta_lower <= 1e-10 && rip.delta_upper <= 1e-10, "{rip:?}");
        assert_eq!(rip.num_probes, 2000);
    }

    #[test]
    fn probes_are_unit_norm_and_sign_blind() {
        let union = generate_union(20, 4, 3, 7).unwrap();
        let a = sample_gaussian_matrix(50, 20, 8).unwrap();
        let mut rng = seeded_rng(1);
        for _ in 0..200 {
            let u = sample_difference_probe(&union, &mut rng);
            assert!((norm(&u) - 1.0).abs() <= 1e-12);
            let pos = norm(&a.matvec(&u).unwrap());
            let neg = norm(&a.matvec(&linalg::scale(&u, -1.0)).unwrap());
            assert_eq!(pos, neg);
        }
        assert!(empirical_rip(&a, &union, 0, 0).is_err());
        let rip = empirical_rip(&a, &union, 100, 0).unwrap();
        assert!(rip.delta_lower >= 0.0 && rip.delta_upper >= 0.0);
    }
}
