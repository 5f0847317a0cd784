//! Cross-checks against an independent dense linear-algebra implementation
//! (nalgebra's SVD pseudo-inverse and symmetric eigensolver).

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use uospr_core::linalg::{
    least_squares, max_abs, norm, sample_gaussian_matrix, top_eigenvector, Matrix,
    DEFAULT_POWER_MAX_ITERS, DEFAULT_POWER_TOL,
};
use uospr_core::model::{generate_union, measure, synthesize_signal};
use uospr_core::oracle::exhaustive_phase_oracle;
use uospr_core::{am_descent, sign_step, spectral_init, uos_least_squares, DescentConfig};

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

/// Residual of the minimum-norm least-squares solution via pseudo-inverse.
fn pinv_residual(m: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, f64) {
    let pinv = m.clone().pseudo_inverse(1e-14).expect("pseudo-inverse");
    let x = pinv * b;
    let r = (m * &x - b).norm();
    (x, r)
}

#[test]
fn union_least_squares_matches_pseudo_inverse_scan() {
    let (n, d, r, m) = (6, 2, 3, 6);
    for seed in 0..10u64 {
        let union = generate_union(n, d, r, seed).unwrap();
        let a = sample_gaussian_matrix(m, n, seed + 50).unwrap();
        let b: Vec<f64> = sample_gaussian_matrix(m, 1, seed + 99).unwrap().into_vec();
        let fit = uos_least_squares(&a, &b, &union).unwrap();

        let a_na = to_na(&a);
        let b_na = DVector::from_vec(b.clone());
        let (best_r, best_res) = (0..r)
            .map(|k| (k, pinv_residual(&(&a_na * to_na(union.basis(k))), &b_na).1))
            .fold((usize::MAX, f64::INFINITY), |acc, (k, res)| {
                if res < acc.1 { (k, res) } else { acc }
            });
        assert!((fit.residual - best_res).abs() <= 1e-10, "seed {seed}");
        assert_eq!(fit.estimate.subspace_index, best_r, "seed {seed}");
        for (k, res) in fit.per_subspace.iter().enumerate() {
            let oracle = pinv_residual(&(&a_na * to_na(union.basis(k))), &b_na).1;
            assert!((res.unwrap() - oracle).abs() <= 1e-10);
            assert!(fit.residual <= res.unwrap());
        }
    }
}

#[test]
fn power_iteration_matches_symmetric_eigensolver() {
    for seed in 0..10u64 {
        let b = sample_gaussian_matrix(12, 6, seed).unwrap();
        let s = b.gram();
        let e = top_eigenvector(&s, DEFAULT_POWER_TOL, DEFAULT_POWER_MAX_ITERS).unwrap();
        let eig = to_na(&s).symmetric_eigen();
        let (imax, lmax) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        assert!((e.value - lmax).abs() <= 1e-8 * lmax);
        let v_ref = eig.eigenvectors.column(imax);
        let overlap: f64 = v_ref.iter().zip(&e.vector).map(|(a, b)| a * b).sum();
        assert!(overlap.abs() >= 1.0 - 1e-6, "seed {seed}: overlap {overlap}");
    }
}

#[test]
fn oracle_dominates_solver_output() {
    for seed in 0..10u64 {
        let union = generate_union(6, 2, 2, seed).unwrap();
        let g = synthesize_signal(&union, seed + 7).unwrap();
        let a = sample_gaussian_matrix(8, 6, seed + 8).unwrap();
        let y = measure(&a, &g.x_star).unwrap();
        let oracle = exhaustive_phase_oracle(&a, &y, &union).unwrap();
        let x0 = spectral_init(&a, &y, &union).unwrap();
        let report = am_descent(&a, &y, &union, &x0, &DescentConfig::default(), None).unwrap();
        let x_hat = &report.final_estimate.x;
        let p_hat = sign_step(&a, x_hat).unwrap();
        let solver = uospr_core::loss(&a, x_hat, &p_hat, &y).unwrap();
        assert!(oracle.best_loss <= solver + 1e-10);
        assert!(oracle.best_loss <= report.iterates.last().unwrap().loss + 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn least_squares_residual_is_orthogonal(seed in any::<u64>(), rows in 3usize..30, cols_frac in 0.0f64..1.0) {
        let cols = 1 + ((rows - 1) as f64 * cols_frac) as usize;
        let m = sample_gaussian_matrix(rows, cols, seed).unwrap();
        let b = sample_gaussian_matrix(rows, 1, seed.wrapping_add(1)).unwrap().into_vec();
        let (x, res) = least_squares(&m, &b).unwrap();
        let r: Vec<f64> = m.matvec(&x).unwrap().iter().zip(&b).map(|(p, q)| p - q).collect();
        let mt_r = m.matvec_transpose(&r).unwrap();
        let mt_b = m.matvec_transpose(&b).unwrap();
        prop_assert!(max_abs(&mt_r) <= 1e-8 * max_abs(&mt_b));
        prop_assert!((res - norm(&r)).abs() <= 1e-10 * (1.0 + norm(&b)));
        let (_, oracle) = pinv_residual(&to_na(&m), &DVector::from_vec(b.clone()));
        prop_assert!((res - oracle).abs() <= 1e-9 * (1.0 + oracle));
    }

    #[test]
    fn top_eigenvector_is_unit_with_rayleigh_value(seed in any::<u64>(), d in 1usize..10) {
        let b = sample_gaussian_matrix(d + 3, d, seed).unwrap();
        let s = b.gram();
        let e = top_eigenvector(&s, DEFAULT_POWER_TOL, DEFAULT_POWER_MAX_ITERS).unwrap();
        prop_assert!((norm(&e.vector) - 1.0).abs() <= 1e-12);
        let sv = s.matvec(&e.vector).unwrap();
        let rq: f64 = sv.iter().zip(&e.vector).map(|(a, b)| a * b).sum();
        prop_assert!((e.value - rq).abs() <= 1e-10 * rq.abs().max(f64::MIN_POSITIVE));
        prop_assert!(e.value >= 0.0);
    }
}
