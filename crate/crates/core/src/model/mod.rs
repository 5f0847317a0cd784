//! Union-of-subspaces signal model and noiseless amplitude measurements.

mod io;

pub use io::{read_instance, write_instance, Instance, INSTANCE_MAGIC};

use rand::seq::index;
use rand::Rng;

use crate::error::{invalid, Result};
use crate::linalg::{
    self, derive_seed, gaussian_vector, norm, sample_gaussian_matrix, seeded_rng, Matrix,
    QrFactorization,
};

/// Bases are accepted when `‖UᵀU − I‖_max` is at most this.
pub const ORTHONORMALITY_TOL: f64 = 1e-10;

/// The model: `R` known `d`-dimensional subspaces of `ℝⁿ`, each given by an
/// `n x d` basis with orthonormal columns. Subspace indices are 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct UnionOfSubspaces {
    ambient_dim: usize,
    subspace_dim: usize,
    bases: Vec<Matrix>,
}

impl UnionOfSubspaces {
    pub fn new(bases: Vec<Matrix>) -> Result<Self> {
        let first = bases
            .first()
            .ok_or_else(|| invalid("a union needs at least one subspace"))?;
        let (n, d) = (first.rows(), first.cols());
        if d == 0 || d > n {
            return Err(invalid(format!("subspace dimension {d} must be in 1..={n}")));
        }
        let eye = Matrix::identity(d);
        for (r, u) in bases.iter().enumerate() {
            if u.rows() != n || u.cols() != d {
                return Err(invalid(format!(
                    "basis {r} is {}x{}, expected {n}x{d}",
                    u.rows(),
                    u.cols()
                )));
            }
            let err = u.gram().max_abs_diff(&eye)?;
            if err > ORTHONORMALITY_TOL {
                return Err(invalid(format!(
                    "basis {r} is not orthonormal (‖UᵀU − I‖_max = {err:e})"
                )));
            }
        }
        Ok(Self {
            ambient_dim: n,
            subspace_dim: d,
            bases,
        })
    }

    /// `n`
    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// `d`
    pub fn subspace_dim(&self) -> usize {
        self.subspace_dim
    }

    /// `R`
    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    pub fn bases(&self) -> &[Matrix] {
        &self.bases
    }

    pub fn basis(&self, r: usize) -> &Matrix {
        &self.bases[r]
    }

    /// `U_r α`
    pub fn lift(&self, r: usize, alpha: &[f64]) -> Result<Vec<f64>> {
        self.bases
            .get(r)
            .ok_or_else(|| invalid(format!("subspace {r} out of range")))?
            .matvec(alpha)
    }

    /// `‖U_r U_rᵀ x − x‖₂`
    pub fn projection_residual(&self, r: usize, x: &[f64]) -> Result<f64> {
        let u = &self.bases[r];
        let coeffs = u.matvec_transpose(x)?;
        let proj = u.matvec(&coeffs)?;
        Ok(norm(&linalg::sub(&proj, x)))
    }

    /// Smallest projection residual over all subspaces.
    pub fn distance_to_union(&self, x: &[f64]) -> Result<f64> {
        (0..self.len()).try_fold(f64::INFINITY, |best, r| {
            Ok(best.min(self.projection_residual(r, x)?))
        })
    }
}

/// Random union: orthogonalize a seeded `n x n` Gaussian matrix into `Q`,
/// then give each subspace `d` distinct columns of `Q` drawn uniformly and
/// independently per subspace (subsets may overlap).
pub fn generate_union(n: usize, d: usize, r: usize, seed: u64) -> Result<UnionOfSubspaces> {
    if d == 0 || d > n {
        return Err(invalid(format!("need 1 <= d <= n, got d = {d}, n = {n}")));
    }
    if r == 0 {
        return Err(invalid("need at least one subspace"));
    }
    let q = random_orthogonal(n, derive_seed(seed, &[0]))?;
    let mut rng = seeded_rng(derive_seed(seed, &[1]));
    let bases = (0..r)
        .map(|_| {
            let mut cols = index::sample(&mut rng, n, d).into_vec();
            cols.sort_unstable();
            q.select_columns(&cols)
        })
        .collect::<Result<Vec<_>>>()?;
    UnionOfSubspaces::new(bases)
}

/// Haar-distributed orthogonal `n x n` matrix (QR of a Gaussian matrix with
/// the column signs fixed by `sign(R_kk)`).
pub fn random_orthogonal(n: usize, seed: u64) -> Result<Matrix> {
    let g = sample_gaussian_matrix(n, n, seed)?;
    let qr = QrFactorization::new(&g)?;
    let mut q = qr.thin_q();
    for (j, rjj) in qr.r_diagonal().into_iter().enumerate() {
        if rjj < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    Ok(q)
}

/// A planted signal `x* = U_r α*`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub x_star: Vec<f64>,
    pub subspace_index: usize,
    pub alpha_star: Vec<f64>,
}

/// Picks a subspace uniformly and draws i.i.d. standard normal coefficients.
pub fn synthesize_signal(union: &UnionOfSubspaces, seed: u64) -> Result<GroundTruth> {
    let mut rng = seeded_rng(seed);
    let subspace_index = rng.random_range(0..union.len());
    let alpha_star = gaussian_vector(union.subspace_dim(), &mut rng);
    let x_star = union.lift(subspace_index, &alpha_star)?;
    Ok(GroundTruth {
        x_star,
        subspace_index,
        alpha_star,
    })
}

/// A point of the union with its `(r, α)` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalEstimate {
    pub x: Vec<f64>,
    pub subspace_index: usize,
    pub alpha: Vec<f64>,
}

impl SignalEstimate {
    pub fn from_coefficients(
        union: &UnionOfSubspaces,
        subspace_index: usize,
        alpha: Vec<f64>,
    ) -> Result<Self> {
        let x = union.lift(subspace_index, &alpha)?;
        Ok(Self {
            x,
            subspace_index,
            alpha,
        })
    }

    pub fn negated(&self) -> Self {
        Self {
            x: self.x.iter().map(|v| -v).collect(),
            subspace_index: self.subspace_index,
            alpha: self.alpha.iter().map(|v| -v).collect(),
        }
    }
}

/// Gaussian measurement matrix with the observed amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementEnsemble {
    a: Matrix,
    y: Vec<f64>,
}

impl MeasurementEnsemble {
    pub fn new(a: Matrix, y: Vec<f64>) -> Result<Self> {
        if a.rows() == 0 {
            return Err(invalid("need at least one measurement"));
        }
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
        Ok(Self { a, y })
    }

    /// Draws an `m x n` Gaussian `A` from `seed` and measures `x`.
    pub fn gaussian(m: usize, x: &[f64], seed: u64) -> Result<Self> {
        let a = sample_gaussian_matrix(m, x.len(), seed)?;
        let y = measure(&a, x)?;
        Self::new(a, y)
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn num_measurements(&self) -> usize {
        self.y.len()
    }
}

/// `yᵢ = |⟨aᵢ, x⟩|`
pub fn measure(a: &Matrix, x: &[f64]) -> Result<Vec<f64>> {
    Ok(a.matvec(x)?.into_iter().map(f64::abs).collect())
}

/// `min(‖x − z‖₂, ‖x + z‖₂)`: distance modulo the global sign.
pub fn signed_distance(x: &[f64], z: &[f64]) -> Result<f64> {
    if x.len() != z.len() {
        return Err(invalid(format!(
            "signed_distance: lengths {} and {}",
            x.len(),
            z.len()
        )));
    }
    let (minus, plus) = x.iter().zip(z).fold((0.0, 0.0), |(m, p), (a, b)| {
        (m + (a - b) * (a - b), p + (a + b) * (a + b))
    });
    Ok(minus.min(plus).sqrt())
}

/// Sign `s ∈ {±1}` minimizing `‖x − s·z‖₂` (ties go to `+1`).
pub fn aligning_sign(x: &[f64], z: &[f64]) -> f64 {
    if linalg::dot(x, z) >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn generated_bases_are_orthonormal() {
        for seed in 0..5 {
            let u = generate_union(20, 4, 3, seed).unwrap();
            assert_eq!((u.ambient_dim(), u.subspace_dim(), u.len()), (20, 4, 3));
            for b in u.bases() {
                assert!(b.gram().max_abs_diff(&Matrix::identity(4)).unwrap() <= 1e-10);
            }
        }
    }

    #[test]
    fn full_dimensional_subspace_projects_to_identity() {
        let u = generate_union(7, 7, 1, 9).unwrap();
        let b = u.basis(0);
        let proj = b.matmul(&b.transpose()).unwrap();
        assert!(proj.max_abs_diff(&Matrix::identity(7)).unwrap() <= 1e-10);
    }

    #[test]
    fn cross_gram_entries_are_signed_selections() {
        for seed in 0..20 {
            let u = generate_union(16, 3, 5, seed).unwrap();
            for bi in u.bases() {
                for bj in u.bases() {
                    let c = bi.transpose().matmul(bj).unwrap();
                    for &v in c.as_slice() {
                        let gap = v.abs().min((v.abs() - 1.0).abs());
                        assert!(gap <= 1e-10, "seed {seed}: entry {v}");
                    }
                }
            }
        }
    }

    #[test]
    fn generate_union_is_deterministic_and_validates() {
        assert_eq!(
            generate_union(10, 2, 3, 5).unwrap(),
            generate_union(10, 2, 3, 5).unwrap()
        );
        assert!(generate_union(4, 5, 1, 0).is_err());
        assert!(generate_union(4, 0, 1, 0).is_err());
        assert!(generate_union(4, 2, 0, 0).is_err());
    }

    #[test]
    fn rejects_non_orthonormal_basis() {
        let b = Matrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        assert!(UnionOfSubspaces::new(vec![b]).is_err());
        assert!(UnionOfSubspaces::new(vec![]).is_err());
    }

    #[test]
    fn synthesized_signal_lies_in_its_subspace() {
        let u = generate_union(30, 5, 4, 1).unwrap();
        for seed in 0..10 {
            let g = synthesize_signal(&u, seed).unwrap();
            assert_abs_diff_eq!(norm(&g.x_star), norm(&g.alpha_star), epsilon = 1e-10);
            assert!(u.projection_residual(g.subspace_index, &g.x_star).unwrap() <= 1e-10);
            assert!(u.distance_to_union(&g.x_star).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn subspace_choice_is_uniform() {
        let u = generate_union(8, 2, 4, 3).unwrap();
        let mut counts = [0usize; 4];
        for seed in 0..1000 {
            counts[synthesize_signal(&u, seed).unwrap().subspace_index] += 1;
        }
        // Each count is Binomial(1000, 1/4): mean 250, sd ≈ 13.7.
        for c in counts {
            assert!((200..=300).contains(&c), "{counts:?}");
        }
    }

    #[test]
    fn measurement_examples() {
        let a = sample_gaussian_matrix(5, 3, 0).unwrap();
        assert_eq!(measure(&a, &[0.0; 3]).unwrap(), vec![0.0; 5]);
        assert_eq!(
            measure(&Matrix::identity(3), &[-1.0, 2.0, -3.0]).unwrap(),
            vec![1.0, 2.0, 3.0]
        );
        let col = Matrix::from_rows(&[vec![2.0], vec![-3.0]]).unwrap();
        assert_eq!(measure(&col, &[1.5]).unwrap(), vec![3.0, 4.5]);
        assert!(measure(&col, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn ensemble_rejects_negative_amplitudes() {
        assert!(MeasurementEnsemble::new(Matrix::identity(2), vec![1.0, -1.0]).is_err());
        assert!(MeasurementEnsemble::new(Matrix::identity(2), vec![1.0]).is_err());
        assert!(MeasurementEnsemble::new(Matrix::zeros(0, 2), vec![]).is_err());
    }

    #[test]
    fn signed_distance_examples() {
        let x = [1.0, -2.0, 0.5];
        assert_eq!(signed_distance(&x, &x).unwrap(), 0.0);
        assert_eq!(signed_distance(&x, &[-1.0, 2.0, -0.5]).unwrap(), 0.0);
        assert_abs_diff_eq!(
            signed_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(),
            2f64.sqrt(),
            epsilon = 1e-15
        );
        assert!(signed_distance(&[1.0], &[1.0, 2.0]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn measurement_is_sign_blind(seed in any::<u64>(), x in prop::collection::vec(-10.0f64..10.0, 4)) {
                let a = sample_gaussian_matrix(6, 4, seed).unwrap();
                let neg: Vec<f64> = x.iter().map(|v| -v).collect();
                prop_assert_eq!(measure(&a, &x).unwrap(), measure(&a, &neg).unwrap());
            }

            #[test]
            fn signed_distance_is_a_symmetric_quotient_metric(
                x in prop::collection::vec(-10.0f64..10.0, 5),
                z in prop::collection::vec(-10.0f64..10.0, 5),
            ) {
                let dxz = signed_distance(&x, &z).unwrap();
                prop_assert!(dxz >= 0.0);
                prop_assert_eq!(dxz, signed_distance(&z, &x).unwrap());
                let neg: Vec<f64> = z.iter().map(|v| -v).collect();
                prop_assert!((dxz - signed_distance(&x, &neg).unwrap()).abs() <= 1e-12);
                let s = aligning_sign(&x, &z);
                let aligned = norm(&linalg::sub(&x, &linalg::scale(&z, s)));
                prop_assert!((aligned - dxz).abs() <= 1e-9 * (1.0 + dxz));
            }
        }
    }
}
