//! Per-subspace measurement operators `A·U_r`, factored once and reused by
//! the initializer, every descent iteration, and the oracle.

use log::warn;

use crate::error::{invalid, Error, Result};
use crate::linalg::{Matrix, QrFactorization};
use crate::model::{SignalEstimate, UnionOfSubspaces};

/// Relative width of the band inside which two residuals count as tied.
pub const RESIDUAL_TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SubspaceOperator {
    /// `A·U_r`, m x d.
    pub product: Matrix,
    /// `None` when `A·U_r` is wide or numerically rank deficient.
    pub qr: Option<QrFactorization>,
}

/// `A` together with `A·U_r` and its QR factorization for every subspace.
#[derive(Debug, Clone)]
pub struct SubspaceOperators<'a> {
    a: &'a Matrix,
    union: &'a UnionOfSubspaces,
    operators: Vec<SubspaceOperator>,
}

/// Exact minimizer of `‖A x − b‖₂` over the union.
#[derive(Debug, Clone, PartialEq)]
pub struct UnionFit {
    pub estimate: SignalEstimate,
    pub residual: f64,
    /// Residual attained in each subspace (`None` for skipped ones).
    pub per_subspace: Vec<Option<f64>>,
    /// Subspaces whose `A·U_r` could not be solved against.
    pub skipped: Vec<usize>,
}

impl<'a> SubspaceOperators<'a> {
    pub fn new(a: &'a Matrix, union: &'a UnionOfSubspaces) -> Result<Self> {
        if a.cols() != union.ambient_dim() {
            return Err(invalid(format!(
                "measurement matrix has {} columns, union lives in dimension {}",
                a.cols(),
                union.ambient_dim()
            )));
        }
        let operators = union
            .bases()
            .iter()
            .map(|u| {
                let product = a.matmul(u)?;
                let qr = if product.rows() >= product.cols() {
                    QrFactorization::new(&product)
                        .ok()
                        .filter(|qr| !qr.is_rank_deficient())
                } else {
                    None
                };
                Ok(SubspaceOperator { product, qr })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            a,
            union,
            operators,
        })
    }

    pub fn a(&self) -> &Matrix {
        self.a
    }

    pub fn union(&self) -> &UnionOfSubspaces {
        self.union
    }

    pub fn operators(&self) -> &[SubspaceOperator] {
        &self.operators
    }

    pub fn num_measurements(&self) -> usize {
        self.a.rows()
    }

    /// Solves `min_α ‖A U_r α − b‖₂` for every `r` and keeps the best;
    /// ties within [`RESIDUAL_TIE_TOL`]`·‖b‖` go to the lowest index.
    pub fn fit(&self, b: &[f64]) -> Result<UnionFit> {
        if b.len() != self.a.rows() {
            return Err(invalid(format!(
                "right-hand side has length {}, expected {}",
                b.len(),
                self.a.rows()
            )));
        }
        let tie = RESIDUAL_TIE_TOL * crate::linalg::norm(b);
        let mut best: Option<(usize, Vec<f64>, f64)> = None;
        let mut per_subspace = Vec::with_capacity(self.operators.len());
        let mut skipped = Vec::new();
        for (r, op) in self.operators.iter().enumerate() {
            let Some(qr) = &op.qr else {
                skipped.push(r);
                per_subspace.push(None);
                continue;
            };
            let (alpha, residual) = qr.solve(b)?;
            per_subspace.push(Some(residual));
            if best.as_ref().is_none_or(|(_, _, res)| residual < res - tie) {
                best = Some((r, alpha, residual));
            }
        }
        if !skipped.is_empty() {
            warn!("skipped rank-deficient subspaces {skipped:?}");
        }
        let (r, alpha, residual) = best.ok_or_else(|| {
            Error::Degenerate(format!(
                "all {} subspace systems are rank deficient",
                self.operators.len()
            ))
        })?;
        Ok(UnionFit {
            estimate: SignalEstimate::from_coefficients(self.union, r, alpha)?,
            residual,
            per_subspace,
            skipped,
        })
    }
}
