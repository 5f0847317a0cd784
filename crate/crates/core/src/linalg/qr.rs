//! Householder QR and least squares.

use super::{dot, norm, Matrix};
use crate::error::{invalid, Error, Result};

/// A diagonal entry of R smaller than this times the largest one marks the
/// factored matrix as rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Householder QR of a tall matrix `M = Q R` (rows ≥ cols).
///
/// Reflectors are kept in compact form; `Q` is never formed unless asked for
/// with [`QrFactorization::thin_q`].
#[derive(Debug, Clone)]
pub struct QrFactorization {
    rows: usize,
    cols: usize,
    // Column k holds the reflector v_k in rows k.. (column-major, length rows).
    reflectors: Vec<f64>,
    betas: Vec<f64>,
    // Upper triangle of R, row-major cols x cols.
    r: Vec<f64>,
}

impl QrFactorization {
    pub fn new(m: &Matrix) -> Result<Self> {
        let (rows, cols) = (m.rows(), m.cols());
        if cols == 0 || rows < cols {
            return Err(invalid(format!(
                "QR needs rows >= cols >= 1, got {rows}x{cols}"
            )));
        }
        let mut work = vec![0.0; rows * cols];
        for i in 0..rows {
            for (j, &v) in m.row(i).iter().enumerate() {
                work[j * rows + i] = v;
            }
        }
        let mut betas = vec![0.0; cols];
        let mut r = vec![0.0; cols * cols];
        for k in 0..cols {
            let (done, rest) = work.split_at_mut((k + 1) * rows);
            let col = &mut done[k * rows + k..];
            let alpha = norm(col);
            if alpha == 0.0 {
                // Zero column: identity reflector, R_kk = 0.
                betas[k] = 0.0;
                r[k * cols + k] = 0.0;
                for j in k + 1..cols {
                    r[k * cols + j] = rest[(j - k - 1) * rows + k];
                }
                continue;
            }
            let diag = if col[0] >= 0.0 { -alpha } else { alpha };
            col[0] -= diag;
            let vnorm2 = dot(col, col);
            let beta = 2.0 / vnorm2;
            betas[k] = beta;
            r[k * cols + k] = diag;
            for j in k + 1..cols {
                let target = &mut rest[(j - k - 1) * rows + k..(j - k) * rows];
                let s = beta * dot(col, target);
                for (t, v) in target.iter_mut().zip(col.iter()) {
                    *t -= s * v;
                }
                r[k * cols + j] = target[0];
            }
        }
        Ok(Self {
            rows,
            cols,
            reflectors: work,
            betas,
            r,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn r_diagonal(&self) -> Vec<f64> {
        (0..self.cols).map(|k| self.r[k * self.cols + k]).collect()
    }

    /// True when some |R_kk| falls below [`RANK_TOLERANCE`] times the largest.
    pub fn is_rank_deficient(&self) -> bool {
        let diag = self.r_diagonal();
        let largest = diag.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        largest == 0.0 || diag.iter().any(|v| v.abs() < RANK_TOLERANCE * largest)
    }

    /// Overwrites `b` with `Qᵀ b`.
    pub fn apply_qt(&self, b: &mut [f64]) {
        debug_assert_eq!(b.len(), self.rows);
        for k in 0..self.cols {
            let beta = self.betas[k];
            if beta == 0.0 {
                continue;
            }
            let v = &self.reflectors[k * self.rows + k..(k + 1) * self.rows];
            let tail = &mut b[k..];
            let s = beta * dot(v, tail);
            for (t, vi) in tail.iter_mut().zip(v) {
                *t -= s * vi;
            }
        }
    }

    /// Overwrites `b` with `Q b` (full m x m orthogonal factor).
    fn apply_q(&self, b: &mut [f64]) {
        for k in (0..self.cols).rev() {
            let beta = self.betas[k];
            if beta == 0.0 {
                continue;
            }
            let v = &self.reflectors[k * self.rows + k..(k + 1) * self.rows];
            let tail = &mut b[k..];
            let s = beta * dot(v, tail);
            for (t, vi) in tail.iter_mut().zip(v) {
                *t -= s * vi;
            }
        }
    }

    /// First `cols` columns of Q, as a rows x cols matrix.
    pub fn thin_q(&self) -> Matrix {
        let mut q = Matrix::zeros(self.rows, self.cols);
        let mut e = vec![0.0; self.rows];
        for j in 0..self.cols {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            self.apply_q(&mut e);
            for (i, &v) in e.iter().enumerate() {
                q[(i, j)] = v;
            }
        }
        q
    }

    /// Solves `min ‖M v − b‖₂`, returning `(v, ‖M v − b‖₂)`.
    ///
    /// The residual norm is read off the trailing part of `Qᵀ b`.
    pub fn solve(&self, b: &[f64]) -> Result<(Vec<f64>, f64)> {
        if b.len() != self.rows {
            return Err(invalid(format!(
                "right-hand side has length {}, expected {}",
                b.len(),
                self.rows
            )));
        }
        if self.is_rank_deficient() {
            return Err(Error::Degenerate(format!(
                "rank-deficient {}x{} system",
                self.rows, self.cols
            )));
        }
        let mut qtb = b.to_vec();
        self.apply_qt(&mut qtb);
        let residual = norm(&qtb[self.cols..]);
        let n = self.cols;
        let mut x = qtb[..n].to_vec();
        for k in (0..n).rev() {
            let row = &self.r[k * n..(k + 1) * n];
            let s = dot(&row[k + 1..], &x[k + 1..]);
            x[k] = (x[k] - s) / row[k];
        }
        Ok((x, residual))
    }
}

/// `argmin_v ‖M v − b‖₂` via Householder QR, with the attained residual norm.
pub fn least_squares(m: &Matrix, b: &[f64]) -> Result<(Vec<f64>, f64)> {
    if b.len() != m.rows() {
        return Err(invalid(format!(
            "right-hand side has length {}, matrix has {} rows",
            b.len(),
            m.rows()
        )));
    }
    QrFactorization::new(m)?.solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, sample_gaussian_matrix, sub};
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_system() {
        let (x, res) = least_squares(&Matrix::identity(3), &[1.0, 2.0, 3.0]).unwrap();
        assert_abs_diff_eq!(x.as_slice(), [1.0, 2.0, 3.0].as_slice(), epsilon = 1e-15);
        assert_abs_diff_eq!(res, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn mean_of_two_points() {
        let m = Matrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        let (x, res) = least_squares(&m, &[0.0, 2.0]).unwrap();
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(res, 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn consistent_random_system() {
        let m = sample_gaussian_matrix(20, 5, 7).unwrap();
        let v_star = [0.3, -1.2, 2.5, 0.0, -0.7];
        let b = m.matvec(&v_star).unwrap();
        let (x, res) = least_squares(&m, &b).unwrap();
        assert!(max_abs(&sub(&x, &v_star)) <= 1e-10);
        assert!(res <= 1e-12);
    }

    #[test]
    fn residual_is_orthogonal_to_range() {
        for seed in 0..10 {
            let m = sample_gaussian_matrix(30, 6, seed).unwrap();
            let b = crate::linalg::gaussian_vector(30, &mut crate::linalg::seeded_rng(seed + 100));
            let (x, res) = least_squares(&m, &b).unwrap();
            let r = sub(&m.matvec(&x).unwrap(), &b);
            let mt_r = m.matvec_transpose(&r).unwrap();
            let mt_b = m.matvec_transpose(&b).unwrap();
            assert!(max_abs(&mt_r) <= 1e-8 * max_abs(&mt_b));
            assert_abs_diff_eq!(res, crate::linalg::norm(&r), epsilon = 1e-10);
        }
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]]).unwrap();
        assert!(matches!(least_squares(&m, &[1.0, 1.0, 1.0]), Err(Error::Degenerate(_))));
        let z = Matrix::zeros(3, 2);
        assert!(matches!(least_squares(&z, &[1.0, 1.0, 1.0]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn wide_and_mismatched_inputs_are_rejected() {
        assert!(least_squares(&Matrix::zeros(2, 3), &[0.0, 0.0]).is_err());
        assert!(least_squares(&Matrix::identity(2), &[0.0]).is_err());
    }

    #[test]
    fn thin_q_has_orthonormal_columns_and_reproduces_m() {
        let m = sample_gaussian_matrix(12, 4, 3).unwrap();
        let qr = QrFactorization::new(&m).unwrap();
        let q = qr.thin_q();
        let qtq = q.gram();
        assert!(qtq.max_abs_diff(&Matrix::identity(4)).unwrap() <= 1e-13);
        let mut r = Matrix::zeros(4, 4);
        for i in 0..4 {
            for j in i..4 {
                r[(i, j)] = qr.r[i * 4 + j];
            }
        }
        assert!(q.matmul(&r).unwrap().max_abs_diff(&m).unwrap() <= 1e-12);
    }
}
