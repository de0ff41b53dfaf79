//! Eigendecomposition of general (non-Hermitian) complex matrices.
//!
//! nalgebra provides the complex Schur form `A = Q T Q†`; eigenvectors are
//! recovered from the upper-triangular `T` by back-substitution, perturbing
//! tiny pivots the same way LAPACK's `ztrevc` does.

use nalgebra::{DMatrix, DVector, Schur};

use crate::C64;

const SCHUR_MAX_ITER: usize = 10_000;

/// Convergence thresholds tried in turn; the shifted QR iteration can stall
/// at the strictest one when several diagonal entries are near zero.
const SCHUR_EPS: [f64; 4] = [f64::EPSILON, 1e-15, 1e-14, 1e-13];

fn schur(m: &DMatrix<C64>) -> Option<(DMatrix<C64>, DMatrix<C64>)> {
    SCHUR_EPS
        .iter()
        .find_map(|&eps| Schur::try_new(m.clone(), eps, SCHUR_MAX_ITER))
        .map(Schur::unpack)
}

#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<C64>,
    /// Right eigenvectors as unit-norm columns.
    pub vectors: DMatrix<C64>,
}

/// Eigenvalues only.
pub fn eigenvalues(m: &DMatrix<C64>) -> Option<Vec<C64>> {
    let (_, t) = schur(m)?;
    Some((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Full eigendecomposition `A V = V diag(values)`.
pub fn eigen(m: &DMatrix<C64>) -> Option<Eigen> {
    let n = m.nrows();
    let (q, t) = schur(m)?;
    let values: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();

    let scale = t.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let small = f64::EPSILON * scale;

    let mut y = DMatrix::<C64>::zeros(n, n);
    for k in 0..n {
        let lambda = values[k];
        let smin = (f64::EPSILON * lambda.norm()).max(small);
        y[(k, k)] = C64::new(1.0, 0.0);
        for j in (0..k).rev() {
            let mut acc = C64::new(0.0, 0.0);
            for l in (j + 1)..=k {
                acc += t[(j, l)] * y[(l, k)];
            }
            let mut pivot = t[(j, j)] - lambda;
            if pivot.norm() < smin {
                pivot = C64::new(smin, 0.0);
            }
            y[(j, k)] = -acc / pivot;
        }
    }
    let mut vectors = q * y;
    for mut col in vectors.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= C64::from(norm);
        }
    }
    Some(Eigen { values, vectors })
}

impl Eigen {
    /// `‖A V − V Λ‖_F / ‖A‖_F`.
    pub fn residual(&self, m: &DMatrix<C64>) -> f64 {
        let lambda = DMatrix::from_diagonal(&DVector::from_vec(self.values.clone()));
        let r = m * &self.vectors - &self.vectors * lambda;
        r.norm() / m.norm().max(f64::MIN_POSITIVE)
    }
}

/// Frobenius-norm condition number `‖V‖_F ‖V⁻¹‖_F`, which bounds the
/// 2-norm condition number from above. `None` if `V` is singular.
pub fn condition_number(v: &DMatrix<C64>) -> Option<(f64, DMatrix<C64>)> {
    let inv = v.clone().try_inverse()?;
    let cond = v.norm() * inv.norm();
    if cond.is_finite() { Some((cond, inv)) } else { None }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn triangular_and_dense() {
        let m = DMatrix::from_row_slice(
            3,
            3,
            &[
                c(1.0, 0.0),
                c(2.0, 1.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(-1.0, 0.5),
                c(3.0, 0.0),
                c(0.5, 0.0),
                c(0.0, -2.0),
                c(2.0, 0.0),
            ],
        );
        let e = eigen(&m).unwrap();
        assert!(e.residual(&m) < 1e-13);
        let sum: C64 = e.values.iter().sum();
        assert!((sum - m.trace()).norm() < 1e-12);
        let (cond, inv) = condition_number(&e.vectors).unwrap();
        assert!(cond < 1e6);
        let id = &e.vectors * inv;
        assert!((id - DMatrix::identity(3, 3)).camax() < 1e-12);
    }

    #[test]
    fn degenerate_diagonalizable() {
        // 2·identity on a 2-block plus a distinct eigenvalue
        let mut m = DMatrix::<C64>::zeros(3, 3);
        m[(0, 0)] = c(2.0, 0.0);
        m[(1, 1)] = c(2.0, 0.0);
        m[(2, 2)] = c(-1.0, 1.0);
        m[(0, 2)] = c(1.0, 0.0);
        let e = eigen(&m).unwrap();
        assert!(e.residual(&m) < 1e-13);
        assert!(condition_number(&e.vectors).unwrap().0 < 1e3);
    }

    #[test]
    fn rotation_generator() {
        let m = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let mut ev = eigenvalues(&m).unwrap();
        ev.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((ev[0] - c(0.0, -1.0)).norm() < 1e-14);
        assert!((ev[1] - c(0.0, 1.0)).norm() < 1e-14);
    }
}
