//! Small dense linear algebra: Gauss-Jordan inversion and rank-one updates.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{Matrix, Vector};
use crate::tolerance::UPDATE_GUARD;

/// Relative determinant guard for [`invert_sym`].
pub const DET_GUARD: f64 = 1e-12;

/// Inverse and determinant of a square matrix by Gauss-Jordan elimination
/// with partial pivoting (pivot choice uses the real part).
pub fn invert<T: Scalar>(m: &Matrix<T>) -> Result<(Matrix<T>, T)> {
    let n = m.dim();
    let mut a: Vec<Vec<T>> = (0..n).map(|i| (0..n).map(|j| m.get(i, j)).collect()).collect();
    let mut inv: Vec<Vec<T>> = (0..n).map(|i| (0..n).map(|j| if i == j { T::one() } else { T::zero() }).collect()).collect();
    let scale = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).fold(0.0f64, |s, (i, j)| s.max(m.get(i, j).re().abs()));
    let mut det = T::one();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&p, &q| a[p][col].re().abs().partial_cmp(&a[q][col].re().abs()).unwrap_or(std::cmp::Ordering::Equal))
            .unwrap_or(col);
        if a[piv][col].re() == 0.0 {
            return Err(Error::SingularMatrix { det: 0.0 });
        }
        if piv != col {
            a.swap(piv, col);
            inv.swap(piv, col);
            det = -det;
        }
        let p = a[col][col];
        det *= p;
        let pr = p.recip();
        for j in 0..n {
            a[col][j] *= pr;
            inv[col][j] *= pr;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[r][col];
            for j in 0..n {
                let t = a[col][j];
                a[r][j] -= f * t;
                let t = inv[col][j];
                inv[r][j] -= f * t;
            }
        }
    }
    if det.re().abs() <= DET_GUARD * scale.powi(n as i32) {
        return Err(Error::SingularMatrix { det: det.re() });
    }
    Ok((Matrix::from_fn(n, |i, j| inv[i][j]), det))
}

/// Inverse of a symmetric matrix. The result is symmetrized and flagged
/// symmetric.
pub fn invert_sym<T: Scalar>(m: &Matrix<T>) -> Result<Matrix<T>> {
    let (inv, _) = invert(m)?;
    Ok(Matrix::symmetric_from_fn(m.dim(), |i, j| (inv.get(i, j) + inv.get(j, i)).scale(0.5)))
}

pub fn determinant(m: &Matrix) -> f64 {
    match invert(m) {
        Ok((_, d)) => d,
        Err(Error::SingularMatrix { det }) => det,
        Err(_) => 0.0,
    }
}

/// Solves `m x = rhs`.
pub fn solve(m: &Matrix, rhs: &Vector) -> Result<Vector> {
    let (inv, _) = invert(m)?;
    Ok(inv.mul_vec(rhs))
}

/// Inverse and determinant of `l = m + n ⊗ n` from the inverse and
/// determinant of `m`:
/// `l^ij = m^ij - n^i n^j / (1 + n_k n^k)`, `det l = (1 + n_k n^k) det m`.
pub fn matsumoto_invert(m_inv: &Matrix, n_vec: &Vector, det_m: f64) -> Result<(Matrix, f64)> {
    signed_rank_one_inverse(m_inv, n_vec, 1.0, det_m)
}

/// Inverse and determinant of `m + s u ⊗ u` for a sign (or any real) `s`.
pub fn signed_rank_one_inverse(m_inv: &Matrix, u: &Vector, s: f64, det_m: f64) -> Result<(Matrix, f64)> {
    let up = m_inv.mul_vec(u);
    let denom = 1.0 + s * u.dot(&up);
    if denom.abs() <= UPDATE_GUARD {
        return Err(Error::DegenerateUpdate { denom });
    }
    let c = s / denom;
    let n = m_inv.dim();
    let inv = Matrix::symmetric_from_fn(n, |i, j| 0.5 * (m_inv.get(i, j) + m_inv.get(j, i)) - c * up[i] * up[j]);
    Ok((inv, denom * det_m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_diagonal() {
        let i3 = Matrix::<f64>::identity(3);
        assert_eq!(invert_sym(&i3).unwrap(), Matrix::symmetric_from_fn(3, |i, j| if i == j { 1.0 } else { 0.0 }));
        let d = Matrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 4.0]]);
        let inv = invert_sym(&d).unwrap();
        assert_eq!(inv.get(0, 0), 0.5);
        assert_eq!(inv.get(1, 1), 0.25);
        assert_eq!(inv.get(0, 1), 0.0);
        assert_eq!(determinant(&d), 8.0);
    }

    #[test]
    fn singular_is_reported() {
        let s = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(matches!(invert_sym(&s), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn rank_one_of_identity() {
        let e1 = Vector::from(vec![1.0, 0.0, 0.0]);
        let (inv, det) = matsumoto_invert(&Matrix::identity(3), &e1, 1.0).unwrap();
        assert_eq!(det, 2.0);
        assert_eq!(inv.get(0, 0), 0.5);
        assert_eq!(inv.get(1, 1), 1.0);
    }

    #[test]
    fn zero_update_is_identity_map() {
        let m = Matrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]);
        let mi = invert_sym(&m).unwrap();
        let (inv, det) = matsumoto_invert(&mi, &Vector::zeros(2), 1.75).unwrap();
        assert_eq!(inv, mi);
        assert_eq!(det, 1.75);
    }

    #[test]
    fn degenerate_signed_update() {
        let e1 = Vector::from(vec![1.0, 0.0]);
        let r = signed_rank_one_inverse(&Matrix::identity(2), &e1, -1.0, 1.0);
        assert!(matches!(r, Err(Error::DegenerateUpdate { .. })));
    }
}
