//! Dense small-dimension tensors of rank 1, 2 and 3.
//!
//! Indices are zero-based in code. Symmetric containers enforce their
//! symmetry on write: `set` mirrors the value into every permuted slot, so a
//! symmetric matrix satisfies `m[(i, j)] == m[(j, i)]` bit for bit.
//!
//! Mixed rank-3 objects such as `C^h_ij`, `F^i_jk` or `D^i_jk` are stored in
//! a [`Tensor3`] whose first slot is the upper index.

use std::ops::{Index, IndexMut};

use crate::scalar::{Scalar, MAX_DIM};

#[derive(Clone, Debug, PartialEq)]
pub struct Vector<T = f64> {
    data: Vec<T>,
}

impl<T: Scalar> Vector<T> {
    pub fn zeros(n: usize) -> Self {
        Vector { data: vec![T::zero(); n] }
    }

    pub fn from_vec(data: Vec<T>) -> Self {
        Vector { data }
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize) -> T) -> Self {
        Vector { data: (0..n).map(f).collect() }
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.data.iter()
    }

    pub fn dot(&self, other: &Vector<T>) -> T {
        debug_assert_eq!(self.dim(), other.dim());
        let mut s = T::zero();
        for (a, b) in self.data.iter().zip(other.data.iter()) {
            s += *a * *b;
        }
        s
    }

    pub fn scale(&self, c: T) -> Vector<T> {
        Vector { data: self.data.iter().map(|&a| a * c).collect() }
    }

    pub fn add(&self, other: &Vector<T>) -> Vector<T> {
        Vector { data: self.data.iter().zip(other.data.iter()).map(|(&a, &b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Vector<T>) -> Vector<T> {
        Vector { data: self.data.iter().zip(other.data.iter()).map(|(&a, &b)| a - b).collect() }
    }

    /// `self + c * other`
    pub fn axpy(&self, c: T, other: &Vector<T>) -> Vector<T> {
        Vector { data: self.data.iter().zip(other.data.iter()).map(|(&a, &b)| a + c * b).collect() }
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Vector<U> {
        Vector { data: self.data.iter().map(|&a| f(a)).collect() }
    }
}

impl Vector<f64> {
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }
}

impl<T> Index<usize> for Vector<T> {
    type Output = T;
    #[inline]
    fn index(&self, i: usize) -> &T {
        &self.data[i]
    }
}

impl<T> IndexMut<usize> for Vector<T> {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.data[i]
    }
}

impl From<Vec<f64>> for Vector<f64> {
    fn from(v: Vec<f64>) -> Self {
        Vector { data: v }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T = f64> {
    n: usize,
    data: Vec<T>,
    symmetric: bool,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(n: usize) -> Self {
        Matrix { n, data: vec![T::zero(); n * n], symmetric: false }
    }

    pub fn zeros_symmetric(n: usize) -> Self {
        Matrix { n, data: vec![T::zero(); n * n], symmetric: true }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros_symmetric(n);
        for i in 0..n {
            m.set(i, i, T::one());
        }
        m
    }

    /// General matrix with `f(i, j)` evaluated at every entry.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    /// Symmetric matrix; `f` is evaluated on `i <= j` only.
    pub fn symmetric_from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros_symmetric(n);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
        if self.symmetric {
            self.data[j * self.n + i] = v;
        }
    }

    pub fn row(&self, i: usize) -> Vector<T> {
        Vector::from_vec(self.data[i * self.n..(i + 1) * self.n].to_vec())
    }

    pub fn column(&self, j: usize) -> Vector<T> {
        Vector::from_fn(self.n, |i| self.get(i, j))
    }

    /// `M_ij v^j`
    pub fn mul_vec(&self, v: &Vector<T>) -> Vector<T> {
        Vector::from_fn(self.n, |i| {
            let mut s = T::zero();
            for j in 0..self.n {
                s += self.get(i, j) * v[j];
            }
            s
        })
    }

    /// `v^i M_ij`
    pub fn vec_mul(&self, v: &Vector<T>) -> Vector<T> {
        Vector::from_fn(self.n, |j| {
            let mut s = T::zero();
            for i in 0..self.n {
                s += v[i] * self.get(i, j);
            }
            s
        })
    }

    /// `u^i M_ij v^j`
    pub fn quad(&self, u: &Vector<T>, v: &Vector<T>) -> T {
        u.dot(&self.mul_vec(v))
    }

    pub fn matmul(&self, other: &Matrix<T>) -> Matrix<T> {
        Matrix::from_fn(self.n, |i, j| {
            let mut s = T::zero();
            for r in 0..self.n {
                s += self.get(i, r) * other.get(r, j);
            }
            s
        })
    }

    pub fn transpose(&self) -> Matrix<T> {
        let mut t = Matrix::from_fn(self.n, |i, j| self.get(j, i));
        t.symmetric = self.symmetric;
        t
    }

    pub fn scale(&self, c: T) -> Matrix<T> {
        Matrix { n: self.n, data: self.data.iter().map(|&a| a * c).collect(), symmetric: self.symmetric }
    }

    pub fn add(&self, other: &Matrix<T>) -> Matrix<T> {
        Matrix {
            n: self.n,
            data: self.data.iter().zip(other.data.iter()).map(|(&a, &b)| a + b).collect(),
            symmetric: self.symmetric && other.symmetric,
        }
    }

    pub fn sub(&self, other: &Matrix<T>) -> Matrix<T> {
        Matrix {
            n: self.n,
            data: self.data.iter().zip(other.data.iter()).map(|(&a, &b)| a - b).collect(),
            symmetric: self.symmetric && other.symmetric,
        }
    }

    /// `u_i v_j`
    pub fn outer(u: &Vector<T>, v: &Vector<T>) -> Matrix<T> {
        Matrix::from_fn(u.dim(), |i, j| u[i] * v[j])
    }

    /// `u_i u_j`, flagged symmetric.
    pub fn outer_self(u: &Vector<T>) -> Matrix<T> {
        Matrix::symmetric_from_fn(u.dim(), |i, j| u[i] * u[j])
    }

    /// `u_i v_j + v_i u_j`, flagged symmetric.
    pub fn sym_outer(u: &Vector<T>, v: &Vector<T>) -> Matrix<T> {
        Matrix::symmetric_from_fn(u.dim(), |i, j| u[i] * v[j] + v[i] * u[j])
    }

    /// Symmetric part `(M + M^T)/2`, flagged symmetric.
    pub fn symmetric_part(&self) -> Matrix<T> {
        let half = T::from_f64(0.5);
        Matrix::symmetric_from_fn(self.n, |i, j| (self.get(i, j) + self.get(j, i)) * half)
    }

    /// Antisymmetric part `(M - M^T)/2`.
    pub fn antisymmetric_part(&self) -> Matrix<T> {
        let half = T::from_f64(0.5);
        Matrix::from_fn(self.n, |i, j| (self.get(i, j) - self.get(j, i)) * half)
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Matrix<U> {
        Matrix { n: self.n, data: self.data.iter().map(|&a| f(a)).collect(), symmetric: self.symmetric }
    }
}

impl Matrix<f64> {
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        Matrix::from_fn(n, |i, j| rows[i][j])
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).into_vec()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    /// Largest `|M_ij - M_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n + j]
    }
}

/// Which index permutations a [`Tensor3`] is invariant under.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symmetry {
    None,
    /// All six permutations.
    Full,
    /// Swap of the last two slots.
    LastTwo,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3<T = f64> {
    n: usize,
    data: Vec<T>,
    symmetry: Symmetry,
}

impl<T: Scalar> Tensor3<T> {
    pub fn zeros(n: usize, symmetry: Symmetry) -> Self {
        Tensor3 { n, data: vec![T::zero(); n * n * n], symmetry }
    }

    /// Builds a tensor calling `f` once per canonical index triple of the
    /// requested symmetry and mirroring the value to the other slots.
    pub fn from_fn(n: usize, symmetry: Symmetry, mut f: impl FnMut(usize, usize, usize) -> T) -> Self {
        let mut t = Self::zeros(n, symmetry);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let canonical = match symmetry {
                        Symmetry::None => true,
                        Symmetry::Full => i <= j && j <= k,
                        Symmetry::LastTwo => j <= k,
                    };
                    if canonical {
                        t.set(i, j, k, f(i, j, k));
                    }
                }
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    #[inline]
    fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> T {
        self.data[self.offset(i, j, k)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, v: T) {
        match self.symmetry {
            Symmetry::None => {
                let o = self.offset(i, j, k);
                self.data[o] = v;
            }
            Symmetry::LastTwo => {
                let o1 = self.offset(i, j, k);
                let o2 = self.offset(i, k, j);
                self.data[o1] = v;
                self.data[o2] = v;
            }
            Symmetry::Full => {
                for (a, b, c) in [(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)] {
                    let o = self.offset(a, b, c);
                    self.data[o] = v;
                }
            }
        }
    }

    /// `T_ijk v^k`
    pub fn contract_last(&self, v: &Vector<T>) -> Matrix<T> {
        let f = |i, j| {
            let mut s = T::zero();
            for k in 0..self.n {
                s += self.get(i, j, k) * v[k];
            }
            s
        };
        if self.symmetry == Symmetry::Full {
            Matrix::symmetric_from_fn(self.n, f)
        } else {
            Matrix::from_fn(self.n, f)
        }
    }

    /// `v^i T_ijk`
    pub fn contract_first(&self, v: &Vector<T>) -> Matrix<T> {
        let f = |j, k| {
            let mut s = T::zero();
            for i in 0..self.n {
                s += v[i] * self.get(i, j, k);
            }
            s
        };
        if self.symmetry == Symmetry::None {
            Matrix::from_fn(self.n, f)
        } else {
            Matrix::symmetric_from_fn(self.n, f)
        }
    }

    /// `M^{hr} T_rjk`; symmetry in the last two slots is preserved.
    pub fn raise_first(&self, m: &Matrix<T>) -> Tensor3<T> {
        let sym = match self.symmetry {
            Symmetry::None => Symmetry::None,
            _ => Symmetry::LastTwo,
        };
        Tensor3::from_fn(self.n, sym, |h, j, k| {
            let mut s = T::zero();
            for r in 0..self.n {
                s += m.get(h, r) * self.get(r, j, k);
            }
            s
        })
    }

    pub fn scale(&self, c: T) -> Tensor3<T> {
        Tensor3 { n: self.n, data: self.data.iter().map(|&a| a * c).collect(), symmetry: self.symmetry }
    }

    pub fn add(&self, other: &Tensor3<T>) -> Tensor3<T> {
        Tensor3 {
            n: self.n,
            data: self.data.iter().zip(other.data.iter()).map(|(&a, &b)| a + b).collect(),
            symmetry: weaker(self.symmetry, other.symmetry),
        }
    }

    pub fn sub(&self, other: &Tensor3<T>) -> Tensor3<T> {
        Tensor3 {
            n: self.n,
            data: self.data.iter().zip(other.data.iter()).map(|(&a, &b)| a - b).collect(),
            symmetry: weaker(self.symmetry, other.symmetry),
        }
    }
}

fn weaker(a: Symmetry, b: Symmetry) -> Symmetry {
    match (a, b) {
        (Symmetry::Full, s) | (s, Symmetry::Full) => s,
        (Symmetry::LastTwo, Symmetry::LastTwo) => Symmetry::LastTwo,
        _ => Symmetry::None,
    }
}

impl Tensor3<f64> {
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    /// Largest deviation from invariance under the permutations the tensor
    /// claims to have (or all six, if `full` is set).
    pub fn permutation_defect(&self, full: bool) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let v = self.get(i, j, k);
                    worst = worst.max((v - self.get(i, k, j)).abs());
                    if full {
                        worst = worst.max((v - self.get(j, i, k)).abs());
                        worst = worst.max((v - self.get(k, j, i)).abs());
                    }
                }
            }
        }
        worst
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.n).map(|i| (0..self.n).map(|j| (0..self.n).map(|k| self.get(i, j, k)).collect()).collect()).collect()
    }
}

impl<T> Index<(usize, usize, usize)> for Tensor3<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j, k): (usize, usize, usize)) -> &T {
        &self.data[(i * self.n + j) * self.n + k]
    }
}

/// Checks a requested dimension against the supported range `1..=MAX_DIM`.
pub fn check_dim(n: usize) -> bool {
    (1..=MAX_DIM).contains(&n)
}

/// Largest `|a_i - b_i|` over two equally shaped coefficient lists.
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Flat views used by residual reporting.
pub trait Components {
    fn components(&self) -> Vec<f64>;
}

impl Components for f64 {
    fn components(&self) -> Vec<f64> {
        vec![*self]
    }
}

impl Components for Vector<f64> {
    fn components(&self) -> Vec<f64> {
        self.data.clone()
    }
}

impl Components for Matrix<f64> {
    fn components(&self) -> Vec<f64> {
        self.data.clone()
    }
}

impl Components for Tensor3<f64> {
    fn components(&self) -> Vec<f64> {
        self.data.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_matrix_set_mirrors() {
        let mut m = Matrix::<f64>::zeros_symmetric(3);
        m.set(0, 2, 1.25);
        assert_eq!(m[(2, 0)], 1.25);
        assert_eq!(m.asymmetry(), 0.0);
    }

    #[test]
    fn full_tensor_is_permutation_invariant() {
        let t = Tensor3::<f64>::from_fn(3, Symmetry::Full, |i, j, k| (i + 2 * j + 5 * k) as f64 + 0.1);
        assert_eq!(t.permutation_defect(true), 0.0);
    }

    #[test]
    fn last_two_symmetry() {
        let t = Tensor3::<f64>::from_fn(2, Symmetry::LastTwo, |i, j, k| (4 * i + 2 * j + k) as f64);
        assert_eq!(t.get(1, 0, 1), t.get(1, 1, 0));
        assert_eq!(t.permutation_defect(false), 0.0);
        assert!(t.permutation_defect(true) > 0.0);
    }

    #[test]
    fn raise_first_with_identity_is_noop() {
        let t = Tensor3::<f64>::from_fn(3, Symmetry::Full, |i, j, k| (i * j + k) as f64);
        let r = t.raise_first(&Matrix::identity(3));
        assert_eq!(r.to_nested(), t.to_nested());
    }
}
