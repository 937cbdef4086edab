//! Scalar types the jet engine and the small dense linear algebra run over.
//!
//! Everything numeric is generic over [`Scalar`] so the same code path can be
//! evaluated on plain `f64` or on [`Dual`] numbers. The dual path is how the
//! Berwald coefficients are obtained: the nonlinear connection is computed
//! with every `y` component seeded as a dual variable, and the tangent part of
//! the result is the exact `y`-derivative.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Maximum supported dimension of the base manifold.
pub const MAX_DIM: usize = 6;

pub trait Scalar:
    Copy
    + Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    fn from_f64(v: f64) -> Self;

    /// Real (primal) part.
    fn re(&self) -> f64;

    /// `self^r` for real exponent `r`. Callers guarantee the primal part is
    /// in the domain of the power.
    fn powf(self, r: f64) -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    fn one() -> Self {
        Self::from_f64(1.0)
    }

    fn scale(self, c: f64) -> Self {
        self * Self::from_f64(c)
    }

    fn recip(self) -> Self {
        Self::one() / self
    }

    fn sqrt(self) -> Self {
        self.powf(0.5)
    }
}

impl Scalar for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }

    #[inline]
    fn re(&self) -> f64 {
        *self
    }

    #[inline]
    fn powf(self, r: f64) -> Self {
        if r == 1.0 {
            self
        } else if r == 2.0 {
            self * self
        } else if r == -1.0 {
            1.0 / self
        } else if r == 0.5 {
            self.sqrt()
        } else {
            f64::powf(self, r)
        }
    }

    #[inline]
    fn scale(self, c: f64) -> Self {
        self * c
    }
}

/// First-order dual number with up to [`MAX_DIM`] tangent directions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual {
    pub re: f64,
    pub eps: [f64; MAX_DIM],
}

impl Dual {
    pub fn constant(re: f64) -> Self {
        Dual { re, eps: [0.0; MAX_DIM] }
    }

    /// A variable with unit tangent in direction `k`.
    pub fn variable(re: f64, k: usize) -> Self {
        let mut eps = [0.0; MAX_DIM];
        eps[k] = 1.0;
        Dual { re, eps }
    }

    /// Chain rule for a univariate map with value `f0` and derivative `f1`.
    #[inline]
    fn chain(self, f0: f64, f1: f64) -> Self {
        let mut eps = [0.0; MAX_DIM];
        for (o, e) in eps.iter_mut().zip(self.eps.iter()) {
            *o = f1 * e;
        }
        Dual { re: f0, eps }
    }
}

impl Add for Dual {
    type Output = Dual;
    #[inline]
    fn add(mut self, rhs: Dual) -> Dual {
        self += rhs;
        self
    }
}

impl AddAssign for Dual {
    #[inline]
    fn add_assign(&mut self, rhs: Dual) {
        self.re += rhs.re;
        for (a, b) in self.eps.iter_mut().zip(rhs.eps.iter()) {
            *a += b;
        }
    }
}

impl Sub for Dual {
    type Output = Dual;
    #[inline]
    fn sub(mut self, rhs: Dual) -> Dual {
        self -= rhs;
        self
    }
}

impl SubAssign for Dual {
    #[inline]
    fn sub_assign(&mut self, rhs: Dual) {
        self.re -= rhs.re;
        for (a, b) in self.eps.iter_mut().zip(rhs.eps.iter()) {
            *a -= b;
        }
    }
}

impl Mul for Dual {
    type Output = Dual;
    #[inline]
    fn mul(self, rhs: Dual) -> Dual {
        let mut eps = [0.0; MAX_DIM];
        for ((o, a), b) in eps.iter_mut().zip(self.eps.iter()).zip(rhs.eps.iter()) {
            *o = a * rhs.re + self.re * b;
        }
        Dual { re: self.re * rhs.re, eps }
    }
}

impl MulAssign for Dual {
    #[inline]
    fn mul_assign(&mut self, rhs: Dual) {
        *self = *self * rhs;
    }
}

impl Div for Dual {
    type Output = Dual;
    #[inline]
    fn div(self, rhs: Dual) -> Dual {
        let inv = 1.0 / rhs.re;
        let q = self.re * inv;
        let mut eps = [0.0; MAX_DIM];
        for ((o, a), b) in eps.iter_mut().zip(self.eps.iter()).zip(rhs.eps.iter()) {
            *o = (a - q * b) * inv;
        }
        Dual { re: q, eps }
    }
}

impl Neg for Dual {
    type Output = Dual;
    #[inline]
    fn neg(self) -> Dual {
        self.chain(-self.re, -1.0)
    }
}

impl Scalar for Dual {
    fn from_f64(v: f64) -> Self {
        Dual::constant(v)
    }

    fn re(&self) -> f64 {
        self.re
    }

    fn powf(self, r: f64) -> Self {
        let f0 = Scalar::powf(self.re, r);
        let f1 = if r == 0.0 { 0.0 } else { r * Scalar::powf(self.re, r - 1.0) };
        self.chain(f0, f1)
    }

    fn scale(self, c: f64) -> Self {
        self.chain(self.re * c, c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_product_and_quotient_rules() {
        let x = Dual::variable(3.0, 0);
        let y = Dual::variable(2.0, 1);
        let p = x * y;
        assert_eq!(p.re, 6.0);
        assert_eq!(p.eps[0], 2.0);
        assert_eq!(p.eps[1], 3.0);
        let q = x / y;
        assert_eq!(q.re, 1.5);
        assert!((q.eps[0] - 0.5).abs() < 1e-15);
        assert!((q.eps[1] + 0.75).abs() < 1e-15);
    }

    #[test]
    fn dual_power() {
        let x = Dual::variable(4.0, 2);
        let s = x.sqrt();
        assert_eq!(s.re, 2.0);
        assert!((s.eps[2] - 0.25).abs() < 1e-15);
        let c = x.powf(-1.5);
        assert!((c.eps[2] - (-1.5 * 4f64.powf(-2.5))).abs() < 1e-15);
    }
}
