//! Truncated jets of scalar fields on the tangent bundle.
//!
//! A [`JetBundle`] holds the value of a field `f(x, y)` at a point together
//! with its exact partial derivatives: up to third order in the directional
//! variables `y`, and first order in the positional variables `x` mixed with
//! up to two `y` derivatives. Jets form a truncated polynomial algebra, so
//! sums, products and smooth univariate maps of jets are again jets and
//! derivatives propagate by the Leibniz and Faà di Bruno rules.
//!
//! Slot conventions: `dxdy[(a, i)] = ∂_a ∂̇_i f` and
//! `dxdydy[(a, i, j)] = ∂_a ∂̇_i ∂̇_j f` (x slot first).

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{Matrix, Symmetry, Tensor3, Vector};

/// Which derivative slots a jet carries.
///
/// `y` is the highest total derivative order (1..=3). When `mixed` is set
/// the jet also carries one `x` derivative combined with up to `y - 1`
/// directional derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct JetOrder {
    pub y: u8,
    pub mixed: bool,
}

impl JetOrder {
    pub const Y1: JetOrder = JetOrder { y: 1, mixed: false };
    pub const Y2: JetOrder = JetOrder { y: 2, mixed: false };
    pub const Y3: JetOrder = JetOrder { y: 3, mixed: false };
    pub const FULL: JetOrder = JetOrder { y: 3, mixed: true };

    fn has_dydy(self) -> bool {
        self.y >= 2
    }
    fn has_dydydy(self) -> bool {
        self.y >= 3
    }
    fn has_dx(self) -> bool {
        self.mixed
    }
    fn has_dxdy(self) -> bool {
        self.mixed && self.y >= 2
    }
    fn has_dxdydy(self) -> bool {
        self.mixed && self.y >= 3
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JetBundle<T = f64> {
    n: usize,
    order: JetOrder,
    pub value: T,
    pub dy: Vector<T>,
    dydy: Option<Matrix<T>>,
    dydydy: Option<Tensor3<T>>,
    dx: Option<Vector<T>>,
    dxdy: Option<Matrix<T>>,
    dxdydy: Option<Tensor3<T>>,
}

impl<T: Scalar> JetBundle<T> {
    pub fn constant(c: T, n: usize, order: JetOrder) -> Self {
        JetBundle {
            n,
            order,
            value: c,
            dy: Vector::zeros(n),
            dydy: order.has_dydy().then(|| Matrix::zeros_symmetric(n)),
            dydydy: order.has_dydydy().then(|| Tensor3::zeros(n, Symmetry::Full)),
            dx: order.has_dx().then(|| Vector::zeros(n)),
            dxdy: order.has_dxdy().then(|| Matrix::zeros(n)),
            dxdydy: order.has_dxdydy().then(|| Tensor3::zeros(n, Symmetry::LastTwo)),
        }
    }

    /// The coordinate function `y^i` evaluated at `value`.
    pub fn var_y(i: usize, value: T, n: usize, order: JetOrder) -> Self {
        let mut j = Self::constant(value, n, order);
        j.dy[i] = T::one();
        j
    }

    /// The coordinate function `x^a` evaluated at `value`.
    pub fn var_x(a: usize, value: T, n: usize, order: JetOrder) -> Self {
        let mut j = Self::constant(value, n, order);
        if let Some(dx) = j.dx.as_mut() {
            dx[a] = T::one();
        }
        j
    }

    /// Assembles a `y`-only jet from explicitly known derivatives. The order
    /// is inferred from which slots are supplied.
    pub fn from_y_parts(value: T, dy: Vector<T>, dydy: Option<Matrix<T>>, dydydy: Option<Tensor3<T>>) -> Self {
        let n = dy.dim();
        let y = if dydy.is_none() {
            1
        } else if dydydy.is_none() {
            2
        } else {
            3
        };
        let dydy = dydy.map(|m| Matrix::symmetric_from_fn(n, |i, j| m.get(i, j)));
        let dydydy = dydydy.map(|t| Tensor3::from_fn(n, Symmetry::Full, |i, j, k| t.get(i, j, k)));
        JetBundle { n, order: JetOrder { y, mixed: false }, value, dy, dydy, dydydy, dx: None, dxdy: None, dxdydy: None }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> JetOrder {
        self.order
    }

    pub fn dydy(&self) -> Option<&Matrix<T>> {
        self.dydy.as_ref()
    }

    pub fn dydydy(&self) -> Option<&Tensor3<T>> {
        self.dydydy.as_ref()
    }

    pub fn dx(&self) -> Option<&Vector<T>> {
        self.dx.as_ref()
    }

    pub fn dxdy(&self) -> Option<&Matrix<T>> {
        self.dxdy.as_ref()
    }

    pub fn dxdydy(&self) -> Option<&Tensor3<T>> {
        self.dxdydy.as_ref()
    }

    fn lift(&self, other: &JetBundle<T>) -> JetOrder {
        debug_assert_eq!(self.n, other.n, "jets of different dimension");
        JetOrder { y: self.order.y.min(other.order.y), mixed: self.order.mixed && other.order.mixed }
    }

    pub fn add(&self, other: &JetBundle<T>) -> JetBundle<T> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &JetBundle<T>) -> JetBundle<T> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &JetBundle<T>, op: impl Fn(T, T) -> T) -> JetBundle<T> {
        let order = self.lift(other);
        let n = self.n;
        JetBundle {
            n,
            order,
            value: op(self.value, other.value),
            dy: Vector::from_fn(n, |i| op(self.dy[i], other.dy[i])),
            dydy: both(&self.dydy, &other.dydy, order.has_dydy())
                .map(|(a, b)| Matrix::symmetric_from_fn(n, |i, j| op(a.get(i, j), b.get(i, j)))),
            dydydy: both(&self.dydydy, &other.dydydy, order.has_dydydy())
                .map(|(a, b)| Tensor3::from_fn(n, Symmetry::Full, |i, j, k| op(a.get(i, j, k), b.get(i, j, k)))),
            dx: both(&self.dx, &other.dx, order.has_dx()).map(|(a, b)| Vector::from_fn(n, |i| op(a[i], b[i]))),
            dxdy: both(&self.dxdy, &other.dxdy, order.has_dxdy()).map(|(a, b)| Matrix::from_fn(n, |i, j| op(a.get(i, j), b.get(i, j)))),
            dxdydy: both(&self.dxdydy, &other.dxdydy, order.has_dxdydy())
                .map(|(a, b)| Tensor3::from_fn(n, Symmetry::LastTwo, |i, j, k| op(a.get(i, j, k), b.get(i, j, k)))),
        }
    }

    pub fn neg(&self) -> JetBundle<T> {
        self.scale(T::from_f64(-1.0))
    }

    pub fn scale(&self, c: T) -> JetBundle<T> {
        let n = self.n;
        JetBundle {
            n,
            order: self.order,
            value: self.value * c,
            dy: self.dy.scale(c),
            dydy: self.dydy.as_ref().map(|m| m.scale(c)),
            dydydy: self.dydydy.as_ref().map(|t| t.scale(c)),
            dx: self.dx.as_ref().map(|v| v.scale(c)),
            dxdy: self.dxdy.as_ref().map(|m| m.scale(c)),
            dxdydy: self.dxdydy.as_ref().map(|t| t.scale(c)),
        }
    }

    pub fn add_scalar(&self, c: T) -> JetBundle<T> {
        let mut out = self.clone();
        out.value += c;
        out
    }

    /// Product by the Leibniz rule.
    pub fn mul(&self, g: &JetBundle<T>) -> JetBundle<T> {
        let f = self;
        let order = f.lift(g);
        let n = f.n;
        let (f0, g0) = (f.value, g.value);
        let dy = Vector::from_fn(n, |i| f.dy[i] * g0 + f0 * g.dy[i]);
        let dydy = both(&f.dydy, &g.dydy, order.has_dydy()).map(|(fyy, gyy)| {
            Matrix::symmetric_from_fn(n, |i, j| fyy.get(i, j) * g0 + f.dy[i] * g.dy[j] + f.dy[j] * g.dy[i] + f0 * gyy.get(i, j))
        });
        let dydydy = match (both(&f.dydy, &g.dydy, true), both(&f.dydydy, &g.dydydy, order.has_dydydy())) {
            (Some((fyy, gyy)), Some((fyyy, gyyy))) => Some(Tensor3::from_fn(n, Symmetry::Full, |i, j, k| {
                fyyy.get(i, j, k) * g0
                    + fyy.get(i, j) * g.dy[k]
                    + fyy.get(i, k) * g.dy[j]
                    + fyy.get(j, k) * g.dy[i]
                    + f.dy[i] * gyy.get(j, k)
                    + f.dy[j] * gyy.get(i, k)
                    + f.dy[k] * gyy.get(i, j)
                    + f0 * gyyy.get(i, j, k)
            })),
            _ => None,
        };
        let dx = both(&f.dx, &g.dx, order.has_dx()).map(|(fx, gx)| Vector::from_fn(n, |a| fx[a] * g0 + f0 * gx[a]));
        let dxdy = match (both(&f.dx, &g.dx, true), both(&f.dxdy, &g.dxdy, order.has_dxdy())) {
            (Some((fx, gx)), Some((fxy, gxy))) => {
                Some(Matrix::from_fn(n, |a, i| fxy.get(a, i) * g0 + fx[a] * g.dy[i] + f.dy[i] * gx[a] + f0 * gxy.get(a, i)))
            }
            _ => None,
        };
        let dxdydy = match (
            both(&f.dx, &g.dx, true),
            both(&f.dxdy, &g.dxdy, true),
            both(&f.dydy, &g.dydy, true),
            both(&f.dxdydy, &g.dxdydy, order.has_dxdydy()),
        ) {
            (Some((fx, gx)), Some((fxy, gxy)), Some((fyy, gyy)), Some((fxyy, gxyy))) => {
                Some(Tensor3::from_fn(n, Symmetry::LastTwo, |a, i, j| {
                    fxyy.get(a, i, j) * g0
                        + fxy.get(a, i) * g.dy[j]
                        + fxy.get(a, j) * g.dy[i]
                        + fx[a] * gyy.get(i, j)
                        + fyy.get(i, j) * gx[a]
                        + f.dy[i] * gxy.get(a, j)
                        + f.dy[j] * gxy.get(a, i)
                        + f0 * gxyy.get(a, i, j)
                }))
            }
            _ => None,
        };
        JetBundle { n, order, value: f0 * g0, dy, dydy, dydydy, dx, dxdy, dxdydy }
    }

    /// Composition `phi(self)` given `[phi, phi', phi'', phi''']` evaluated at
    /// the value of `self`.
    pub fn compose(&self, phi: [T; 4]) -> JetBundle<T> {
        let u = self;
        let n = u.n;
        let [p0, p1, p2, p3] = phi;
        let dy = Vector::from_fn(n, |i| p1 * u.dy[i]);
        let dydy = u.dydy.as_ref().map(|uyy| Matrix::symmetric_from_fn(n, |i, j| p2 * u.dy[i] * u.dy[j] + p1 * uyy.get(i, j)));
        let dydydy = match (&u.dydy, &u.dydydy) {
            (Some(uyy), Some(uyyy)) => Some(Tensor3::from_fn(n, Symmetry::Full, |i, j, k| {
                p3 * u.dy[i] * u.dy[j] * u.dy[k]
                    + p2 * (uyy.get(i, j) * u.dy[k] + uyy.get(i, k) * u.dy[j] + uyy.get(j, k) * u.dy[i])
                    + p1 * uyyy.get(i, j, k)
            })),
            _ => None,
        };
        let dx = u.dx.as_ref().map(|ux| Vector::from_fn(n, |a| p1 * ux[a]));
        let dxdy = match (&u.dx, &u.dxdy) {
            (Some(ux), Some(uxy)) => Some(Matrix::from_fn(n, |a, i| p2 * ux[a] * u.dy[i] + p1 * uxy.get(a, i))),
            _ => None,
        };
        let dxdydy = match (&u.dx, &u.dxdy, &u.dydy, &u.dxdydy) {
            (Some(ux), Some(uxy), Some(uyy), Some(uxyy)) => Some(Tensor3::from_fn(n, Symmetry::LastTwo, |a, i, j| {
                p3 * ux[a] * u.dy[i] * u.dy[j]
                    + p2 * (uxy.get(a, i) * u.dy[j] + uxy.get(a, j) * u.dy[i] + uyy.get(i, j) * ux[a])
                    + p1 * uxyy.get(a, i, j)
            })),
            _ => None,
        };
        JetBundle { n, order: u.order, value: p0, dy, dydy, dydydy, dx, dxdy, dxdydy }
    }

    /// `self^r` for a real exponent. Non-integer exponents require a
    /// positive value.
    pub fn powf(&self, r: f64) -> Result<JetBundle<T>> {
        let v = self.value;
        let is_int = r.fract() == 0.0;
        if !is_int && v.re() <= 0.0 {
            return Err(Error::Domain { what: format!("non-integer power {r} of a non-positive base"), value: v.re() });
        }
        if r < 0.0 && v.re() == 0.0 {
            return Err(Error::Domain { what: format!("negative power {r} of zero"), value: 0.0 });
        }
        let pw = |e: f64| -> T {
            if e == 0.0 {
                T::one()
            } else if is_int && v.re() <= 0.0 {
                int_pow(v, e as i64)
            } else {
                v.powf(e)
            }
        };
        let phi = [pw(r), pw(r - 1.0).scale(r), pw(r - 2.0).scale(r * (r - 1.0)), pw(r - 3.0).scale(r * (r - 1.0) * (r - 2.0))];
        Ok(self.compose(phi))
    }

    pub fn sqrt(&self) -> Result<JetBundle<T>> {
        self.powf(0.5)
    }

    pub fn recip(&self) -> Result<JetBundle<T>> {
        self.powf(-1.0)
    }

    pub fn div(&self, other: &JetBundle<T>) -> Result<JetBundle<T>> {
        Ok(self.mul(&other.recip()?))
    }
}

fn int_pow<T: Scalar>(v: T, e: i64) -> T {
    let mut acc = T::one();
    let base = if e < 0 { v.recip() } else { v };
    for _ in 0..e.unsigned_abs() {
        acc *= base;
    }
    acc
}

fn both<'a, A>(a: &'a Option<A>, b: &'a Option<A>, wanted: bool) -> Option<(&'a A, &'a A)> {
    if !wanted {
        return None;
    }
    match (a, b) {
        (Some(a), Some(b)) => Some((a, b)),
        _ => None,
    }
}

impl JetBundle<f64> {
    /// Euler residual `y^i ∂̇_i f - r f` for a field homogeneous of degree `r`.
    pub fn euler_residual(&self, y: &Vector, degree: f64) -> f64 {
        self.dy.dot(y) - degree * self.value
    }
}

/// Seeded coordinate jets a field is evaluated on.
pub struct JetVars<T: Scalar> {
    pub x: Vec<JetBundle<T>>,
    pub y: Vec<JetBundle<T>>,
    n: usize,
    order: JetOrder,
}

impl<T: Scalar> JetVars<T> {
    pub fn seed(x: &[T], y: &[T], order: JetOrder) -> Self {
        let n = y.len();
        JetVars {
            x: x.iter().enumerate().map(|(a, &v)| JetBundle::var_x(a, v, n, order)).collect(),
            y: y.iter().enumerate().map(|(i, &v)| JetBundle::var_y(i, v, n, order)).collect(),
            n,
            order,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> JetOrder {
        self.order
    }

    pub fn constant(&self, c: f64) -> JetBundle<T> {
        JetBundle::constant(T::from_f64(c), self.n, self.order)
    }
}

/// A scalar field `f(x, y)` that can be evaluated on jets.
pub trait ScalarField {
    fn dim(&self) -> usize;

    fn eval<T: Scalar>(&self, vars: &JetVars<T>) -> Result<JetBundle<T>>;
}

/// Evaluates `field` at `(x, y)` with the requested derivative slots filled.
pub fn eval_jet<F: ScalarField + ?Sized>(field: &F, x: &Vector, y: &Vector, order: JetOrder) -> Result<JetBundle> {
    eval_jet_with(field, x.as_slice(), y.as_slice(), order)
}

pub fn eval_jet_with<T: Scalar, F: ScalarField + ?Sized>(field: &F, x: &[T], y: &[T], order: JetOrder) -> Result<JetBundle<T>> {
    let n = field.dim();
    if x.len() != n {
        return Err(Error::Dimension { expected: n, got: x.len() });
    }
    if y.len() != n {
        return Err(Error::Dimension { expected: n, got: y.len() });
    }
    if y.iter().all(|v| v.re() == 0.0) {
        return Err(Error::Domain { what: "direction y must be non-zero".into(), value: 0.0 });
    }
    field.eval(&JetVars::seed(x, y, order))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Norm2;
    impl ScalarField for Norm2 {
        fn dim(&self) -> usize {
            2
        }
        fn eval<T: Scalar>(&self, v: &JetVars<T>) -> Result<JetBundle<T>> {
            v.y[0].mul(&v.y[0]).add(&v.y[1].mul(&v.y[1])).sqrt()
        }
    }

    struct XTimesY;
    impl ScalarField for XTimesY {
        fn dim(&self) -> usize {
            2
        }
        fn eval<T: Scalar>(&self, v: &JetVars<T>) -> Result<JetBundle<T>> {
            Ok(v.x[0].mul(&v.y[0]))
        }
    }

    #[test]
    fn euclidean_norm_gradient() {
        let j = eval_jet(&Norm2, &Vector::from(vec![0.0, 0.0]), &Vector::from(vec![3.0, 4.0]), JetOrder::Y3).unwrap();
        assert_eq!(j.value, 5.0);
        assert!((j.dy[0] - 0.6).abs() < 1e-15);
        assert!((j.dy[1] - 0.8).abs() < 1e-15);
        // Hessian of |y| is (I - l l)/|y|
        let h = j.dydy().unwrap();
        assert!((h.get(0, 0) - 0.64 / 5.0).abs() < 1e-15);
        assert!((h.get(0, 1) + 0.48 / 5.0).abs() < 1e-15);
        assert!(j.dx().is_none());
    }

    #[test]
    fn mixed_slot_of_bilinear_field() {
        let j = eval_jet(&XTimesY, &Vector::from(vec![0.7, -0.3]), &Vector::from(vec![1.5, 2.0]), JetOrder::FULL).unwrap();
        let xy = j.dxdy().unwrap();
        for a in 0..2 {
            for i in 0..2 {
                let expect = if a == 0 && i == 0 { 1.0 } else { 0.0 };
                assert_eq!(xy.get(a, i), expect);
            }
        }
        assert_eq!(j.dxdydy().unwrap().max_abs(), 0.0);
    }

    #[test]
    fn zero_direction_is_rejected() {
        let err = eval_jet(&Norm2, &Vector::from(vec![0.0, 0.0]), &Vector::from(vec![0.0, 0.0]), JetOrder::Y1).unwrap_err();
        assert!(matches!(err, Error::Domain { .. }));
    }

    #[test]
    fn fractional_power_of_negative_is_domain_error() {
        let j = JetBundle::<f64>::constant(-1.0, 2, JetOrder::Y2);
        assert!(j.powf(0.5).is_err());
        assert!(j.powf(2.0).is_ok());
    }

    #[test]
    fn integer_power_of_negative_value() {
        let mut j = JetBundle::<f64>::var_y(0, -2.0, 1, JetOrder::Y3);
        j = j.powf(3.0).unwrap();
        assert_eq!(j.value, -8.0);
        assert_eq!(j.dy[0], 12.0);
        assert_eq!(j.dydy().unwrap().get(0, 0), -12.0);
        assert_eq!(j.dydydy().unwrap().get(0, 0, 0), 6.0);
    }
}
