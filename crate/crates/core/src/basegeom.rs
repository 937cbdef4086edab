//! Point tensors and connection data of a Finsler space `(M, L)`.

use crate::error::{Error, Result};
use crate::jet::{eval_jet, eval_jet_with, JetBundle, JetOrder, ScalarField};
use crate::linalg::{invert, invert_sym};
use crate::scalar::{Dual, Scalar};
use crate::tensor::{Matrix, Symmetry, Tensor3, Vector};

/// Relative Euler residual above which a field is rejected as not being
/// homogeneous of degree one in `y`.
pub const HOMOGENEITY_GUARD: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct BaseGeometry {
    pub n: usize,
    pub x: Vector,
    pub y: Vector,
    pub l_val: f64,
    /// `l_i = ∂̇_i L`
    pub l: Vector,
    /// `l^i = y^i / L`
    pub l_up: Vector,
    pub l_ij: Matrix,
    pub l_ijk: Tensor3,
    pub g: Matrix,
    pub g_inv: Matrix,
    pub h: Matrix,
    pub c: Tensor3,
    /// `C^h_ij`, raised index first.
    pub c_raised: Tensor3,
    /// Full jet of `L` (with mixed slots when built for a connection).
    pub jet: JetBundle,
    /// Jet of `E = L²/2`.
    pub energy: JetBundle,
}

impl BaseGeometry {
    /// `δ_k g_ij` needs `N`; this is the plain `∂_k g_ij` part.
    fn dx_g(&self, k: usize, i: usize, j: usize) -> f64 {
        self.energy.dxdydy().map(|t| t.get(k, i, j)).unwrap_or(0.0)
    }

    pub fn raise(&self, v: &Vector) -> Vector {
        self.g_inv.mul_vec(v)
    }
}

/// Builds all point tensors of the space at `(x, y)`.
pub fn base_objects<F: ScalarField + ?Sized>(field: &F, x: &Vector, y: &Vector) -> Result<BaseGeometry> {
    let jet = eval_jet(field, x, y, JetOrder::FULL)?;
    from_jet(jet, x, y)
}

/// Same as [`base_objects`] but without the x-derivative slots.
pub fn base_objects_vertical<F: ScalarField + ?Sized>(field: &F, x: &Vector, y: &Vector) -> Result<BaseGeometry> {
    let jet = eval_jet(field, x, y, JetOrder::Y3)?;
    from_jet(jet, x, y)
}

fn from_jet(jet: JetBundle, x: &Vector, y: &Vector) -> Result<BaseGeometry> {
    let n = y.dim();
    let lv = jet.value;
    if !(lv > 0.0) || !lv.is_finite() {
        return Err(Error::Domain { what: "fundamental function must be positive".into(), value: lv });
    }
    let euler = jet.euler_residual(y, 1.0) / lv;
    if euler.abs() > HOMOGENEITY_GUARD {
        return Err(Error::Domain { what: "L is not positively homogeneous of degree 1 in y".into(), value: euler });
    }
    let energy = jet.mul(&jet).scale(0.5);
    let g = energy.dydy().cloned().expect("third-order jet");
    let g_inv = invert_sym(&g)?;
    let l = jet.dy.clone();
    let h = g.sub(&Matrix::outer_self(&l));
    let h = Matrix::symmetric_from_fn(n, |i, j| h.get(i, j));
    let c = energy.dydydy().expect("third-order jet").scale(0.5);
    let c_raised = c.raise_first(&g_inv);
    Ok(BaseGeometry {
        n,
        x: x.clone(),
        y: y.clone(),
        l_val: lv,
        l_up: y.scale(1.0 / lv),
        l_ij: jet.dydy().cloned().expect("third-order jet"),
        l_ijk: jet.dydydy().cloned().expect("third-order jet"),
        l,
        g,
        g_inv,
        h,
        c,
        c_raised,
        jet,
        energy,
    })
}

#[derive(Clone, Debug)]
pub struct ConnectionData {
    /// `G^i`
    pub spray: Vector,
    /// `N^i_j`, row `i`, column `j`.
    pub n: Matrix,
    /// `G^i_jk = ∂̇_k N^i_j`
    pub berwald: Tensor3,
    /// `F^i_jk`
    pub cartan: Tensor3,
}

/// `A_l = y^k ∂_k ∂̇_l E − ∂_l E` and `∂̇_j A_l` from a mixed jet of `E`.
fn spray_sources<T: Scalar>(e: &JetBundle<T>, y: &[T]) -> (Vector<T>, Matrix<T>) {
    let n = y.len();
    let ex = e.dx().expect("mixed jet");
    let exy = e.dxdy().expect("mixed jet");
    let exyy = e.dxdydy().expect("mixed jet");
    let a = Vector::from_fn(n, |l| {
        let mut s = -ex[l];
        for k in 0..n {
            s += y[k] * exy.get(k, l);
        }
        s
    });
    // da[(l, j)] = ∂̇_j A_l
    let da = Matrix::from_fn(n, |l, j| {
        let mut s = exy.get(j, l) - exy.get(l, j);
        for k in 0..n {
            s += y[k] * exyy.get(k, l, j);
        }
        s
    });
    (a, da)
}

/// Spray and nonlinear connection evaluated on any scalar type.
fn spray_and_n<T: Scalar, F: ScalarField + ?Sized>(field: &F, x: &[T], y: &[T]) -> Result<(Vector<T>, Matrix<T>)> {
    let n = y.len();
    let l = eval_jet_with(field, x, y, JetOrder::FULL)?;
    let e = l.mul(&l).scale(T::from_f64(0.5));
    let g = e.dydy().expect("third-order jet");
    let (g_inv, _) = invert(g)?;
    let c = e.dydydy().expect("third-order jet");
    let (a, da) = spray_sources(&e, y);
    let half = T::from_f64(0.5);
    let spray = Vector::from_fn(n, |i| {
        let mut s = T::zero();
        for m in 0..n {
            s += g_inv.get(i, m) * a[m];
        }
        s * half
    });
    // C^{il}_j A_l with C_abj = ½ e_abj
    let ga = g_inv.mul_vec(&a);
    let nn = Matrix::from_fn(n, |i, j| {
        let mut s = T::zero();
        for p in 0..n {
            let mut cpj = T::zero();
            for q in 0..n {
                cpj += c.get(p, q, j) * ga[q];
            }
            s += g_inv.get(i, p) * (da.get(p, j) - cpj) * half;
        }
        s
    });
    Ok((spray, nn))
}

/// `G^i` at `(x, y)`.
pub fn spray<F: ScalarField + ?Sized>(field: &F, x: &Vector, y: &Vector) -> Result<Vector> {
    let xs: Vec<f64> = x.iter().copied().collect();
    let ys: Vec<f64> = y.iter().copied().collect();
    Ok(spray_and_n(field, &xs, &ys)?.0)
}

/// Spray, nonlinear connection, Berwald and Cartan connection coefficients.
pub fn connection<F: ScalarField + ?Sized>(field: &F, base: &BaseGeometry) -> Result<ConnectionData> {
    let n = base.n;
    if base.energy.dxdydy().is_none() {
        return Err(Error::Domain { what: "connection needs a mixed jet; build with base_objects".into(), value: 0.0 });
    }
    let xs: Vec<f64> = base.x.iter().copied().collect();
    let ys: Vec<f64> = base.y.iter().copied().collect();
    let (spray, nn) = spray_and_n(field, &xs, &ys)?;

    let xd: Vec<Dual> = xs.iter().map(|&v| Dual::constant(v)).collect();
    let yd: Vec<Dual> = ys.iter().enumerate().map(|(k, &v)| Dual::variable(v, k)).collect();
    let (_, nd) = spray_and_n(field, &xd, &yd)?;
    let berwald = Tensor3::from_fn(n, Symmetry::LastTwo, |i, j, k| 0.5 * (nd.get(i, j).eps[k] + nd.get(i, k).eps[j]));

    let dg = |j: usize, h: usize, k: usize| -> f64 {
        let mut s = base.dx_g(j, h, k);
        for r in 0..n {
            s -= nn.get(r, j) * 2.0 * base.c.get(r, h, k);
        }
        s
    };
    let lowered = Tensor3::from_fn(n, Symmetry::None, |h, j, k| 0.5 * (dg(j, h, k) + dg(k, j, h) - dg(h, j, k)));
    let cartan = Tensor3::from_fn(n, Symmetry::LastTwo, |i, j, k| {
        let mut s = 0.0;
        for h in 0..n {
            s += base.g_inv.get(i, h) * 0.5 * (lowered.get(h, j, k) + lowered.get(h, k, j));
        }
        s
    });
    Ok(ConnectionData { spray, n: nn, berwald, cartan })
}

impl ConnectionData {
    /// `max |F^i_jk y^j − N^i_k|`, `max |N^i_j y^j − 2G^i|` and
    /// `max |F^i_jk y^j y^k − 2G^i|`.
    pub fn contraction_residuals(&self, y: &Vector) -> [f64; 3] {
        let n = y.dim();
        let mut r = [0.0f64; 3];
        let n0 = self.n.mul_vec(y);
        for i in 0..n {
            r[1] = r[1].max((n0[i] - 2.0 * self.spray[i]).abs());
            let mut f00 = 0.0;
            for k in 0..n {
                let mut fk = 0.0;
                for j in 0..n {
                    fk += self.cartan.get(i, j, k) * y[j];
                }
                r[0] = r[0].max((fk - self.n.get(i, k)).abs());
                f00 += fk * y[k];
            }
            r[2] = r[2].max((f00 - 2.0 * self.spray[i]).abs());
        }
        r
    }
}

/// Value and first derivatives of a covector field `T_i(x, y)`.
#[derive(Clone, Debug)]
pub struct CovectorJet {
    pub value: Vector,
    /// `dx[(j, i)] = ∂_j T_i`
    pub dx: Matrix,
    /// `dy[(r, i)] = ∂̇_r T_i`
    pub dy: Matrix,
}

impl CovectorJet {
    /// The gradient covector `∂̇_i f` of a scalar jet with mixed slots.
    pub fn vertical_gradient(f: &JetBundle) -> Result<CovectorJet> {
        let missing = || Error::Domain { what: "covector jet needs mixed second-order slots".into(), value: 0.0 };
        Ok(CovectorJet { value: f.dy.clone(), dx: f.dxdy().cloned().ok_or_else(missing)?, dy: f.dydy().cloned().ok_or_else(missing)? })
    }
}

/// `δ_j f = ∂_j f − N^r_j ∂̇_r f`.
pub fn h_deriv_scalar(f: &JetBundle, conn: &ConnectionData) -> Result<Vector> {
    let dx = f.dx().ok_or(Error::Domain { what: "scalar jet lacks x-derivatives".into(), value: 0.0 })?;
    let n = f.dim();
    Ok(Vector::from_fn(n, |j| {
        let mut s = dx[j];
        for r in 0..n {
            s -= conn.n.get(r, j) * f.dy[r];
        }
        s
    }))
}

/// `T_{i|j} = δ_j T_i − T_r F^r_ij`, returned with row `i`, column `j`.
pub fn h_cov_deriv(t: &CovectorJet, conn: &ConnectionData) -> Matrix {
    let n = t.value.dim();
    Matrix::from_fn(n, |i, j| {
        let mut s = t.dx.get(j, i);
        for r in 0..n {
            s -= conn.n.get(r, j) * t.dy.get(r, i);
            s -= t.value[r] * conn.cartan.get(r, i, j);
        }
        s
    })
}

/// `max |g_{ij|k}|` with `g_{ij|k} = δ_k g_ij − g_rj F^r_ik − g_ir F^r_jk`.
pub fn metricity_residual(base: &BaseGeometry, conn: &ConnectionData) -> f64 {
    let n = base.n;
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut s = base.dx_g(k, i, j);
                for r in 0..n {
                    s -= conn.n.get(r, k) * 2.0 * base.c.get(r, i, j);
                    s -= base.g.get(r, j) * conn.cartan.get(r, i, k);
                    s -= base.g.get(i, r) * conn.cartan.get(r, j, k);
                }
                worst = worst.max(s.abs());
            }
        }
    }
    worst
}

/// Structural residuals of the point tensors: `g_ij y^i y^j − L²`,
/// `h_ij y^j`, `C_ijk y^k`, `l_i − g_ij y^j / L`, `L_ij − h_ij / L`,
/// `g g^{-1} − I`, permutation defect of `C`.
pub fn structural_residuals(base: &BaseGeometry) -> Vec<(&'static str, f64, f64)> {
    let n = base.n;
    let y = &base.y;
    let lv = base.l_val;
    let gy = base.g.mul_vec(y);
    let hy = base.h.mul_vec(y).max_abs();
    let cy = base.c.contract_last(y).max_abs();
    let l_from_g = gy.scale(1.0 / lv).sub(&base.l).max_abs();
    let lij = base.l_ij.sub(&base.h.scale(1.0 / lv)).max_abs();
    let id = base.g.matmul(&base.g_inv).sub(&Matrix::identity(n)).max_abs();
    let gmax = base.g.max_abs();
    vec![
        ("g_yy_minus_L2", (gy.dot(y) - lv * lv).abs(), lv * lv),
        ("h_y", hy, gmax * y.norm()),
        ("C_y", cy, base.c.max_abs().max(1.0) * y.norm()),
        ("l_minus_gy_over_L", l_from_g, base.l.max_abs()),
        ("Lij_minus_h_over_L", lij, base.l_ij.max_abs()),
        ("g_ginv_minus_I", id, 1.0),
        ("C_symmetry", base.c.permutation_defect(true), base.c.max_abs()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::MetricSpec;

    fn v(x: &[f64]) -> Vector {
        Vector::from(x.to_vec())
    }

    #[test]
    fn euclidean_base() {
        let m = MetricSpec::Euclidean { dim: 2 }.build().unwrap();
        let b = base_objects(&m, &v(&[0.0, 0.0]), &v(&[3.0, 4.0])).unwrap();
        assert!(b.g.sub(&Matrix::identity(2)).max_abs() < 1e-15);
        assert!(b.c.max_abs() < 1e-15);
        assert!(b.l.sub(&v(&[0.6, 0.8])).max_abs() < 1e-15);
        let conn = connection(&m, &b).unwrap();
        assert_eq!(conn.spray.max_abs(), 0.0);
        assert_eq!(conn.n.max_abs(), 0.0);
        assert_eq!(conn.cartan.max_abs(), 0.0);
    }

    #[test]
    fn riemannian_christoffel_entry() {
        let s = r#"{"kind": "riemannian", "a": [[[{"coef": 1.0}, {"coef": 1.0, "pow": [2]}], 0.0], [0.0, 1.0]]}"#;
        let m = serde_json::from_str::<MetricSpec>(s).unwrap().build().unwrap();
        let b = base_objects(&m, &v(&[1.0, 0.0]), &v(&[0.3, -0.7])).unwrap();
        assert!((b.g.get(0, 0) - 2.0).abs() < 1e-14);
        assert!((b.g.get(1, 1) - 1.0).abs() < 1e-14);
        let conn = connection(&m, &b).unwrap();
        assert!((conn.cartan.get(0, 0, 0) - 0.5).abs() < 1e-13);
    }

    #[test]
    fn randers_connection_identities() {
        let m = MetricSpec::catalog("randers", 3).unwrap().build().unwrap();
        let b = base_objects(&m, &v(&[0.2, -0.4, 0.5]), &v(&[1.0, 0.3, -0.2])).unwrap();
        let conn = connection(&m, &b).unwrap();
        for r in conn.contraction_residuals(&b.y) {
            assert!(r < 1e-12, "{r}");
        }
        assert!(metricity_residual(&b, &conn) < 1e-12);
        assert!(h_deriv_scalar(&b.jet, &conn).unwrap().max_abs() < 1e-12);
        let lcov = h_cov_deriv(&CovectorJet::vertical_gradient(&b.jet).unwrap(), &conn);
        assert!(lcov.max_abs() < 1e-12);
    }

    #[test]
    fn non_homogeneous_field_rejected() {
        let m = MetricSpec::Expression { dim: 2, expr: crate::expr::Expr::parse("(+ (* (y 1) (y 1)) (* (y 2) (y 2)))").unwrap() }
            .build()
            .unwrap();
        assert!(matches!(base_objects(&m, &v(&[0.0, 0.0]), &v(&[1.0, 1.0])), Err(Error::Domain { .. })));
    }
}
