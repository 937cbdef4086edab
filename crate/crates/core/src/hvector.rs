//! The h-vector `b_i(x, y)` and the scalars and tensors derived from it.
//!
//! Two input modes exist. Pointwise data supplies `b_i`, `b_{i|j}`, `ρ` and
//! `ρ_k` at one point. Field data supplies `ρ(x)` and `c_i(x)`, and the
//! h-vector is `b_i = ρ(x) l_i + c_i(x)`, the general solution of
//! `L ∂̇_j b_i = ρ h_ij`.

use serde::{Deserialize, Serialize};

use crate::basegeom::{h_cov_deriv, BaseGeometry, ConnectionData, CovectorJet};
use crate::error::{Error, Result};
use crate::expr::{Expr, ExprField};
use crate::jet::{eval_jet, JetBundle, JetOrder, JetVars, ScalarField};
use crate::metric::Metric;
use crate::scalar::Scalar;
use crate::tensor::{Matrix, Symmetry, Tensor3, Vector};
use crate::tolerance::{Tolerance, BETA_MIN, RHO_MIN};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase", deny_unknown_fields)]
pub enum HVectorSpec {
    Pointwise {
        b: Vec<f64>,
        /// `b_{i|j}`, row `i`. Empty means zero.
        #[serde(default)]
        bcov: Vec<Vec<f64>>,
        rho: f64,
        /// `ρ_k`. Empty means zero.
        #[serde(default)]
        rho_grad: Vec<f64>,
    },
    Field {
        c: Vec<Expr>,
        rho: Expr,
    },
}

impl HVectorSpec {
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            HVectorSpec::Pointwise { b, bcov, rho: _, rho_grad } => {
                if b.len() != n {
                    return Err(Error::Dimension { expected: n, got: b.len() });
                }
                if !bcov.is_empty() {
                    if bcov.len() != n {
                        return Err(Error::Dimension { expected: n, got: bcov.len() });
                    }
                    if let Some(r) = bcov.iter().find(|r| r.len() != n) {
                        return Err(Error::Dimension { expected: n, got: r.len() });
                    }
                }
                if !rho_grad.is_empty() && rho_grad.len() != n {
                    return Err(Error::Dimension { expected: n, got: rho_grad.len() });
                }
                Ok(())
            }
            HVectorSpec::Field { c, rho } => {
                if c.len() != n {
                    return Err(Error::Dimension { expected: n, got: c.len() });
                }
                for e in c.iter().chain(std::iter::once(rho)) {
                    e.check_dim(n)?;
                    if e.uses_y() {
                        return Err(Error::Expression(format!("h-vector field data must depend on x only: {e}")));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn is_field(&self) -> bool {
        matches!(self, HVectorSpec::Field { .. })
    }
}

#[derive(Clone, Debug)]
pub struct HVectorState {
    pub b: Vector,
    pub b_up: Vector,
    pub beta: f64,
    pub tau: f64,
    pub m: Vector,
    pub m_up: Vector,
    pub b_sq: f64,
    pub m_sq: f64,
    /// `b_{i|j}`, row `i`.
    pub bcov: Matrix,
    pub e: Matrix,
    pub f: Matrix,
    /// `β_j = b_{i|j} y^i`
    pub beta_j: Vector,
    pub beta_0: f64,
    pub rho: f64,
    pub rho_k: Vector,
    pub rho_0: f64,
}

impl HVectorState {
    pub fn e00(&self, y: &Vector) -> f64 {
        self.e.quad(y, y)
    }

    /// `F_i0 = F_ij y^j`
    pub fn f_i0(&self, y: &Vector) -> Vector {
        self.f.mul_vec(y)
    }

    /// `F_β0 = F_i0 b^i`
    pub fn f_beta0(&self, y: &Vector) -> f64 {
        self.f_i0(y).dot(&self.b_up)
    }

    /// `m_{i|k} = b_{i|k} − β_k l_i / L`
    pub fn m_cov(&self, base: &BaseGeometry) -> Matrix {
        Matrix::from_fn(base.n, |i, k| self.bcov.get(i, k) - self.beta_j[k] * base.l[i] / base.l_val)
    }

    /// Structural identities with their natural scales:
    /// `m_i y^i`, `m² − (b² − 1/τ²)`, `β_0 − E_00`.
    pub fn invariants(&self, base: &BaseGeometry) -> Vec<(&'static str, f64, f64)> {
        let y = &base.y;
        vec![
            ("m_y", self.m.dot(y).abs(), self.b.max_abs() * y.norm()),
            ("m2_identity", (self.m_sq - (self.b_sq - 1.0 / (self.tau * self.tau))).abs(), self.b_sq.abs()),
            ("beta0_minus_E00", (self.beta_0 - self.e00(y)).abs(), self.bcov.max_abs() * y.norm() * y.norm()),
        ]
    }
}

struct FieldData {
    rho: JetBundle,
    c: Vec<JetBundle>,
}

fn field_data(c: &[Expr], rho: &Expr, base: &BaseGeometry) -> Result<FieldData> {
    let n = base.n;
    let order = JetOrder { y: 1, mixed: true };
    let ev = |e: &Expr| -> Result<JetBundle> { eval_jet(&ExprField::new(e.clone(), n)?, &base.x, &base.y, order) };
    Ok(FieldData { rho: ev(rho)?, c: c.iter().map(ev).collect::<Result<_>>()? })
}

/// Value and first derivatives of `b_i = ρ(x) l_i + c_i(x)`.
fn field_covector(fd: &FieldData, base: &BaseGeometry) -> Result<CovectorJet> {
    let n = base.n;
    let dl = base.jet.dxdy().ok_or(Error::Domain { what: "field mode needs a mixed jet of L".into(), value: 0.0 })?;
    let rho = fd.rho.value;
    let drho = fd.rho.dx().expect("mixed jet");
    Ok(CovectorJet {
        value: Vector::from_fn(n, |i| rho * base.l[i] + fd.c[i].value),
        dx: Matrix::from_fn(n, |j, i| drho[j] * base.l[i] + rho * dl.get(j, i) + fd.c[i].dx().expect("mixed jet")[j]),
        dy: Matrix::from_fn(n, |r, i| rho * base.l_ij.get(r, i)),
    })
}

/// Derives the h-vector state at the base point.
///
/// Field mode needs the base connection to form `b_{i|j}`.
pub fn build_state(base: &BaseGeometry, conn: Option<&ConnectionData>, spec: &HVectorSpec) -> Result<HVectorState> {
    let n = base.n;
    spec.validate(n)?;
    let (b, bcov, rho, rho_k) = match spec {
        HVectorSpec::Pointwise { b, bcov, rho, rho_grad } => {
            let bcov = if bcov.is_empty() { Matrix::zeros(n) } else { Matrix::from_rows(bcov) };
            let rk = if rho_grad.is_empty() { Vector::zeros(n) } else { Vector::from(rho_grad.clone()) };
            (Vector::from(b.clone()), bcov, *rho, rk)
        }
        HVectorSpec::Field { c, rho } => {
            let conn = conn.ok_or(Error::Domain { what: "field-mode h-vector needs connection data".into(), value: 0.0 })?;
            let fd = field_data(c, rho, base)?;
            let cj = field_covector(&fd, base)?;
            let bcov = h_cov_deriv(&cj, conn);
            (cj.value, bcov, fd.rho.value, fd.rho.dx().cloned().expect("mixed jet"))
        }
    };
    state_from_parts(base, b, bcov, rho, rho_k)
}

pub fn state_from_parts(base: &BaseGeometry, b: Vector, bcov: Matrix, rho: f64, rho_k: Vector) -> Result<HVectorState> {
    let n = base.n;
    let y = &base.y;
    if !(rho.abs() > RHO_MIN) {
        return Err(Error::RhoZero { rho });
    }
    let beta = b.dot(y);
    let min = BETA_MIN * base.l_val;
    if !(beta > min) {
        return Err(Error::BetaDomain { beta, min });
    }
    let tau = base.l_val / beta;
    let m = b.sub(&base.l.scale(1.0 / tau));
    let b_up = base.raise(&b);
    let m_up = base.raise(&m);
    let beta_j = bcov.vec_mul(y);
    let beta_0 = beta_j.dot(y);
    Ok(HVectorState {
        b_sq: b.dot(&b_up),
        m_sq: m.dot(&m_up),
        e: Matrix::symmetric_from_fn(n, |i, j| 0.5 * (bcov.get(i, j) + bcov.get(j, i))),
        f: bcov.antisymmetric_part(),
        rho_0: rho_k.dot(y),
        b,
        b_up,
        beta,
        tau,
        m,
        m_up,
        bcov,
        beta_j,
        beta_0,
        rho,
        rho_k,
    })
}

/// `∂̇_j b_i` and `∂̇_k ∂̇_j b_i` from rule `L ∂̇_j b_i = ρ h_ij`.
#[derive(Clone, Debug)]
pub struct BJet {
    pub db: Matrix,
    pub ddb: Tensor3,
}

pub fn b_jet(base: &BaseGeometry, state: &HVectorState) -> BJet {
    let n = base.n;
    let (lv, rho) = (base.l_val, state.rho);
    let (h, l, c) = (&base.h, &base.l, &base.c);
    BJet {
        db: Matrix::symmetric_from_fn(n, |i, j| rho / lv * h.get(i, j)),
        ddb: Tensor3::from_fn(n, Symmetry::Full, |i, j, k| {
            rho / lv * (2.0 * c.get(i, j, k) - (h.get(i, k) * l[j] + h.get(j, k) * l[i]) / lv) - rho / (lv * lv) * l[k] * h.get(i, j)
        }),
    }
}

/// `max |L C^h_ij b_h − ρ h_ij|`. Diagnostic only.
pub fn hvector_axiom_residual(base: &BaseGeometry, state: &HVectorState) -> f64 {
    let cb = base.c_raised.contract_first(&state.b);
    cb.scale(base.l_val).sub(&base.h.scale(state.rho)).max_abs()
}

#[derive(Clone, Debug, PartialEq)]
pub struct RuleCheck {
    pub pass: bool,
    pub applicable: bool,
    pub message: String,
}

/// A gradient h-vector (`F_ij ≡ 0`) must have constant `ρ`.
pub fn lemma32_consistency(state: &HVectorState, tol: &Tolerance) -> RuleCheck {
    let fmax = state.f.max_abs();
    let scale = state.bcov.max_abs();
    let rk = state.rho_k.max_abs();
    if !tol.is_zero(fmax, scale) {
        return RuleCheck { pass: true, applicable: false, message: format!("F_ij != 0 (max {fmax:e}); rule not applicable") };
    }
    if tol.is_zero(rk, state.rho.abs()) {
        RuleCheck { pass: true, applicable: true, message: "gradient h-vector with constant rho".into() }
    } else {
        RuleCheck { pass: false, applicable: true, message: format!("gradient h-vector requires constant rho, but max |rho_k| = {rk:e}") }
    }
}

/// The transformed fundamental function `*L = L² / β` with the field-mode
/// h-vector, as a scalar field in its own right.
#[derive(Clone, Debug)]
pub struct KropinaField {
    pub metric: Metric,
    pub c: Vec<Expr>,
    pub rho: Expr,
}

impl KropinaField {
    pub fn new(metric: Metric, spec: &HVectorSpec) -> Result<Self> {
        spec.validate(metric.dim())?;
        match spec {
            HVectorSpec::Field { c, rho } => Ok(KropinaField { metric, c: c.clone(), rho: rho.clone() }),
            HVectorSpec::Pointwise { .. } => {
                Err(Error::Domain { what: "the transformed metric as a field needs a field-mode h-vector".into(), value: 0.0 })
            }
        }
    }

    /// `β = ρ(x) L + c_i(x) y^i` on jets.
    pub fn beta<T: Scalar>(&self, vars: &JetVars<T>, l: &JetBundle<T>) -> Result<JetBundle<T>> {
        let mut beta = self.rho.eval(vars)?.mul(l);
        for (ci, yi) in self.c.iter().zip(&vars.y) {
            beta = beta.add(&ci.eval(vars)?.mul(yi));
        }
        Ok(beta)
    }
}

impl ScalarField for KropinaField {
    fn dim(&self) -> usize {
        self.metric.dim()
    }

    fn eval<T: Scalar>(&self, vars: &JetVars<T>) -> Result<JetBundle<T>> {
        let l = self.metric.eval(vars)?;
        let beta = self.beta(vars, &l)?;
        let min = BETA_MIN * l.value.re();
        if !(beta.value.re() > min) {
            return Err(Error::BetaDomain { beta: beta.value.re(), min });
        }
        l.mul(&l).div(&beta)
    }
}

/// `β = b_i y^i` of a field-mode h-vector as a scalar field.
#[derive(Clone, Debug)]
pub struct BetaField<'a>(pub &'a KropinaField);

impl ScalarField for BetaField<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn eval<T: Scalar>(&self, vars: &JetVars<T>) -> Result<JetBundle<T>> {
        let l = self.0.metric.eval(vars)?;
        self.0.beta(vars, &l)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basegeom::{base_objects, connection};
    use crate::metric::MetricSpec;

    fn v(x: &[f64]) -> Vector {
        Vector::from(x.to_vec())
    }

    fn worked() -> (BaseGeometry, HVectorState) {
        let m = MetricSpec::Euclidean { dim: 2 }.build().unwrap();
        let base = base_objects(&m, &v(&[0.0, 0.0]), &v(&[1.0, 0.0])).unwrap();
        let spec = HVectorSpec::Pointwise { b: vec![1.0, 0.2], bcov: vec![], rho: 0.5, rho_grad: vec![] };
        let st = build_state(&base, None, &spec).unwrap();
        (base, st)
    }

    #[test]
    fn worked_instance_scalars() {
        let (_, st) = worked();
        assert_eq!(st.beta, 1.0);
        assert_eq!(st.tau, 1.0);
        assert!(st.m.sub(&v(&[0.0, 0.2])).max_abs() < 1e-15);
        assert!((st.b_sq - 1.04).abs() < 1e-15);
        assert!((st.m_sq - 0.04).abs() < 1e-15);
        assert_eq!(st.e.max_abs(), 0.0);
        assert_eq!(st.f.max_abs(), 0.0);
        assert_eq!(st.beta_j.max_abs(), 0.0);
    }

    #[test]
    fn worked_b_jet() {
        let (base, st) = worked();
        let bj = b_jet(&base, &st);
        assert!((bj.db.get(1, 1) - 0.5).abs() < 1e-15);
        assert!(bj.db.mul_vec(&base.y).max_abs() < 1e-15);
    }

    #[test]
    fn guards() {
        let m = MetricSpec::Euclidean { dim: 2 }.build().unwrap();
        let base = base_objects(&m, &v(&[0.0, 0.0]), &v(&[1.0, 0.0])).unwrap();
        let neg = HVectorSpec::Pointwise { b: vec![-1.0, 0.0], bcov: vec![], rho: 0.5, rho_grad: vec![] };
        assert!(matches!(build_state(&base, None, &neg), Err(Error::BetaDomain { .. })));
        let zero = HVectorSpec::Pointwise { b: vec![1.0, 0.0], bcov: vec![], rho: 0.0, rho_grad: vec![] };
        assert!(matches!(build_state(&base, None, &zero), Err(Error::RhoZero { .. })));
    }

    #[test]
    fn rho_gradient_rule() {
        let (base, st) = worked();
        let tol = Tolerance::default();
        assert!(lemma32_consistency(&st, &tol).pass);
        let mut bad = st.clone();
        bad.rho_k = v(&[0.1, 0.0]);
        let r = lemma32_consistency(&bad, &tol);
        assert!(!r.pass && r.applicable);
        let with_f =
            state_from_parts(&base, st.b.clone(), Matrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]), 0.5, v(&[0.1, 0.0])).unwrap();
        let r = lemma32_consistency(&with_f, &tol);
        assert!(r.pass && !r.applicable);
    }

    #[test]
    fn constant_field_on_flat_base_is_parallel() {
        let m = MetricSpec::Euclidean { dim: 2 }.build().unwrap();
        let base = base_objects(&m, &v(&[0.3, -0.1]), &v(&[1.0, 0.4])).unwrap();
        let conn = connection(&m, &base).unwrap();
        let spec =
            HVectorSpec::Field { c: vec![Expr::parse("(const 0.3)").unwrap(), Expr::parse("(const 0.1)").unwrap()], rho: Expr::Const(0.5) };
        let st = build_state(&base, Some(&conn), &spec).unwrap();
        assert!(st.bcov.max_abs() < 1e-15);
    }

    #[test]
    fn field_data_must_not_use_y() {
        let spec = HVectorSpec::Field { c: vec![Expr::Y(1), Expr::Const(0.0)], rho: Expr::Const(0.5) };
        assert!(spec.validate(2).is_err());
    }
}
