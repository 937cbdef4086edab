//! Closed forms for the transformed space `*L = L² / β` and an independent
//! differentiation oracle.

use serde::Serialize;

use crate::basegeom::{base_objects_vertical, BaseGeometry};
use crate::error::{Error, Result};
use crate::hvector::{b_jet, HVectorState, KropinaField};
use crate::jet::JetBundle;
use crate::linalg::{invert_sym, matsumoto_invert, signed_rank_one_inverse};
use crate::tensor::{Components, Matrix, Symmetry, Tensor3, Vector};
use crate::tolerance::{rel_diff, CHANGE_GUARD};

#[derive(Clone, Debug)]
pub struct StarGeometry {
    pub l_val: f64,
    /// `*l_i = *L_i`
    pub l: Vector,
    pub l_ij: Matrix,
    pub l_ijk: Tensor3,
    pub g: Matrix,
    pub g_inv: Matrix,
    pub c: Tensor3,
    pub c_raised: Tensor3,
    /// Second and third routes to `*g^ij` (dense inversion and a chain of
    /// rank-one updates). Only filled by [`star_closed_form`].
    pub g_inv_dense: Option<Matrix>,
    pub g_inv_rank_one: Option<Matrix>,
}

/// Scalars shared by every closed form.
#[derive(Clone, Copy, Debug)]
pub struct ChangeScalars {
    pub tau: f64,
    pub rho: f64,
    pub beta: f64,
    pub l_val: f64,
    pub b_sq: f64,
    pub m_sq: f64,
    /// `2 − ρτ`
    pub two_m_rt: f64,
    /// `2b²τ − ρ`
    pub den: f64,
    /// `2τ − ρτ²`
    pub k1: f64,
    /// `2τ² − ρτ³`
    pub k2: f64,
}

pub fn change_scalars(base: &BaseGeometry, h: &HVectorState) -> Result<ChangeScalars> {
    let (tau, rho) = (h.tau, h.rho);
    let two_m_rt = 2.0 - rho * tau;
    if !(two_m_rt.abs() > CHANGE_GUARD) {
        return Err(Error::DegenerateChange { scalar: "2 - rho*tau", value: two_m_rt });
    }
    let den = 2.0 * h.b_sq * tau - rho;
    if !(den.abs() > CHANGE_GUARD) {
        return Err(Error::DegenerateChange { scalar: "2*b^2*tau - rho", value: den });
    }
    Ok(ChangeScalars {
        tau,
        rho,
        beta: h.beta,
        l_val: base.l_val,
        b_sq: h.b_sq,
        m_sq: h.m_sq,
        two_m_rt,
        den,
        k1: tau * two_m_rt,
        k2: tau * tau * two_m_rt,
    })
}

/// `S_(ijk) a_i T_jk`: the three placements of a vector into a symmetric pair.
fn sym_vt(a: &Vector, t: &Matrix) -> Tensor3 {
    Tensor3::from_fn(a.dim(), Symmetry::Full, |i, j, k| a[i] * t.get(j, k) + a[j] * t.get(i, k) + a[k] * t.get(i, j))
}

fn vvv(a: &Vector) -> Tensor3 {
    Tensor3::from_fn(a.dim(), Symmetry::Full, |i, j, k| a[i] * a[j] * a[k])
}

/// `*L_ij`
pub fn star_l_ij(base: &BaseGeometry, h: &HVectorState, s: &ChangeScalars) -> Matrix {
    base.l_ij.scale(s.k1).add(&Matrix::outer_self(&h.m).scale(2.0 * s.tau * s.tau / s.beta))
}

/// Closed forms of all transformed point tensors.
pub fn star_closed_form(base: &BaseGeometry, h: &HVectorState) -> Result<StarGeometry> {
    let n = base.n;
    let s = change_scalars(base, h)?;
    let (tau, rho, beta, lv) = (s.tau, s.rho, s.beta, s.l_val);
    let (l, b, m) = (&base.l, &h.b, &h.m);
    let t2 = tau * tau;
    let t3 = t2 * tau;
    let t4 = t3 * tau;

    let star_l = l.scale(2.0 * tau).sub(&b.scale(t2));
    let l_ij = star_l_ij(base, h, &s);

    let mml = Tensor3::from_fn(n, Symmetry::Full, |i, j, k| m[i] * m[j] * l[k] + m[j] * m[k] * l[i] + m[k] * m[i] * l[j]);
    let l_ijk = base
        .l_ijk
        .scale(s.k1)
        .add(&sym_vt(m, &base.l_ij).scale(2.0 * tau / beta * (rho * tau - 1.0)))
        .sub(&mml.scale(2.0 * t2 / (lv * beta)))
        .sub(&vvv(m).scale(6.0 * t2 / (beta * beta)));

    let g = Matrix::symmetric_from_fn(n, |i, j| {
        s.k2 * base.g.get(i, j) + 3.0 * t4 * b[i] * b[j] - 4.0 * t3 * (l[i] * b[j] + b[i] * l[j]) + (4.0 * t2 + rho * t3) * l[i] * l[j]
    });

    let c =
        base.c.scale(s.k2).sub(&sym_vt(m, &base.h).scale(t2 / (2.0 * beta) * (4.0 - 3.0 * rho * tau))).sub(&vvv(m).scale(6.0 * t4 / beta));

    let (bu, lu) = (&h.b_up, &base.l_up);
    let b2 = s.b_sq;
    let ll_coef = (3.0 * rho * b2 * t3 - rho * rho * t2 - 4.0 * b2 * t2 - 2.0 * rho * tau + 8.0) / (tau * s.den);
    let g_inv = Matrix::symmetric_from_fn(n, |i, j| {
        (base.g_inv.get(i, j) - 2.0 * tau / s.den * bu[i] * bu[j] + (4.0 - rho * tau) / s.den * (lu[i] * bu[j] + bu[i] * lu[j])
            - ll_coef * lu[i] * lu[j])
            / s.k2
    });

    let c_raised = star_c_raised(base, h, &s);

    let g_inv_dense = invert_sym(&g)?;
    let g_inv_rank_one = rank_one_route(base, h, &s)?;

    Ok(StarGeometry {
        l_val: lv * tau,
        l: star_l,
        l_ij,
        l_ijk,
        g,
        g_inv,
        c,
        c_raised,
        g_inv_dense: Some(g_inv_dense),
        g_inv_rank_one: Some(g_inv_rank_one),
    })
}

/// `*C^h_ij` in closed form. The last bracket term vanishes when the base
/// satisfies `L C^h_ij b_h = ρ h_ij`.
fn star_c_raised(base: &BaseGeometry, h: &HVectorState, s: &ChangeScalars) -> Tensor3 {
    let n = base.n;
    let (tau, rho, lv) = (s.tau, s.rho, s.l_val);
    let t2 = tau * tau;
    let t3 = t2 * tau;
    let (m, mu) = (&h.m, &h.m_up);
    let h_up = base.g_inv.matmul(&base.h); // h^h_j
    let q = 4.0 - 3.0 * rho * tau;
    let c1 = q * tau / (2.0 * lv * s.two_m_rt);
    let c2 = 6.0 * t3 / (lv * s.two_m_rt);
    let head = Vector::from_fn(n, |k| (2.0 * tau * h.b_up[k] - (4.0 - rho * tau) * base.l_up[k]) / (lv * s.two_m_rt * s.den));
    let axiom = base.c_raised.contract_first(&h.b).sub(&base.h.scale(rho / lv));
    let bracket = Matrix::symmetric_from_fn(n, |i, j| {
        base.h.get(i, j) * (0.5 * s.m_sq * tau * q - rho * s.two_m_rt) + m[i] * m[j] * (6.0 * t3 * s.m_sq + tau * q)
            - lv * s.two_m_rt * axiom.get(i, j)
    });
    Tensor3::from_fn(n, Symmetry::LastTwo, |k, i, j| {
        base.c_raised.get(k, i, j)
            - c1 * (base.h.get(i, j) * mu[k] + h_up.get(k, j) * m[i] + h_up.get(k, i) * m[j])
            - c2 * m[i] * m[j] * mu[k]
            + head[k] * bracket.get(i, j)
    })
}

/// `*g = K g + d w⊗w + e l⊗l` with `d = 3τ⁴`, `w = m − l/(3τ)`,
/// `e = τ²(ρτ − 4/3)`, inverted by two rank-one updates.
fn rank_one_route(base: &BaseGeometry, h: &HVectorState, s: &ChangeScalars) -> Result<Matrix> {
    let tau = s.tau;
    let t2 = tau * tau;
    let d = 3.0 * t2 * t2;
    let w = h.m.sub(&base.l.scale(1.0 / (3.0 * tau)));
    let e = t2 * (s.rho * tau - 4.0 / 3.0);
    let m_inv = base.g_inv.scale(1.0 / s.k2);
    let (inv1, det1) = matsumoto_invert(&m_inv, &w.scale(d.sqrt()), 1.0)?;
    let (inv2, _) = signed_rank_one_inverse(&inv1, &base.l, e, det1)?;
    Ok(inv2)
}

/// Transformed tensors by direct differentiation of `*L = L·L/β`, where the
/// y-derivatives of `b_i` come from the rule `L ∂̇_j b_i = ρ h_ij`.
pub fn star_oracle(base: &BaseGeometry, h: &HVectorState) -> Result<StarGeometry> {
    let n = base.n;
    let y = &base.y;
    let bj = b_jet(base, h);
    // β_i = b_i + y^r ∂̇_i b_r; β_ij = ∂̇_j b_i + ∂̇_i b_j + y^r ∂̇_i ∂̇_j b_r;
    // β_ijk = ∂̇_j ∂̇_k b_i + (two terms cancelling y^r ∂̇∂̇∂̇ b_r, which
    // follows from differentiating y^r ∂̇_i b_r = 0 twice).
    let dy = Vector::from_fn(n, |i| h.b[i] + (0..n).map(|r| y[r] * bj.db.get(r, i)).sum::<f64>());
    let ddb_y = bj.ddb.contract_first(y);
    let dydy = Matrix::symmetric_from_fn(n, |i, j| bj.db.get(i, j) + bj.db.get(j, i) + ddb_y.get(i, j));
    let beta = JetBundle::from_y_parts(h.b.dot(y), dy, Some(dydy), Some(bj.ddb.clone()));
    let l = &base.jet;
    let star = l.mul(l).div(&beta)?;
    from_star_jet(&star)
}

/// Transformed tensors from a field-mode `*L` treated as a metric of its own.
pub fn star_from_field(field: &KropinaField, x: &Vector, y: &Vector) -> Result<StarGeometry> {
    let g = base_objects_vertical(field, x, y)?;
    from_star_jet(&g.jet)
}

fn from_star_jet(star: &JetBundle) -> Result<StarGeometry> {
    let energy = star.mul(star).scale(0.5);
    let g = energy.dydy().cloned().expect("third-order jet");
    let g_inv = invert_sym(&g)?;
    let c = energy.dydydy().expect("third-order jet").scale(0.5);
    let c_raised = c.raise_first(&g_inv);
    Ok(StarGeometry {
        l_val: star.value,
        l: star.dy.clone(),
        l_ij: star.dydy().cloned().expect("third-order jet"),
        l_ijk: star.dydydy().cloned().expect("third-order jet"),
        g,
        g_inv,
        c,
        c_raised,
        g_inv_dense: None,
        g_inv_rank_one: None,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FieldResidual {
    pub field: &'static str,
    pub residual: f64,
    pub pass: bool,
}

/// Max-norm relative residual per field.
pub fn compare_star(cf: &StarGeometry, oracle: &StarGeometry, tol: f64) -> Vec<FieldResidual> {
    let pairs: [(&'static str, Vec<f64>, Vec<f64>); 9] = [
        ("star_L", cf.l_val.components(), oracle.l_val.components()),
        ("star_l", cf.l.components(), oracle.l.components()),
        ("star_Lij", cf.l_ij.components(), oracle.l_ij.components()),
        ("star_Lijk", cf.l_ijk.components(), oracle.l_ijk.components()),
        ("star_g", cf.g.components(), oracle.g.components()),
        ("star_g_inv", cf.g_inv.components(), oracle.g_inv.components()),
        ("star_C", cf.c.components(), oracle.c.components()),
        ("star_C_raised", cf.c_raised.components(), oracle.c_raised.components()),
        ("star_C_raised_vs_ginv_C", cf.c_raised.components(), cf.c.raise_first(&cf.g_inv).components()),
    ];
    pairs
        .into_iter()
        .map(|(field, a, b)| {
            let residual = rel_diff(&a, &b);
            FieldResidual { field, residual, pass: residual < tol }
        })
        .collect()
}

impl StarGeometry {
    /// `*g^ir *g_rj − δ^i_j` (max norm), and the relative gaps between the
    /// formula inverse and the dense / rank-one routes when present.
    pub fn inverse_residuals(&self) -> (f64, Option<f64>, Option<f64>) {
        let n = self.g.dim();
        let id = self.g_inv.matmul(&self.g).sub(&Matrix::identity(n)).max_abs();
        let dense = self.g_inv_dense.as_ref().map(|d| rel_diff(&self.g_inv.components(), &d.components()));
        let r1 = self.g_inv_rank_one.as_ref().map(|d| rel_diff(&self.g_inv.components(), &d.components()));
        (id, dense, r1)
    }

    /// `*g_ij y^i y^j − *L²`, `*l_i y^i − *L`, `*C_ijk y^k`, `*L_ij y^j`,
    /// each relative to its natural scale.
    pub fn structural_residuals(&self, y: &Vector) -> Vec<(&'static str, f64)> {
        let l2 = self.l_val * self.l_val;
        let yn = y.norm();
        vec![
            ("star_g_yy", (self.g.quad(y, y) - l2).abs() / l2),
            ("star_l_y", (self.l.dot(y) - self.l_val).abs() / self.l_val.abs()),
            ("star_C_y", self.c.contract_last(y).max_abs() / (self.c.max_abs() * yn).max(1e-3)),
            ("star_Lij_y", self.l_ij.mul_vec(y).max_abs() / (self.l_ij.max_abs() * yn).max(1e-3)),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basegeom::base_objects;
    use crate::hvector::{build_state, HVectorSpec};
    use crate::metric::MetricSpec;

    fn worked(b: Vec<f64>) -> (BaseGeometry, HVectorState) {
        let m = MetricSpec::Euclidean { dim: 2 }.build().unwrap();
        let base = base_objects(&m, &Vector::from(vec![0.0, 0.0]), &Vector::from(vec![1.0, 0.0])).unwrap();
        let spec = HVectorSpec::Pointwise { b, bcov: vec![], rho: 0.5, rho_grad: vec![] };
        let st = build_state(&base, None, &spec).unwrap();
        (base, st)
    }

    #[test]
    fn worked_metric() {
        let (base, st) = worked(vec![1.0, 0.2]);
        let s = star_closed_form(&base, &st).unwrap();
        let expect = Matrix::from_rows(&[vec![1.0, -0.2], vec![-0.2, 1.62]]);
        assert!(s.g.sub(&expect).max_abs() < 1e-14);
        assert!(s.l.sub(&Vector::from(vec![1.0, -0.2])).max_abs() < 1e-15);
        assert!((s.l.dot(&base.y) - 1.0).abs() < 1e-15);
        let o = star_oracle(&base, &st).unwrap();
        for r in compare_star(&s, &o, 1e-12) {
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn b_along_l() {
        let (base, st) = worked(vec![1.0, 0.0]);
        let s = star_closed_form(&base, &st).unwrap();
        assert!(s.g.sub(&Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.5]])).max_abs() < 1e-14);
    }

    #[test]
    fn fault_injection_flags_one_field() {
        let (base, st) = worked(vec![1.0, 0.2]);
        let s = star_closed_form(&base, &st).unwrap();
        let mut bad = s.clone();
        bad.g.set(1, 1, bad.g.get(1, 1) + 1e-3);
        let r = compare_star(&bad, &s, 1e-8);
        let failed: Vec<_> = r.iter().filter(|f| !f.pass).map(|f| f.field).collect();
        assert_eq!(failed, vec!["star_g"]);
    }

    #[test]
    fn degenerate_guard() {
        // rho * tau = 2
        let m = MetricSpec::Euclidean { dim: 2 }.build().unwrap();
        let base = base_objects(&m, &Vector::from(vec![0.0, 0.0]), &Vector::from(vec![1.0, 0.0])).unwrap();
        let spec = HVectorSpec::Pointwise { b: vec![1.0, 0.2], bcov: vec![], rho: 2.0, rho_grad: vec![] };
        let st = build_state(&base, None, &spec).unwrap();
        assert!(matches!(star_closed_form(&base, &st), Err(Error::DegenerateChange { scalar: "2 - rho*tau", .. })));
    }
}
