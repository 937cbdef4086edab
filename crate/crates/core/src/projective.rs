//! Projective-change criterion for the Kropina change.
//!
//! The change is projective iff `*G^i = G^i + P y^i`, i.e. iff `D^i_00` is
//! collinear with `y^i`. This happens exactly when
//! `R_i = F_i0 − (β_0/β) m_i` vanishes.

use serde::Serialize;

use crate::basegeom::{base_objects, connection, spray, BaseGeometry};
use crate::difftensor::d00;
use crate::error::{Error, Result};
use crate::hvector::{build_state, HVectorSpec, HVectorState, KropinaField};
use crate::kropina::star_closed_form;
use crate::tensor::{Matrix, Vector};
use crate::tolerance::{rel_diff, rel_residual, CHANGE_GUARD, GEODESIC};

/// Magnitude floor (in units of `L²`) for the collinearity defect, so that a
/// vanishing `*G − G` counts as collinear.
pub const COLLINEARITY_FLOOR: f64 = 1e-3;

/// `R_i = F_i0 − (β_0/β) m_i`
pub fn projective_condition(base: &BaseGeometry, h: &HVectorState) -> Vector {
    h.f_i0(&base.y).axpy(-h.beta_0 / h.beta, &h.m)
}

/// `‖R‖` relative to the larger of its two terms.
pub fn condition_norm(base: &BaseGeometry, h: &HVectorState) -> f64 {
    let f = h.f_i0(&base.y);
    let scale = f.max_abs().max((h.beta_0 / h.beta).abs() * h.m.max_abs());
    rel_residual(projective_condition(base, h).max_abs(), scale)
}

/// `P = (τ/2L){(2β_0 m²/β − 2F_β0)(2b²/β − ρ/L)^{-1} − E_00}`
pub fn projective_factor(base: &BaseGeometry, h: &HVectorState) -> Result<f64> {
    let y = &base.y;
    let q = 2.0 * h.b_sq / h.beta - h.rho / base.l_val;
    if !(q.abs() * base.l_val > CHANGE_GUARD) {
        return Err(Error::DegenerateChange { scalar: "2b^2/beta - rho/L", value: q });
    }
    let num = 2.0 * h.beta_0 * h.m_sq / h.beta - 2.0 * h.f_beta0(y);
    Ok(h.tau / (2.0 * base.l_val) * (num / q - h.e00(y)))
}

/// A pointwise h-vector whose covariant derivative has symmetric part `e`
/// and antisymmetric part `F_ij = (E_00/(βL))(m_i l_j − m_j l_i)`.
pub fn make_projective_instance(base: &BaseGeometry, b: &Vector, e: &Matrix, rho: f64) -> HVectorSpec {
    let n = base.n;
    let y = &base.y;
    let beta = b.dot(y);
    let m = b.sub(&base.l.scale(beta / base.l_val));
    let e00 = e.quad(y, y);
    let c = e00 / (beta * base.l_val);
    let bcov =
        (0..n).map(|i| (0..n).map(|j| 0.5 * (e.get(i, j) + e.get(j, i)) + c * (m[i] * base.l[j] - m[j] * base.l[i])).collect()).collect();
    HVectorSpec::Pointwise { b: b.iter().copied().collect(), bcov, rho, rho_grad: Vec::new() }
}

/// `‖v⊥‖_g / max(‖v‖_g, COLLINEARITY_FLOOR · L²)` where `v⊥` is the part of
/// `v` `g`-orthogonal to `y`.
pub fn collinearity(v: &Vector, y: &Vector, g: &Matrix, l_val: f64) -> f64 {
    let vv = g.quad(v, v).max(0.0);
    let vy = g.quad(v, y);
    let yy = g.quad(y, y);
    let perp = (vv - vy * vy / yy).max(0.0).sqrt();
    perp / vv.sqrt().max(COLLINEARITY_FLOOR * l_val * l_val)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Projective,
    NonProjective,
    Indeterminate,
}

pub fn classify(defect: f64, tol: f64, nonproj: f64) -> Verdict {
    if defect < tol {
        Verdict::Projective
    } else if defect >= nonproj {
        Verdict::NonProjective
    } else {
        Verdict::Indeterminate
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProjectiveReport {
    pub condition_residual: Vec<f64>,
    pub condition_norm: f64,
    pub p: f64,
    /// `½ D^i_00 l_i / L`
    pub p_from_d00: f64,
    pub spray_residual: Vec<f64>,
    /// `‖D^i_00 − 2P y^i‖` relative to `|D^i_00|`.
    pub spray_norm: f64,
    /// `‖D^i_00 + E_00 τ l^i‖` relative to `|D^i_00|`.
    pub d00_vs_l: f64,
    /// `m_r D^r_00`
    pub m_d00: f64,
    pub collinearity: f64,
}

pub fn projective_report(base: &BaseGeometry, h: &HVectorState) -> Result<ProjectiveReport> {
    let star = star_closed_form(base, h)?;
    let d = d00(base, h, &star)?;
    let y = &base.y;
    let p = projective_factor(base, h)?;
    let r = projective_condition(base, h);
    let spray_res = d.axpy(-2.0 * p, y);
    let scale = d.max_abs().max((2.0 * p).abs() * y.max_abs());
    let e_tl = base.l_up.scale(h.e00(y) * h.tau);
    let m_scale = h.m.max_abs() * d.max_abs();
    Ok(ProjectiveReport {
        condition_norm: condition_norm(base, h),
        condition_residual: r.into_vec(),
        p,
        p_from_d00: 0.5 * d.dot(&base.l) / base.l_val,
        spray_norm: rel_residual(spray_res.max_abs(), scale),
        spray_residual: spray_res.into_vec(),
        d00_vs_l: rel_residual(d.add(&e_tl).max_abs(), d.max_abs().max(e_tl.max_abs())),
        m_d00: rel_residual(h.m.dot(&d).abs(), m_scale),
        collinearity: collinearity(&d, y, &base.g, base.l_val),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Theorem41Outcome {
    pub verdict: Verdict,
    /// `true` when `‖R‖ < tol`.
    pub condition_holds: bool,
    pub pass: bool,
    pub report: ProjectiveReport,
    pub message: String,
}

/// Both directions of the criterion at one instance.
///
/// With `‖R‖ < tol` the spray difference must be `2P y` and `D^i_00` must be
/// `−E_00 τ l^i`. With `‖R‖ ≥ 10 tol` the instance must be detected as
/// non-projective (collinearity defect at least `nonproj`).
pub fn theorem41_check(base: &BaseGeometry, h: &HVectorState, tol: f64, nonproj: f64) -> Result<Theorem41Outcome> {
    let report = projective_report(base, h)?;
    let verdict = classify(report.collinearity, tol, nonproj);
    let r = report.condition_norm;
    let p_gap = rel_residual((report.p - report.p_from_d00).abs(), report.p.abs());
    let (condition_holds, pass, message) = if r < tol {
        let ok = report.spray_norm < tol && report.d00_vs_l < tol && p_gap < tol && report.m_d00 < tol;
        let msg = format!(
            "condition holds (|R| = {r:e}): |D00 - 2Py| = {:e}, |D00 + E00 tau l| = {:e}, P gap = {p_gap:e}",
            report.spray_norm, report.d00_vs_l
        );
        (true, ok, msg)
    } else if r >= 10.0 * tol {
        let ok = verdict == Verdict::NonProjective;
        (false, ok, format!("condition violated (|R| = {r:e}): collinearity defect {:e}", report.collinearity))
    } else {
        (false, false, format!("|R| = {r:e} lies between tol and 10 tol"))
    };
    Ok(Theorem41Outcome { verdict, condition_holds, pass, report, message })
}

#[derive(Clone, Debug, Serialize)]
pub struct GeodesicReport {
    pub steps: usize,
    pub dt: f64,
    /// Max over the path of the collinearity defect of `*G − G` with `y`.
    pub max_defect: f64,
    /// The same along the run with step `dt/2`.
    pub max_defect_half: f64,
    /// Relative gap between the end points of the two runs.
    pub endpoint_gap: f64,
    /// Max relative gap between `*G − G` and `½ D^i_00` from the algebra.
    pub max_spray_gap: f64,
    pub end_x: Vec<f64>,
    pub end_y: Vec<f64>,
}

impl GeodesicReport {
    pub fn projective_pass(&self) -> bool {
        self.max_defect.max(self.max_defect_half) < GEODESIC && self.endpoint_gap < GEODESIC
    }
}

struct Probe {
    defect: f64,
    spray_gap: f64,
}

fn probe(kf: &KropinaField, spec: &HVectorSpec, x: &Vector, y: &Vector, with_algebra: bool) -> Result<Probe> {
    let base = base_objects(&kf.metric, x, y)?;
    let star_spray = spray(kf, x, y)?;
    let (g, spray_gap) = if with_algebra {
        let conn = connection(&kf.metric, &base)?;
        let h = build_state(&base, Some(&conn), spec)?;
        let star = star_closed_form(&base, &h)?;
        let d = d00(&base, &h, &star)?;
        let v = star_spray.sub(&conn.spray);
        let half = d.scale(0.5);
        (conn.spray, rel_diff(v.as_slice(), half.as_slice()))
    } else {
        (spray(&kf.metric, x, y)?, 0.0)
    };
    let v = star_spray.sub(&g);
    Ok(Probe { defect: collinearity(&v, y, &base.g, base.l_val), spray_gap })
}

fn rk4_step(kf: &KropinaField, x: &Vector, y: &Vector, dt: f64) -> Result<(Vector, Vector)> {
    let acc = |x: &Vector, y: &Vector| -> Result<Vector> { Ok(spray(&kf.metric, x, y)?.scale(-2.0)) };
    let k1x = y.clone();
    let k1y = acc(x, y)?;
    let x2 = x.axpy(0.5 * dt, &k1x);
    let y2 = y.axpy(0.5 * dt, &k1y);
    let k2x = y2.clone();
    let k2y = acc(&x2, &y2)?;
    let x3 = x.axpy(0.5 * dt, &k2x);
    let y3 = y.axpy(0.5 * dt, &k2y);
    let k3x = y3.clone();
    let k3y = acc(&x3, &y3)?;
    let x4 = x.axpy(dt, &k3x);
    let y4 = y.axpy(dt, &k3y);
    let k4x = y4.clone();
    let k4y = acc(&x4, &y4)?;
    let comb = |a: &Vector, b: &Vector, c: &Vector, d: &Vector| a.add(&b.scale(2.0)).add(&c.scale(2.0)).add(d).scale(dt / 6.0);
    Ok((x.add(&comb(&k1x, &k2x, &k3x, &k4x)), y.add(&comb(&k1y, &k2y, &k3y, &k4y))))
}

struct Run {
    max_defect: f64,
    max_spray_gap: f64,
    x: Vector,
    y: Vector,
}

fn integrate(kf: &KropinaField, spec: &HVectorSpec, x0: &Vector, y0: &Vector, steps: usize, dt: f64, with_algebra: bool) -> Result<Run> {
    let (mut x, mut y) = (x0.clone(), y0.clone());
    let mut max_defect = 0.0f64;
    let mut max_spray_gap = 0.0f64;
    for step in 0..=steps {
        let p = probe(kf, spec, &x, &y, with_algebra).map_err(|e| Error::DomainExit { step, reason: e.to_string() })?;
        max_defect = max_defect.max(p.defect);
        max_spray_gap = max_spray_gap.max(p.spray_gap);
        if step < steps {
            (x, y) = rk4_step(kf, &x, &y, dt).map_err(|e| Error::DomainExit { step, reason: e.to_string() })?;
        }
    }
    Ok(Run { max_defect, max_spray_gap, x, y })
}

/// Integrates the base geodesic through `(x0, y0)` and monitors `*G − G`
/// along it; the run is repeated with step `dt/2` as a convergence check.
pub fn geodesic_compare(kf: &KropinaField, spec: &HVectorSpec, x0: &Vector, y0: &Vector, steps: usize, dt: f64) -> Result<GeodesicReport> {
    if !spec.is_field() {
        return Err(Error::Domain { what: "geodesic comparison needs a field-mode h-vector".into(), value: 0.0 });
    }
    let coarse = integrate(kf, spec, x0, y0, steps, dt, true)?;
    let fine = integrate(kf, spec, x0, y0, 2 * steps, 0.5 * dt, false)?;
    let end_c: Vec<f64> = coarse.x.iter().chain(coarse.y.iter()).copied().collect();
    let end_f: Vec<f64> = fine.x.iter().chain(fine.y.iter()).copied().collect();
    Ok(GeodesicReport {
        steps,
        dt,
        max_defect: coarse.max_defect,
        max_defect_half: fine.max_defect,
        endpoint_gap: rel_diff(&end_c, &end_f),
        max_spray_gap: coarse.max_spray_gap,
        end_x: coarse.x.into_vec(),
        end_y: coarse.y.into_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::metric::MetricSpec;

    fn v(x: &[f64]) -> Vector {
        Vector::from(x.to_vec())
    }

    fn euclid_base() -> BaseGeometry {
        let m = MetricSpec::Euclidean { dim: 2 }.build().unwrap();
        base_objects(&m, &v(&[0.0, 0.0]), &v(&[1.0, 0.0])).unwrap()
    }

    #[test]
    fn worked_instance() {
        let base = euclid_base();
        let e = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]);
        let spec = make_projective_instance(&base, &v(&[1.0, 0.2]), &e, 0.5);
        let HVectorSpec::Pointwise { bcov, .. } = &spec else { unreachable!() };
        assert!((bcov[0][1] + 0.2).abs() < 1e-15);
        assert!((bcov[0][1] + bcov[1][0] - 2.0 * e.get(0, 1)).abs() < 1e-15);
        let h = build_state(&base, None, &spec).unwrap();
        let out = theorem41_check(&base, &h, 1e-9, 1e-3).unwrap();
        assert!(out.condition_holds && out.pass, "{}", out.message);
        assert_eq!(out.verdict, Verdict::Projective);
    }

    #[test]
    fn zero_bcov_is_trivially_projective() {
        let base = euclid_base();
        let spec = HVectorSpec::Pointwise { b: vec![1.0, 0.3], bcov: vec![], rho: 0.4, rho_grad: vec![] };
        let h = build_state(&base, None, &spec).unwrap();
        assert_eq!(projective_factor(&base, &h).unwrap(), 0.0);
        assert!(theorem41_check(&base, &h, 1e-9, 1e-3).unwrap().pass);
    }

    #[test]
    fn symmetric_bcov_violates_condition() {
        let base = euclid_base();
        let spec = HVectorSpec::Pointwise { b: vec![1.0, 0.3], bcov: vec![vec![0.5, 0.1], vec![0.1, -0.2]], rho: 0.4, rho_grad: vec![] };
        let h = build_state(&base, None, &spec).unwrap();
        let r = projective_condition(&base, &h);
        let expect = h.m.scale(-h.e00(&base.y) / h.beta);
        assert!(r.sub(&expect).max_abs() < 1e-15);
        let out = theorem41_check(&base, &h, 1e-9, 1e-3).unwrap();
        assert!(out.pass && out.verdict == Verdict::NonProjective, "{}", out.message);
    }

    #[test]
    fn parallel_field_has_collinear_sprays() {
        let m = MetricSpec::Euclidean { dim: 2 }.build().unwrap();
        let spec = HVectorSpec::Field {
            c: vec![Expr::parse("(const 0.7)").unwrap(), Expr::parse("(const 0.1)").unwrap()],
            rho: Expr::parse("(const 0.3)").unwrap(),
        };
        let kf = KropinaField::new(m, &spec).unwrap();
        let r = geodesic_compare(&kf, &spec, &v(&[0.0, 0.0]), &v(&[1.0, 0.2]), 20, 0.05).unwrap();
        assert!(r.projective_pass(), "{r:?}");
        assert!((r.end_x[0] - 1.0).abs() < 1e-12 && (r.end_x[1] - 0.2).abs() < 1e-12);
    }
}
