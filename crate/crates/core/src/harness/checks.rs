//! Per-point checks. Each check turns into a list of residual records.

use serde::Serialize;

use super::sampling::{context, PointContext, PreparedPoint};
use super::scenario::{CheckId, GeodesicOptions, Tolerances};
use crate::basegeom::{base_objects, connection};
use crate::difftensor::{difference_tensor, residuals, theorem31_check, DiffTensor};
use crate::error::{Error, Result};
use crate::hvector::{hvector_axiom_residual, lemma32_consistency, KropinaField};
use crate::kropina::{compare_star, star_closed_form, star_from_field, star_oracle, StarGeometry};
use crate::metric::Metric;
use crate::projective::{classify, geodesic_compare, projective_condition, projective_factor, theorem41_check, Verdict};
use crate::tensor::{Components, Vector};
use crate::tolerance::{rel_diff, rel_residual, Tolerance, CLOSED_FORM, EXACT, GEODESIC, PLUG_BACK};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Record {
    pub check: &'static str,
    pub metric: usize,
    pub point: usize,
    pub residual: String,
    pub value: f64,
    /// `None` for diagnostics that do not gate the run.
    pub threshold: Option<f64>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

struct Sink<'a> {
    check: &'static str,
    point: &'a PreparedPoint,
    out: Vec<Record>,
}

impl Sink<'_> {
    fn gate(&mut self, residual: &str, value: f64, threshold: f64) {
        self.push(residual, value, Some(threshold), value <= threshold, None);
    }

    fn diag(&mut self, residual: &str, value: f64, note: Option<String>) {
        self.push(residual, value, None, true, note);
    }

    fn push(&mut self, residual: &str, value: f64, threshold: Option<f64>, pass: bool, note: Option<String>) {
        self.out.push(Record {
            check: self.check,
            metric: self.point.metric,
            point: self.point.index,
            residual: residual.to_string(),
            value,
            threshold,
            pass,
            note,
        });
    }
}

pub struct CheckEnv<'a> {
    pub metric: &'a Metric,
    pub field: Option<&'a KropinaField>,
    pub tol: Tolerances,
    pub geodesic: GeodesicOptions,
}

/// Runs `checks` at one point. Stage failures become failing records; any
/// other error is a domain error of the point.
pub fn run_point(env: &CheckEnv<'_>, p: &PreparedPoint, checks: &[CheckId]) -> Result<Vec<Record>> {
    let (x, y) = (Vector::from(p.x.clone()), Vector::from(p.y.clone()));
    let ctx = context(env.metric, &p.hvector, &x, &y)?;
    let star = star_closed_form(&ctx.base, &ctx.h)?;
    let mut out = Vec::new();
    for &c in checks {
        let mut sink = Sink { check: c.id(), point: p, out: Vec::new() };
        match c {
            CheckId::StarClosedForms => star_forms(env, &ctx, &star, &x, &y, &mut sink)?,
            CheckId::InverseMetric => inverse(env, &star, &mut sink),
            CheckId::DifferenceTensor => diff(env, &ctx, &star, &x, &y, &mut sink)?,
            CheckId::Theorem31 => theorem31(env, &ctx, &star, &mut sink)?,
            CheckId::Theorem32 => theorem32(env, &ctx, &x, &y, &mut sink)?,
            CheckId::Lemma32 => lemma32(env, &ctx, &mut sink),
            CheckId::Theorem41 => theorem41(env, &ctx, &mut sink)?,
            CheckId::Geodesic => geodesic(env, p, &x, &y, &mut sink)?,
            CheckId::Homogeneity => homogeneity(env, p, &ctx, &star, &x, &y, &mut sink)?,
        }
        out.extend(sink.out);
    }
    Ok(out)
}

fn star_forms(env: &CheckEnv<'_>, ctx: &PointContext, star: &StarGeometry, x: &Vector, y: &Vector, sink: &mut Sink<'_>) -> Result<()> {
    let thr = env.tol.rel(CLOSED_FORM);
    let oracle = match env.field {
        Some(kf) => star_from_field(kf, x, y)?,
        None => star_oracle(&ctx.base, &ctx.h)?,
    };
    for r in compare_star(star, &oracle, thr) {
        sink.gate(r.field, r.residual, thr);
    }
    for (name, v) in star.structural_residuals(y) {
        sink.gate(name, v, thr);
    }
    Ok(())
}

fn inverse(env: &CheckEnv<'_>, star: &StarGeometry, sink: &mut Sink<'_>) {
    let thr = env.tol.rel(PLUG_BACK);
    let (id, dense, r1) = star.inverse_residuals();
    sink.gate("star_ginv_times_g", id, thr);
    if let Some(v) = dense {
        sink.gate("formula_vs_dense", v, thr);
    }
    if let Some(v) = r1 {
        sink.gate("formula_vs_rank_one", v, thr);
    }
}

/// `D`, or a failing record naming the stage whose plug-back failed.
fn stage_d(ctx: &PointContext, star: &StarGeometry, sink: &mut Sink<'_>) -> Result<Option<DiffTensor>> {
    match difference_tensor(&ctx.base, &ctx.h, star) {
        Ok(d) => Ok(Some(d)),
        Err(Error::StageResidual { stage, residual, tol }) => {
            sink.push(&format!("stage_{stage}"), residual, Some(tol), false, Some("plug-back failed".into()));
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

fn diff(env: &CheckEnv<'_>, ctx: &PointContext, star: &StarGeometry, x: &Vector, y: &Vector, sink: &mut Sink<'_>) -> Result<()> {
    let thr = env.tol.rel(CLOSED_FORM);
    let Some(d) = stage_d(ctx, star, sink)? else { return Ok(()) };
    for r in residuals(&ctx.base, &ctx.h, star, &d)? {
        sink.gate(r.name, r.value, thr);
    }
    if let (Some(kf), Some(conn)) = (env.field, ctx.conn.as_ref()) {
        let sbase = base_objects(kf, x, y)?;
        let sconn = connection(kf, &sbase)?;
        let direct = sconn.cartan.sub(&conn.cartan);
        let scale = sconn.cartan.max_abs().max(conn.cartan.max_abs());
        let gap = rel_residual(direct.sub(&d.djk).max_abs(), scale);
        sink.gate("d_vs_direct_cartan", gap, thr);
    }
    Ok(())
}

fn theorem31(env: &CheckEnv<'_>, ctx: &PointContext, star: &StarGeometry, sink: &mut Sink<'_>) -> Result<()> {
    let Some(d) = stage_d(ctx, star, sink)? else { return Ok(()) };
    let d_tol = env.tol.rel(PLUG_BACK);
    let o = theorem31_check(&ctx.h, &d, env.tol.tol_abs, d_tol);
    let mut note = (!o.hypothesis).then(|| o.message.clone());
    if o.converse_flag {
        note = Some(format!("{}; D vanishes although b is not parallel", o.message));
    }
    if o.hypothesis {
        sink.push("max_abs_d", o.max_d, Some(d_tol), o.pass, note);
    } else {
        sink.diag("max_abs_d", o.max_d, note);
    }
    Ok(())
}

fn theorem32(env: &CheckEnv<'_>, ctx: &PointContext, x: &Vector, y: &Vector, sink: &mut Sink<'_>) -> Result<()> {
    let (Some(kf), Some(conn)) = (env.field, ctx.conn.as_ref()) else {
        return Err(Error::Domain { what: "theorem32 needs a field-mode h-vector".into(), value: 0.0 });
    };
    let sbase = base_objects(kf, x, y)?;
    let sconn = connection(kf, &sbase)?;
    let gap = rel_diff(&sconn.berwald.components(), &conn.berwald.components());
    let zero = env.tol.tol_abs;
    let hypothesis = ctx.h.bcov.max_abs() <= zero && ctx.h.rho_k.max_abs() <= zero;
    if hypothesis {
        sink.gate("berwald_gap", gap, env.tol.rel(PLUG_BACK));
    } else {
        sink.diag("berwald_gap", gap, Some(format!("b not parallel (max |b_i|j| = {:e})", ctx.h.bcov.max_abs())));
    }
    Ok(())
}

fn lemma32(env: &CheckEnv<'_>, ctx: &PointContext, sink: &mut Sink<'_>) {
    let tol = Tolerance::new(env.tol.rel(PLUG_BACK), env.tol.tol_abs);
    let rc = lemma32_consistency(&ctx.h, &tol);
    let note = Some(rc.message.clone());
    if rc.applicable {
        sink.push("rho_gradient", ctx.h.rho_k.max_abs(), Some(tol.abs + tol.rel * ctx.h.rho.abs()), rc.pass, note);
    } else {
        sink.diag("rho_gradient", ctx.h.rho_k.max_abs(), note);
    }
    let axiom = hvector_axiom_residual(&ctx.base, &ctx.h);
    sink.diag("axiom_ii_residual", rel_residual(axiom, ctx.h.rho.abs() * ctx.base.h.max_abs()), None);
}

fn theorem41(env: &CheckEnv<'_>, ctx: &PointContext, sink: &mut Sink<'_>) -> Result<()> {
    let tol = env.tol.rel(PLUG_BACK);
    let o = theorem41_check(&ctx.base, &ctx.h, tol, env.tol.nonproj_threshold)?;
    let r = &o.report;
    if o.condition_holds {
        sink.diag("condition_norm", r.condition_norm, Some("condition holds".into()));
        let p_gap = rel_residual((r.p - r.p_from_d00).abs(), r.p.abs());
        sink.gate("spray_residual", r.spray_norm, tol);
        sink.gate("d00_vs_minus_e00_tau_l", r.d00_vs_l, tol);
        sink.gate("p_vs_d00", p_gap, tol);
        sink.gate("m_d00", r.m_d00, tol);
    } else if r.condition_norm >= 10.0 * tol {
        sink.diag("condition_norm", r.condition_norm, Some("condition violated".into()));
        let note = Some(format!("{:?}", o.verdict).to_lowercase());
        sink.push("collinearity_defect", r.collinearity, Some(env.tol.nonproj_threshold), o.pass, note);
    } else {
        sink.push("condition_norm", r.condition_norm, Some(tol), false, Some(o.message.clone()));
    }
    Ok(())
}

fn geodesic(env: &CheckEnv<'_>, p: &PreparedPoint, x: &Vector, y: &Vector, sink: &mut Sink<'_>) -> Result<()> {
    let Some(kf) = env.field else {
        return Err(Error::Domain { what: "geodesic needs a field-mode h-vector".into(), value: 0.0 });
    };
    let g = env.geodesic;
    let r = geodesic_compare(kf, &p.hvector, x, y, g.steps, g.dt)?;
    let defect = r.max_defect.max(r.max_defect_half);
    let verdict = classify(defect, GEODESIC, env.tol.nonproj_threshold);
    let note = match verdict {
        Verdict::Projective => "projective along the path",
        Verdict::NonProjective => "non-projective along the path",
        Verdict::Indeterminate => "indeterminate",
    };
    sink.push("max_collinearity_defect", defect, None, verdict != Verdict::Indeterminate, Some(note.into()));
    sink.gate("step_halving_endpoint_gap", r.endpoint_gap, GEODESIC);
    sink.gate("spray_vs_half_d00", r.max_spray_gap, env.tol.rel(CLOSED_FORM));
    Ok(())
}

fn homogeneity(
    env: &CheckEnv<'_>,
    p: &PreparedPoint,
    ctx: &PointContext,
    star: &StarGeometry,
    x: &Vector,
    y: &Vector,
    sink: &mut Sink<'_>,
) -> Result<()> {
    let thr = env.tol.rel(EXACT);
    let y2 = y.scale(2.0);
    let c2 = context(env.metric, &p.hvector, x, &y2)?;
    let star2 = star_closed_form(&c2.base, &c2.h)?;
    let (b1, b2) = (&ctx.base, &c2.base);
    let deg1 = |a: f64, b: f64| rel_residual((b - 2.0 * a).abs(), (2.0 * a).abs());
    sink.gate("L_degree_1", deg1(b1.l_val, b2.l_val), thr);
    sink.gate("euler_L", rel_residual(b1.jet.euler_residual(y, 1.0).abs(), b1.l_val), thr);
    sink.gate("star_L_degree_1", deg1(star.l_val, star2.l_val), thr);
    sink.gate("b_degree_0", rel_diff(c2.h.b.as_slice(), ctx.h.b.as_slice()), thr);
    sink.gate("m_degree_0", rel_diff(c2.h.m.as_slice(), ctx.h.m.as_slice()), thr);
    let r1 = projective_condition(b1, &ctx.h).scale(2.0);
    let r2 = projective_condition(b2, &c2.h);
    let r_scale = ctx.h.f_i0(y).max_abs().max((ctx.h.beta_0 / ctx.h.beta).abs() * ctx.h.m.max_abs()) * 2.0;
    sink.gate("R_degree_1", rel_residual(r2.sub(&r1).max_abs(), r_scale), thr);
    let (p1, p2) = (projective_factor(b1, &ctx.h)?, projective_factor(b2, &c2.h)?);
    let p_scale = ctx.h.tau / b1.l_val * (ctx.h.e00(y).abs() + ctx.h.bcov.max_abs() * y.norm() * y.norm());
    sink.gate("P_degree_1", rel_residual((p2 - 2.0 * p1).abs(), p_scale), thr);
    for (name, v, scale) in ctx.h.invariants(b1) {
        sink.gate(name, rel_residual(v, scale), thr);
    }
    Ok(())
}
