//! Point preparation: explicit points, the seeded sampler, and per-point
//! h-vector generation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::scenario::{Generator, HVectorInput, PointsSpec, SamplerSpec};
use super::HarnessError;
use crate::basegeom::{base_objects, connection, BaseGeometry, ConnectionData};
use crate::error::Result;
use crate::hvector::{build_state, HVectorSpec, HVectorState};
use crate::jet::ScalarField;
use crate::kropina::change_scalars;
use crate::metric::Metric;
use crate::projective::make_projective_instance;
use crate::tensor::{Matrix, Vector};

/// A point of a run together with the pointwise h-vector data used there.
#[derive(Clone, Debug, Serialize)]
pub struct PreparedPoint {
    pub metric: usize,
    pub index: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    #[serde(skip)]
    pub hvector: HVectorSpec,
}

/// Everything a check needs at one point.
pub struct PointContext {
    pub base: BaseGeometry,
    pub conn: Option<ConnectionData>,
    pub h: HVectorState,
}

pub fn context(metric: &Metric, spec: &HVectorSpec, x: &Vector, y: &Vector) -> Result<PointContext> {
    let base = base_objects(metric, x, y)?;
    let conn = if spec.is_field() { Some(connection(metric, &base)?) } else { None };
    let h = build_state(&base, conn.as_ref(), spec)?;
    change_scalars(&base, &h)?;
    Ok(PointContext { base, conn, h })
}

/// Streams are keyed by metric and point so that results do not depend on
/// evaluation order.
fn stream_rng(seed: u64, metric: usize, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((metric as u64) << 32) | index as u64);
    rng
}

fn uniform(rng: &mut ChaCha8Rng, scale: f64) -> f64 {
    rng.random_range(-scale..=scale)
}

/// The h-vector used at `(x, y)`.
pub fn hvector_at(
    input: &HVectorInput,
    metric: &Metric,
    x: &Vector,
    y: &Vector,
    seed: u64,
    metric_idx: usize,
    index: usize,
) -> Result<HVectorSpec> {
    let g = match input {
        HVectorInput::Spec(s) => return Ok(s.clone()),
        HVectorInput::Generator(g) => g,
    };
    let n = metric.dim();
    let base = base_objects(metric, x, y)?;
    let mut c = g.c().to_vec();
    c.resize(n, 0.0);
    let rho = g.rho();
    let b: Vec<f64> = (0..n).map(|i| rho * base.l[i] + c[i]).collect();
    let mut rng = stream_rng(g.seed().unwrap_or(seed), metric_idx, index);
    Ok(match g {
        Generator::ZeroBcov { .. } => HVectorSpec::Pointwise { b, bcov: Vec::new(), rho, rho_grad: Vec::new() },
        Generator::Random { scale, .. } => {
            let bcov = (0..n).map(|_| (0..n).map(|_| uniform(&mut rng, *scale)).collect()).collect();
            let rho_grad = (0..n).map(|_| uniform(&mut rng, *scale)).collect();
            HVectorSpec::Pointwise { b, bcov, rho, rho_grad }
        }
        Generator::ProjectiveConstructed { scale, .. } => {
            let mut e = Matrix::zeros_symmetric(n);
            for i in 0..n {
                for j in i..n {
                    e.set(i, j, uniform(&mut rng, *scale));
                }
            }
            make_projective_instance(&base, &Vector::from(b), &e, rho)
        }
    })
}

/// Output of point preparation for one metric.
#[derive(Debug, Default)]
pub struct Prepared {
    pub points: Vec<PreparedPoint>,
    pub rejected: usize,
}

pub fn prepare(
    input: &HVectorInput,
    points: &PointsSpec,
    metric: &Metric,
    metric_idx: usize,
    seed: u64,
) -> std::result::Result<Prepared, HarnessError> {
    match points {
        PointsSpec::Explicit(list) => {
            let mut out = Prepared::default();
            for (index, p) in list.iter().enumerate() {
                let (x, y) = (Vector::from(p.x.clone()), Vector::from(p.y.clone()));
                let spec = hvector_at(input, metric, &x, &y, seed, metric_idx, index)
                    .and_then(|s| context(metric, &s, &x, &y).map(|_| s))
                    .map_err(|e| HarnessError::domain(metric_idx, index, &p.x, &p.y, e.to_string()))?;
                out.points.push(PreparedPoint { metric: metric_idx, index, x: p.x.clone(), y: p.y.clone(), hvector: spec });
            }
            Ok(out)
        }
        PointsSpec::Sampler(s) => sample(input, s, metric, metric_idx, seed),
    }
}

fn sample(
    input: &HVectorInput,
    s: &SamplerSpec,
    metric: &Metric,
    metric_idx: usize,
    seed: u64,
) -> std::result::Result<Prepared, HarnessError> {
    let n = metric.dim();
    let seed = s.seed.unwrap_or(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(metric_idx as u64);
    let mut out = Prepared::default();
    while out.points.len() < s.count {
        let x: Vec<f64> = (0..n)
            .map(|a| {
                let [lo, hi] = s.bounds.interval(a).expect("validated box");
                if lo == hi {
                    lo
                } else {
                    rng.random_range(lo..hi)
                }
            })
            .collect();
        let mut y: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        y.iter_mut().for_each(|v| *v /= norm);
        let index = out.points.len();
        let (xv, yv) = (Vector::from(x.clone()), Vector::from(y.clone()));
        let verdict = hvector_at(input, metric, &xv, &yv, seed, metric_idx, index).and_then(|spec| {
            let ctx = context(metric, &spec, &xv, &yv)?;
            Ok((spec, ctx.h.beta / ctx.base.l_val))
        });
        match verdict {
            Ok((spec, ratio)) if ratio > s.cone_margin => {
                out.points.push(PreparedPoint { metric: metric_idx, index, x, y, hvector: spec });
            }
            Ok((_, ratio)) => {
                log::info!("metric {metric_idx}: rejected sample x={x:?} y={y:?}: beta/L = {ratio:e} <= cone margin {}", s.cone_margin);
                out.rejected += 1;
            }
            Err(e) => {
                log::info!("metric {metric_idx}: rejected sample x={x:?} y={y:?}: {e}");
                out.rejected += 1;
            }
        }
        if out.rejected > s.count {
            return Err(HarnessError::Invalid(format!(
                "metric {metric_idx}: more than half of the sampled points were rejected ({} rejected, {} accepted); \
                 shrink the box, lower cone_margin, or choose c with a larger component along typical y",
                out.rejected,
                out.points.len()
            )));
        }
    }
    Ok(out)
}
