//! Scenario files: JSON documents describing metrics, an h-vector (or a
//! generator for one), points and the checks to run.

use serde::de::{DeserializeOwned, Error as _};
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;

use super::HarnessError;
use crate::hvector::HVectorSpec;
use crate::jet::ScalarField;
use crate::metric::{Metric, MetricSpec};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: Option<String>,
    /// Default seed for the sampler and the random generators.
    #[serde(default)]
    pub seed: u64,
    #[serde(deserialize_with = "one_or_many")]
    pub metric: Vec<MetricSpec>,
    pub hvector: HVectorInput,
    pub points: PointsSpec,
    pub checks: Vec<CheckId>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub geodesic: GeodesicOptions,
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<MetricSpec>, D::Error> {
    match Value::deserialize(d)? {
        Value::Array(items) => items.into_iter().map(|v| typed(v, "metric entry")).collect(),
        v => Ok(vec![typed(v, "metric")?]),
    }
}

fn typed<T: DeserializeOwned, E: serde::de::Error>(v: Value, what: &str) -> Result<T, E> {
    serde_json::from_value(v).map_err(|e| E::custom(format!("{what}: {e}")))
}

/// Either a literal h-vector or a generator producing one per point.
#[derive(Clone, Debug)]
pub enum HVectorInput {
    Spec(HVectorSpec),
    Generator(Generator),
}

impl<'de> Deserialize<'de> for HVectorInput {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        let has = |k: &str| v.get(k).is_some();
        if has("generator") {
            Ok(HVectorInput::Generator(typed(v, "h-vector generator")?))
        } else if has("mode") {
            Ok(HVectorInput::Spec(typed(v, "h-vector")?))
        } else {
            Err(D::Error::custom("h-vector needs either a \"mode\" (pointwise | field) or a \"generator\" key"))
        }
    }
}

/// Pointwise h-vectors built at each point as `b = ρ l + c`.
///
/// `c` is padded with zeros up to the dimension of the metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Generator {
    /// `b_{i|j} = 0`, `ρ_k = 0`.
    ZeroBcov {
        #[serde(default = "default_c")]
        c: Vec<f64>,
        #[serde(default = "default_rho")]
        rho: f64,
    },
    /// Uniform random `b_{i|j}` and `ρ_k` in `[-scale, scale]`.
    Random {
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default = "default_c")]
        c: Vec<f64>,
        #[serde(default = "default_rho")]
        rho: f64,
        #[serde(default = "default_scale")]
        scale: f64,
    },
    /// Random symmetric part, antisymmetric part chosen so that the change
    /// is projective.
    ProjectiveConstructed {
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default = "default_c")]
        c: Vec<f64>,
        #[serde(default = "default_rho")]
        rho: f64,
        #[serde(default = "default_scale")]
        scale: f64,
    },
}

fn default_c() -> Vec<f64> {
    vec![1.0]
}

fn default_rho() -> f64 {
    0.5
}

fn default_scale() -> f64 {
    1.0
}

impl Generator {
    pub fn name(&self) -> &'static str {
        match self {
            Generator::ZeroBcov { .. } => "zero-bcov",
            Generator::Random { .. } => "random",
            Generator::ProjectiveConstructed { .. } => "projective-constructed",
        }
    }

    pub fn c(&self) -> &[f64] {
        match self {
            Generator::ZeroBcov { c, .. } | Generator::Random { c, .. } | Generator::ProjectiveConstructed { c, .. } => c,
        }
    }

    pub fn rho(&self) -> f64 {
        match self {
            Generator::ZeroBcov { rho, .. } | Generator::Random { rho, .. } | Generator::ProjectiveConstructed { rho, .. } => *rho,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Generator::ZeroBcov { .. } => None,
            Generator::Random { seed, .. } | Generator::ProjectiveConstructed { seed, .. } => *seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSpec {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoxSpec {
    /// The same interval on every axis.
    Uniform([f64; 2]),
    PerAxis(Vec<[f64; 2]>),
}

impl BoxSpec {
    pub fn interval(&self, axis: usize) -> Option<[f64; 2]> {
        match self {
            BoxSpec::Uniform(r) => Some(*r),
            BoxSpec::PerAxis(v) => v.get(axis).copied(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSpec {
    pub count: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(rename = "box")]
    pub bounds: BoxSpec,
    /// Minimal `β / L` of an accepted point.
    #[serde(default = "default_cone_margin")]
    pub cone_margin: f64,
}

fn default_cone_margin() -> f64 {
    0.05
}

#[derive(Clone, Debug)]
pub enum PointsSpec {
    Explicit(Vec<PointSpec>),
    Sampler(SamplerSpec),
}

impl<'de> Deserialize<'de> for PointsSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match Value::deserialize(d)? {
            Value::Array(items) => Ok(PointsSpec::Explicit(items.into_iter().map(|v| typed(v, "point")).collect::<Result<_, _>>()?)),
            v @ Value::Object(_) => Ok(PointsSpec::Sampler(typed(v, "sampler")?)),
            _ => Err(D::Error::custom("points must be a list of {x, y} or a sampler object")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckId {
    StarClosedForms,
    InverseMetric,
    DifferenceTensor,
    Theorem31,
    Theorem32,
    Lemma32,
    #[serde(alias = "projective")]
    Theorem41,
    Geodesic,
    Homogeneity,
}

impl CheckId {
    pub const ALL: [CheckId; 9] = [
        CheckId::StarClosedForms,
        CheckId::InverseMetric,
        CheckId::DifferenceTensor,
        CheckId::Theorem31,
        CheckId::Theorem32,
        CheckId::Lemma32,
        CheckId::Theorem41,
        CheckId::Geodesic,
        CheckId::Homogeneity,
    ];

    pub fn id(self) -> &'static str {
        match self {
            CheckId::StarClosedForms => "star-closed-forms",
            CheckId::InverseMetric => "inverse-metric",
            CheckId::DifferenceTensor => "difference-tensor",
            CheckId::Theorem31 => "theorem31",
            CheckId::Theorem32 => "theorem32",
            CheckId::Lemma32 => "lemma32",
            CheckId::Theorem41 => "theorem41",
            CheckId::Geodesic => "geodesic",
            CheckId::Homogeneity => "homogeneity",
        }
    }

    pub fn needs_field(self) -> bool {
        matches!(self, CheckId::Theorem32 | CheckId::Geodesic)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Overrides the per-check relative thresholds when set.
    #[serde(default)]
    pub tol_rel: Option<f64>,
    /// Absolute level below which `b_{i|j}` and `ρ_k` count as zero.
    #[serde(default = "default_tol_abs")]
    pub tol_abs: f64,
    #[serde(default = "default_nonproj")]
    pub nonproj_threshold: f64,
}

fn default_tol_abs() -> f64 {
    crate::tolerance::DEFAULT_TOL_ABS
}

fn default_nonproj() -> f64 {
    crate::tolerance::NONPROJECTIVE
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { tol_rel: None, tol_abs: default_tol_abs(), nonproj_threshold: default_nonproj() }
    }
}

impl Tolerances {
    /// The threshold for a check whose pinned default is `pinned`.
    pub fn rel(&self, pinned: f64) -> f64 {
        self.tol_rel.unwrap_or(pinned)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeodesicOptions {
    pub steps: usize,
    pub dt: f64,
}

impl Default for GeodesicOptions {
    fn default() -> Self {
        GeodesicOptions { steps: 200, dt: 0.01 }
    }
}

/// Parses a scenario, reporting the field path and position of the first
/// error.
pub fn parse(src: &str) -> Result<Scenario, HarnessError> {
    let de = &mut serde_json::Deserializer::from_str(src);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        HarnessError::Parse(format!("line {}, column {}, field `{}`: {}", inner.line(), inner.column(), path, inner))
    })
}

/// A parsed scenario with its metrics resolved and cross-checked.
#[derive(Clone, Debug)]
pub struct Validated {
    pub scenario: Scenario,
    pub metrics: Vec<Metric>,
}

pub fn validate(scenario: Scenario) -> Result<Validated, HarnessError> {
    let invalid = |m: String| Err(HarnessError::Invalid(m));
    if scenario.metric.is_empty() {
        return invalid("at least one metric is required".into());
    }
    if scenario.checks.is_empty() {
        return invalid("at least one check is required".into());
    }
    let metrics = scenario
        .metric
        .iter()
        .enumerate()
        .map(|(k, m)| m.build().map_err(|e| HarnessError::Invalid(format!("metric {k}: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    for (k, m) in metrics.iter().enumerate() {
        let n = m.dim();
        match &scenario.hvector {
            HVectorInput::Spec(s) => s.validate(n).map_err(|e| HarnessError::Invalid(format!("h-vector for metric {k}: {e}")))?,
            HVectorInput::Generator(g) => {
                if g.c().len() > n {
                    return invalid(format!("generator c has {} entries but metric {k} has dimension {n}", g.c().len()));
                }
            }
        }
        match &scenario.points {
            PointsSpec::Explicit(pts) => {
                if pts.is_empty() {
                    return invalid("explicit point list is empty".into());
                }
                for (i, p) in pts.iter().enumerate() {
                    if p.x.len() != n || p.y.len() != n {
                        return invalid(format!("point {i} does not have dimension {n} (metric {k})"));
                    }
                }
            }
            PointsSpec::Sampler(s) => {
                if s.count == 0 {
                    return invalid("sampler count must be positive".into());
                }
                for a in 0..n {
                    match s.bounds.interval(a) {
                        Some([lo, hi]) if lo <= hi && lo.is_finite() && hi.is_finite() => {}
                        _ => return invalid(format!("sampler box has no valid interval for axis {a} (metric {k})")),
                    }
                }
            }
        }
    }
    if let Some(c) = scenario.checks.iter().find(|c| c.needs_field()) {
        if !matches!(&scenario.hvector, HVectorInput::Spec(s) if s.is_field()) {
            return invalid(format!("check {} needs a field-mode h-vector", c.id()));
        }
    }
    let t = &scenario.tolerances;
    if t.tol_rel.is_some_and(|v| !(v > 0.0)) || !(t.tol_abs >= 0.0) || !(t.nonproj_threshold > 0.0) {
        return invalid("tolerances must be positive".into());
    }
    if !(scenario.geodesic.dt > 0.0) || scenario.geodesic.steps == 0 {
        return invalid("geodesic options need dt > 0 and steps > 0".into());
    }
    Ok(Validated { scenario, metrics })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_generator_and_sampler() {
        let s = parse(
            r#"{"metric": [{"kind": "euclidean", "dim": 2}, {"kind": "catalog", "name": "randers", "dim": 3}],
                "hvector": {"generator": "random", "seed": 3},
                "points": {"count": 4, "box": [-0.5, 0.5]},
                "checks": ["star-closed-forms", "projective"]}"#,
        )
        .unwrap();
        assert_eq!(s.metric.len(), 2);
        assert!(matches!(s.hvector, HVectorInput::Generator(Generator::Random { seed: Some(3), .. })));
        assert_eq!(s.checks[1], CheckId::Theorem41);
        assert!(validate(s).is_ok());
    }

    #[test]
    fn error_names_field_and_line() {
        let err = parse("{\"metric\": {\"kind\": \"euclidean\", \"dim\": 2},\n \"hvector\": {\"mode\": \"pointwise\", \"b\": [1, 0], \"rh\": 1},\n \"points\": [], \"checks\": []}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2") && msg.contains("hvector") && msg.contains("rh"), "{msg}");
    }

    #[test]
    fn field_checks_need_field_mode() {
        let s = parse(r#"{"metric": {"kind": "euclidean", "dim": 2}, "hvector": {"generator": "zero-bcov"}, "points": [{"x": [0, 0], "y": [1, 0]}], "checks": ["geodesic"]}"#).unwrap();
        assert!(matches!(validate(s), Err(HarnessError::Invalid(m)) if m.contains("geodesic")));
    }
}
