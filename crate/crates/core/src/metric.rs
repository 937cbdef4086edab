//! Metric definitions: the fundamental function `L(x, y)` of the base space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jet::{JetBundle, JetVars, ScalarField};
use crate::scalar::{Scalar, MAX_DIM};

/// A monomial `coef * Π (x^a)^pow[a]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coef: f64,
    #[serde(default)]
    pub pow: Vec<u32>,
}

/// A polynomial in `x`, written either as a bare constant or as a term list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Poly {
    Const(f64),
    Terms(Vec<Term>),
}

impl Poly {
    fn check(&self, n: usize) -> Result<()> {
        if let Poly::Terms(ts) = self {
            for t in ts {
                if t.pow.len() > n {
                    return Err(Error::Dimension { expected: n, got: t.pow.len() });
                }
            }
        }
        Ok(())
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Poly::Const(_) => true,
            Poly::Terms(ts) => ts.iter().all(|t| t.pow.iter().all(|&p| p == 0)),
        }
    }

    pub fn eval<T: Scalar>(&self, vars: &JetVars<T>) -> JetBundle<T> {
        match self {
            Poly::Const(c) => vars.constant(*c),
            Poly::Terms(ts) => {
                let mut acc = vars.constant(0.0);
                for t in ts {
                    let mut m = vars.constant(t.coef);
                    for (a, &p) in t.pow.iter().enumerate() {
                        for _ in 0..p {
                            m = m.mul(&vars.x[a]);
                        }
                    }
                    acc = acc.add(&m);
                }
                acc
            }
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Poly::Const(c) => *c,
            Poly::Terms(ts) => {
                ts.iter().map(|t| t.coef * t.pow.iter().enumerate().map(|(a, &p)| x[a].powi(p as i32)).product::<f64>()).sum()
            }
        }
    }
}

impl From<f64> for Poly {
    fn from(c: f64) -> Self {
        Poly::Const(c)
    }
}

/// Metric definition as it appears in a scenario file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MetricSpec {
    Euclidean { dim: usize },
    Riemannian { a: Vec<Vec<Poly>> },
    Randers { a: Vec<Vec<Poly>>, c: Vec<Poly> },
    Expression { dim: usize, expr: Expr },
    Catalog { name: String, dim: usize },
}

/// Names accepted by `{"kind": "catalog"}`.
pub const CATALOG: &[(&str, &str)] = &[
    ("euclidean", "flat metric |y|"),
    ("riemannian", "a_ii = 1 + (x^i)^2/2, a_i,i+1 = x^i x^(i+1)/5"),
    ("randers", "riemannian catalog metric plus c = (3/10 + x^2/10, x^1/10, ...)"),
    ("riemannian-warped", "a = diag(1, 1 + (x^3)^2, 1, ...), needs dim >= 3; dx^1 is parallel"),
    ("randers-minkowski", "x-independent Randers metric with a_ij = delta_ij + 1/5 (i != j adjacent), c = (1/4, 1/10, 0, ...)"),
];

fn check_n(n: usize) -> Result<()> {
    if !(2..=MAX_DIM).contains(&n) {
        return Err(Error::UnsupportedDimension(n));
    }
    Ok(())
}

fn poly(coef: f64, pow: Vec<u32>) -> Poly {
    Poly::Terms(vec![Term { coef, pow }])
}

fn unit_pow(n: usize, a: usize, p: u32) -> Vec<u32> {
    let mut v = vec![0; n];
    v[a] = p;
    v
}

fn catalog(name: &str, n: usize) -> Result<MetricSpec> {
    check_n(n)?;
    let spec = match name {
        "euclidean" => MetricSpec::Euclidean { dim: n },
        "riemannian" | "randers" => {
            let a = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            if i == j {
                                Poly::Terms(vec![Term { coef: 1.0, pow: vec![] }, Term { coef: 0.5, pow: unit_pow(n, i, 2) }])
                            } else if i.abs_diff(j) == 1 {
                                let mut p = vec![0; n];
                                p[i] = 1;
                                p[j] = 1;
                                poly(0.2, p)
                            } else {
                                Poly::Const(0.0)
                            }
                        })
                        .collect()
                })
                .collect();
            if name == "riemannian" {
                MetricSpec::Riemannian { a }
            } else {
                let c = (0..n)
                    .map(|i| {
                        if i == 0 {
                            Poly::Terms(vec![Term { coef: 0.3, pow: vec![] }, Term { coef: 0.1, pow: unit_pow(n, 1, 1) }])
                        } else {
                            poly(0.1, unit_pow(n, 0, 1))
                        }
                    })
                    .collect();
                MetricSpec::Randers { a, c }
            }
        }
        "riemannian-warped" => {
            if n < 3 {
                return Err(Error::UnsupportedDimension(n));
            }
            let a = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| match (i == j, i) {
                            (true, 1) => Poly::Terms(vec![Term { coef: 1.0, pow: vec![] }, Term { coef: 1.0, pow: unit_pow(n, 2, 2) }]),
                            (true, _) => Poly::Const(1.0),
                            _ => Poly::Const(0.0),
                        })
                        .collect()
                })
                .collect();
            MetricSpec::Riemannian { a }
        }
        "randers-minkowski" => {
            let a = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            Poly::Const(if i == j {
                                1.0
                            } else if i.abs_diff(j) == 1 {
                                0.2
                            } else {
                                0.0
                            })
                        })
                        .collect()
                })
                .collect();
            let c = (0..n).map(|i| Poly::Const([0.25, 0.1].get(i).copied().unwrap_or(0.0))).collect();
            MetricSpec::Randers { a, c }
        }
        other => return Err(Error::Expression(format!("unknown catalog metric '{other}'"))),
    };
    Ok(spec)
}

impl MetricSpec {
    pub fn catalog(name: &str, dim: usize) -> Result<MetricSpec> {
        catalog(name, dim)
    }

    /// Validates and resolves the spec into an evaluable metric.
    pub fn build(&self) -> Result<Metric> {
        match self {
            MetricSpec::Euclidean { dim } => {
                check_n(*dim)?;
                Ok(Metric { n: *dim, kind: Kind::Euclidean, label: "euclidean".into() })
            }
            MetricSpec::Riemannian { a } => {
                let n = check_table(a)?;
                Ok(Metric { n, kind: Kind::Riemannian { a: a.clone() }, label: "riemannian".into() })
            }
            MetricSpec::Randers { a, c } => {
                let n = check_table(a)?;
                if c.len() != n {
                    return Err(Error::Dimension { expected: n, got: c.len() });
                }
                for p in c {
                    p.check(n)?;
                }
                Ok(Metric { n, kind: Kind::Randers { a: a.clone(), c: c.clone() }, label: "randers".into() })
            }
            MetricSpec::Expression { dim, expr } => {
                check_n(*dim)?;
                expr.check_dim(*dim)?;
                Ok(Metric { n: *dim, kind: Kind::Expression(expr.clone()), label: "expression".into() })
            }
            MetricSpec::Catalog { name, dim } => {
                let mut m = catalog(name, *dim)?.build()?;
                m.label = name.clone();
                Ok(m)
            }
        }
    }
}

fn check_table(a: &[Vec<Poly>]) -> Result<usize> {
    let n = a.len();
    check_n(n)?;
    for (i, row) in a.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Dimension { expected: n, got: row.len() });
        }
        for (j, p) in row.iter().enumerate() {
            p.check(n)?;
            if a[j][i] != *p {
                return Err(Error::Expression(format!("metric table a is not symmetric at ({}, {})", i + 1, j + 1)));
            }
        }
    }
    Ok(n)
}

#[derive(Clone, Debug)]
enum Kind {
    Euclidean,
    Riemannian { a: Vec<Vec<Poly>> },
    Randers { a: Vec<Vec<Poly>>, c: Vec<Poly> },
    Expression(Expr),
}

/// A validated metric, evaluable on jets.
#[derive(Clone, Debug)]
pub struct Metric {
    n: usize,
    kind: Kind,
    label: String,
}

impl Metric {
    pub fn label(&self) -> &str {
        &self.label
    }

    /// Whether `L` does not depend on `x` at all.
    pub fn is_x_independent(&self) -> bool {
        match &self.kind {
            Kind::Euclidean => true,
            Kind::Riemannian { a } => a.iter().flatten().all(Poly::is_constant),
            Kind::Randers { a, c } => a.iter().flatten().chain(c.iter()).all(Poly::is_constant),
            Kind::Expression(e) => !expr_uses_x(e),
        }
    }

    /// The Riemannian part `a_ij(x)` when the metric has one.
    pub fn riemannian_table(&self, x: &[f64]) -> Option<Vec<Vec<f64>>> {
        let tab = |a: &Vec<Vec<Poly>>| a.iter().map(|r| r.iter().map(|p| p.value(x)).collect()).collect();
        match &self.kind {
            Kind::Euclidean => Some((0..self.n).map(|i| (0..self.n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()),
            Kind::Riemannian { a } | Kind::Randers { a, .. } => Some(tab(a)),
            Kind::Expression(_) => None,
        }
    }

    /// The Randers one-form `c_i(x)` (zero for the other kinds).
    pub fn randers_form(&self, x: &[f64]) -> Option<Vec<f64>> {
        match &self.kind {
            Kind::Randers { c, .. } => Some(c.iter().map(|p| p.value(x)).collect()),
            _ => None,
        }
    }

    pub fn is_riemannian(&self) -> bool {
        matches!(self.kind, Kind::Euclidean | Kind::Riemannian { .. })
    }
}

fn expr_uses_x(e: &Expr) -> bool {
    match e {
        Expr::Add(v) | Expr::Mul(v) => v.iter().any(expr_uses_x),
        Expr::Pow(b, _) => expr_uses_x(b),
        Expr::X(_) => true,
        Expr::Y(_) | Expr::Const(_) => false,
    }
}

fn quadratic<T: Scalar>(a: &[Vec<Poly>], vars: &JetVars<T>) -> JetBundle<T> {
    let n = a.len();
    let mut acc = vars.constant(0.0);
    for i in 0..n {
        for j in i..n {
            let mut t = a[i][j].eval(vars).mul(&vars.y[i]).mul(&vars.y[j]);
            if i != j {
                t = t.scale(T::from_f64(2.0));
            }
            acc = acc.add(&t);
        }
    }
    acc
}

impl ScalarField for Metric {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval<T: Scalar>(&self, vars: &JetVars<T>) -> Result<JetBundle<T>> {
        match &self.kind {
            Kind::Euclidean => {
                let mut acc = vars.constant(0.0);
                for y in &vars.y {
                    acc = acc.add(&y.mul(y));
                }
                acc.sqrt()
            }
            Kind::Riemannian { a } => quadratic(a, vars).sqrt(),
            Kind::Randers { a, c } => {
                let mut l = quadratic(a, vars).sqrt()?;
                for (ci, yi) in c.iter().zip(&vars.y) {
                    l = l.add(&ci.eval(vars).mul(yi));
                }
                Ok(l)
            }
            Kind::Expression(e) => e.eval(vars),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_metrics_build() {
        for (name, _) in CATALOG {
            let m = MetricSpec::catalog(name, 3).unwrap().build().unwrap();
            assert_eq!(m.dim(), 3);
        }
        assert!(MetricSpec::catalog("riemannian-warped", 2).is_err());
        assert!(MetricSpec::catalog("nope", 2).is_err());
    }

    #[test]
    fn json_forms() {
        let s = r#"{"kind": "riemannian", "a": [[[{"coef": 1.0}, {"coef": 1.0, "pow": [2]}], 0.0], [0.0, 1.0]]}"#;
        let m: MetricSpec = serde_json::from_str(s).unwrap();
        let m = m.build().unwrap();
        assert_eq!(m.riemannian_table(&[1.0, 0.0]).unwrap(), vec![vec![2.0, 0.0], vec![0.0, 1.0]]);
        let s = r#"{"kind": "expression", "dim": 2, "expr": "(pow (+ (* (y 1) (y 1)) (* (y 2) (y 2))) 1/2)"}"#;
        assert!(serde_json::from_str::<MetricSpec>(s).unwrap().build().is_ok());
    }

    #[test]
    fn asymmetric_table_rejected() {
        let m = MetricSpec::Riemannian { a: vec![vec![1.0.into(), 0.1.into()], vec![0.0.into(), 1.0.into()]] };
        assert!(m.build().is_err());
    }

    #[test]
    fn dimension_limits() {
        assert!(matches!(MetricSpec::Euclidean { dim: 7 }.build(), Err(Error::UnsupportedDimension(7))));
        assert!(MetricSpec::Euclidean { dim: 1 }.build().is_err());
    }
}
