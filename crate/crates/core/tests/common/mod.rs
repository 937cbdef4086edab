//! Shared fixtures for integration tests.
#![allow(dead_code)]

use kropina_lab::expr::Expr;
use kropina_lab::hvector::{HVectorSpec, KropinaField};
use kropina_lab::jet::{JetBundle, JetVars, ScalarField};
use kropina_lab::metric::{Metric, MetricSpec};
use kropina_lab::{Result, Scalar, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn v(x: &[f64]) -> Vector {
    Vector::from(x.to_vec())
}

pub fn catalog(name: &str, n: usize) -> Metric {
    MetricSpec::catalog(name, n).unwrap().build().unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_vec(rng: &mut ChaCha8Rng, n: usize, s: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-s..s)).collect()
}

pub fn uniform_mat(rng: &mut ChaCha8Rng, n: usize, s: f64) -> Vec<Vec<f64>> {
    (0..n).map(|_| uniform_vec(rng, n, s)).collect()
}

/// `*L = L² / (ρ(x) L + c_i(x) y^i)` with affine `c` and `ρ`, written out
/// independently of the library's own transformed field.
pub struct AffineKropina<'a> {
    pub metric: &'a Metric,
    pub c0: Vec<f64>,
    /// `∂_j c_i`, row `i`.
    pub dc: Vec<Vec<f64>>,
    pub rho0: f64,
    pub drho: Vec<f64>,
}

impl AffineKropina<'_> {
    pub fn constant(metric: &Metric, c0: Vec<f64>, rho0: f64) -> AffineKropina<'_> {
        let n = metric.dim();
        AffineKropina { metric, c0, dc: vec![vec![0.0; n]; n], rho0, drho: vec![0.0; n] }
    }

    fn affine(c: f64, d: &[f64]) -> Expr {
        let mut s = format!("(+ (const {c:?})");
        for (j, a) in d.iter().enumerate() {
            s += &format!(" (* (const {a:?}) (x {}))", j + 1);
        }
        s += ")";
        Expr::parse(&s).unwrap()
    }

    /// The same h-vector as a field-mode spec for the library.
    pub fn spec(&self) -> HVectorSpec {
        HVectorSpec::Field {
            c: self.c0.iter().zip(&self.dc).map(|(c, d)| Self::affine(*c, d)).collect(),
            rho: Self::affine(self.rho0, &self.drho),
        }
    }

    pub fn library_field(&self) -> KropinaField {
        KropinaField::new(self.metric.clone(), &self.spec()).unwrap()
    }

    fn affine_jet<T: Scalar>(vars: &JetVars<T>, c: f64, d: &[f64]) -> JetBundle<T> {
        let mut acc = vars.constant(c);
        for (j, a) in d.iter().enumerate() {
            acc = acc.add(&vars.x[j].scale(T::from_f64(*a)));
        }
        acc
    }
}

impl ScalarField for AffineKropina<'_> {
    fn dim(&self) -> usize {
        self.metric.dim()
    }

    fn eval<T: Scalar>(&self, vars: &JetVars<T>) -> Result<JetBundle<T>> {
        let l = self.metric.eval(vars)?;
        let mut beta = Self::affine_jet(vars, self.rho0, &self.drho).mul(&l);
        for i in 0..self.dim() {
            beta = beta.add(&Self::affine_jet(vars, self.c0[i], &self.dc[i]).mul(&vars.y[i]));
        }
        l.mul(&l).div(&beta)
    }
}

/// Uniform point of the box `[-s, s]^n` and a unit `y` with `c·y + ρ|y|`
/// comfortably positive for the given `c`, `ρ` (Euclidean norms).
pub fn cone_point(rng: &mut ChaCha8Rng, n: usize, s: f64, c: &[f64], rho: f64) -> (Vector, Vector) {
    loop {
        let x = uniform_vec(rng, n, s);
        let mut y = uniform_vec(rng, n, 1.0);
        let norm = y.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm < 1e-3 {
            continue;
        }
        y.iter_mut().for_each(|a| *a /= norm);
        let beta = rho + c.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>();
        if beta > 0.3 {
            return (v(&x), v(&y));
        }
    }
}
