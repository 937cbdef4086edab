//! The difference tensor `D^i_jk = *F^i_jk − F^i_jk` between the Cartan
//! connections of the base and the transformed space.
//!
//! `D` is assembled in three stages, `D^i_00`, then `D^i_0j`, then `D^i_jk`,
//! each one by solving a pair of systems `*L_ir A^r = B_i`, `*L_r A^r = B`
//! in closed form. Every stage is plugged back into its systems before the
//! next stage consumes it.
//!
//! The expansion of `∂_k *L_ij` carries the h-covariant derivative
//! `m_{j|k} = b_{j|k} − β_k l_j / L` of `m_j`; the terms it contributes are
//! included in `G_ij` and `H_jik` (they vanish when `b_{i|j} = 0`).

use serde::Serialize;

use crate::basegeom::{BaseGeometry, ConnectionData};
use crate::error::{Error, Result};
use crate::hvector::HVectorState;
use crate::kropina::{change_scalars, ChangeScalars, StarGeometry};
use crate::tensor::{Components, Matrix, Symmetry, Tensor3, Vector};
use crate::tolerance::{rel_residual, PLUG_BACK};

/// Closed-form solver of `*L_ir A^r = B_i`, `*L_r A^r = B`.
#[derive(Clone, Debug)]
pub struct StarSystem<'a> {
    base: &'a BaseGeometry,
    h: &'a HVectorState,
    s: ChangeScalars,
    /// `(2τ²b²/β − ρτ²/L)^{-1}`
    inv: f64,
}

impl<'a> StarSystem<'a> {
    pub fn new(base: &'a BaseGeometry, h: &'a HVectorState) -> Result<Self> {
        let s = change_scalars(base, h)?;
        let inv = base.l_val / (s.tau * s.tau * s.den);
        Ok(StarSystem { base, h, s, inv })
    }

    pub fn scalars(&self) -> &ChangeScalars {
        &self.s
    }

    /// `A^i = L/(2τ−ρτ²) B^i + l^i {B/τ + τ B_β κ} − 2τ²/(2−ρτ) m^i B_β κ`
    /// with `κ = (2τ²b²/β − ρτ²/L)^{-1}`.
    pub fn solve(&self, b_i: &Vector, b: f64) -> Vector {
        let (base, h, s) = (self.base, self.h, &self.s);
        let b_up = base.raise(b_i);
        let b_beta = b_i.dot(&h.b_up);
        let head = base.l_val / s.k1;
        let along_l = b / s.tau + s.tau * b_beta * self.inv;
        let along_m = 2.0 * s.tau * s.tau / s.two_m_rt * b_beta * self.inv;
        Vector::from_fn(base.n, |i| head * b_up[i] + base.l_up[i] * along_l - h.m_up[i] * along_m)
    }

    /// Relative plug-back residuals of systems (i) and (ii).
    pub fn plug_back(star: &StarGeometry, a: &Vector, b_i: &Vector, b: f64) -> (f64, f64) {
        let la = star.l_ij.mul_vec(a);
        let scale_i = b_i.max_abs().max(star.l_ij.max_abs() * a.max_abs());
        let r_i = rel_residual(la.sub(b_i).max_abs(), scale_i);
        let lb = star.l.dot(a);
        let scale_ii = b.abs().max(star.l.max_abs() * a.max_abs());
        (r_i, rel_residual((lb - b).abs(), scale_ii))
    }
}

/// Solves the pair of systems and verifies the result by plug-back.
pub fn solve_star_system(base: &BaseGeometry, h: &HVectorState, star: &StarGeometry, b_i: &Vector, b: f64) -> Result<Vector> {
    let sys = StarSystem::new(base, h)?;
    let a = sys.solve(b_i, b);
    let (r1, r2) = StarSystem::plug_back(star, &a, b_i, b);
    let residual = r1.max(r2);
    if !(residual <= PLUG_BACK) {
        return Err(Error::StageResidual { stage: "lemma", residual, tol: PLUG_BACK });
    }
    Ok(a)
}

#[derive(Clone, Debug, Serialize)]
pub struct Residual {
    pub name: &'static str,
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct DiffTensor {
    pub d00: Vector,
    /// `D^i_0j`, row `i`.
    pub d0j: Matrix,
    /// `D^i_jk`, symmetric in the last two slots.
    pub djk: Tensor3,
    pub g_ij: Matrix,
    pub g_j: Vector,
    /// `H_jik` stored as `[j][i][k]`.
    pub h_jik: Tensor3,
    pub h_ik: Matrix,
    pub f_i0: Vector,
    pub f_beta0: f64,
    /// `max |H_jik − H_jki|` before symmetrization.
    pub h_asymmetry: f64,
}

impl DiffTensor {
    pub fn max_abs(&self) -> f64 {
        self.djk.max_abs().max(self.d0j.max_abs()).max(self.d00.max_abs())
    }
}

/// Accumulates a sum of tensor terms and the largest term magnitude.
struct Acc {
    sum: Vec<f64>,
    scale: f64,
}

impl Acc {
    fn new(len: usize) -> Self {
        Acc { sum: vec![0.0; len], scale: 0.0 }
    }

    fn add<C: Components>(mut self, term: &C, c: f64) -> Self {
        let t = term.components();
        for (s, v) in self.sum.iter_mut().zip(t.iter()) {
            *s += c * v;
            self.scale = self.scale.max((c * v).abs());
        }
        self
    }

    fn rel(&self) -> f64 {
        rel_residual(self.sum.iter().fold(0.0f64, |m, v| m.max(v.abs())), self.scale)
    }
}

/// `SQ_ijr = S_(ijr) m_i {(ρτ−1) L_jr − (τ/β) m_j b_r}` (totally symmetric).
fn sq(base: &BaseGeometry, h: &HVectorState, s: &ChangeScalars) -> Tensor3 {
    let (m, b, lij) = (&h.m, &h.b, &base.l_ij);
    let a = s.rho * s.tau - 1.0;
    let c = s.tau / s.beta;
    Tensor3::from_fn(base.n, Symmetry::Full, |i, j, r| {
        a * (m[i] * lij.get(j, r) + m[j] * lij.get(r, i) + m[r] * lij.get(i, j))
            - c * (m[i] * m[j] * b[r] + m[j] * m[r] * b[i] + m[r] * m[i] * b[j])
    })
}

/// `M_ij = (ρτ−1) L_ij − (3τ/β) m_i m_j`
fn m_ij(base: &BaseGeometry, h: &HVectorState, s: &ChangeScalars) -> Matrix {
    let m = &h.m;
    Matrix::symmetric_from_fn(base.n, |i, j| (s.rho * s.tau - 1.0) * base.l_ij.get(i, j) - 3.0 * s.tau / s.beta * m[i] * m[j])
}

/// `X_ijk = −(2τ²/β)(m_i m_{j|k} + m_j m_{i|k})`
fn x_term(base: &BaseGeometry, h: &HVectorState, s: &ChangeScalars) -> Tensor3 {
    let mc = h.m_cov(base);
    let c = -2.0 * s.tau * s.tau / s.beta;
    let m = &h.m;
    Tensor3::from_fn(base.n, Symmetry::None, |i, j, k| c * (m[i] * mc.get(j, k) + m[j] * mc.get(i, k)))
}

fn contract3(t: &Tensor3, v: &Vector) -> Matrix {
    t.contract_last(v)
}

/// Right-hand sides of the `D^i_00` systems.
fn d00_sources(base: &BaseGeometry, h: &HVectorState, s: &ChangeScalars) -> (Vector, f64) {
    let t2 = s.tau * s.tau;
    let f_i0 = h.f_i0(&base.y);
    let b_i = Vector::from_fn(base.n, |i| 2.0 * t2 / s.beta * h.beta_0 * h.m[i] - 2.0 * t2 * f_i0[i]);
    (b_i, -t2 * h.e00(&base.y))
}

/// `D^i_00` in the explicit three-term form.
pub fn d00_explicit(base: &BaseGeometry, h: &HVectorState) -> Result<Vector> {
    let s = change_scalars(base, h)?;
    let y = &base.y;
    let f_up = base.raise(&h.f_i0(y));
    let kappa = 1.0 / (2.0 * s.b_sq / s.beta - s.rho / s.l_val);
    let q = (2.0 / s.beta * h.beta_0 * s.m_sq - 2.0 * h.f_beta0(y)) * kappa;
    let e00 = h.e00(y);
    let t = s.tau;
    Ok(Vector::from_fn(base.n, |i| {
        base.l_up[i] * t * (q - e00) - 2.0 * t * t / s.two_m_rt * q * h.m_up[i]
            + 2.0 * s.l_val * t / s.two_m_rt * (h.beta_0 / s.beta * h.m_up[i] - f_up[i])
    }))
}

fn check_stage(stage: &'static str, residuals: &[f64]) -> Result<()> {
    let residual = residuals.iter().fold(0.0f64, |m, &v| m.max(v));
    if !(residual <= PLUG_BACK) {
        return Err(Error::StageResidual { stage, residual, tol: PLUG_BACK });
    }
    Ok(())
}

/// Stage one: `*L_ir D^r_00 = (2τ²/β) β_0 m_i − 2τ² F_i0`,
/// `*L_r D^r_00 = −τ² E_00`.
pub fn d00(base: &BaseGeometry, h: &HVectorState, star: &StarGeometry) -> Result<Vector> {
    let sys = StarSystem::new(base, h)?;
    let (b_i, b) = d00_sources(base, h, sys.scalars());
    let d = sys.solve(&b_i, b);
    let (r1, r2) = StarSystem::plug_back(star, &d, &b_i, b);
    check_stage("D00", &[r1, r2])?;
    Ok(d)
}

/// `G_ij` and `G_j = τ²(F_j0 − E_j0)`.
pub fn g_sources(base: &BaseGeometry, h: &HVectorState, s: &ChangeScalars, d00: &Vector) -> (Matrix, Vector) {
    let n = base.n;
    let y = &base.y;
    let (t, beta) = (s.tau, s.beta);
    let t2 = t * t;
    let (m, bj) = (&h.m, &h.beta_j);
    let l3d = contract3(&base.l_ijk, d00);
    let sqd = contract3(&sq(base, h, s), d00);
    let mm = m_ij(base, h, s);
    let mc = h.m_cov(base);
    let mu = mc.mul_vec(y);
    let g_ij = Matrix::from_fn(n, |i, j| {
        t2 / beta * (m[i] * bj[j] - m[j] * bj[i])
            - t2 * h.f.get(i, j)
            - 0.5 * s.k1 * l3d.get(i, j)
            - 0.5 * t2 * h.rho_0 * base.l_ij.get(i, j)
            - t / beta * sqd.get(i, j)
            + t / beta * h.beta_0 * mm.get(i, j)
            + t2 / beta * (m[i] * mu[j] + m[j] * mu[i])
    });
    let f_i0 = h.f_i0(y);
    let e_i0 = h.e.mul_vec(y);
    let g_j = Vector::from_fn(n, |j| t2 * (f_i0[j] - e_i0[j]));
    (g_ij, g_j)
}

/// Stage two: `*L_ir D^r_0j = G_ij`, `*L_r D^r_0j = G_j`.
pub fn d0j(base: &BaseGeometry, h: &HVectorState, star: &StarGeometry, d00: &Vector) -> Result<(Matrix, Matrix, Vector)> {
    let n = base.n;
    let sys = StarSystem::new(base, h)?;
    let (g_ij, g_j) = g_sources(base, h, sys.scalars(), d00);
    let cols: Vec<Vector> = (0..n).map(|j| sys.solve(&g_ij.column(j), g_j[j])).collect();
    let d = Matrix::from_fn(n, |i, j| cols[j][i]);
    let mut res = Vec::with_capacity(2 * n);
    for (j, col) in cols.iter().enumerate() {
        let (r1, r2) = StarSystem::plug_back(star, col, &g_ij.column(j), g_j[j]);
        res.push(r1);
        res.push(r2);
    }
    check_stage("D0j", &res)?;
    Ok((d, g_ij, g_j))
}

/// `H_jik` (stored `[j][i][k]`) and `H_ik`.
pub fn h_sources(base: &BaseGeometry, h: &HVectorState, s: &ChangeScalars, d0j: &Matrix, g_ij: &Matrix) -> (Tensor3, Matrix) {
    let n = base.n;
    let (t, beta) = (s.tau, s.beta);
    let t2 = t * t;
    let (m, bj, rk) = (&h.m, &h.beta_j, &h.rho_k);
    // contractions with D^r_0k over the last slot r
    let l3 = Tensor3::<f64>::from_fn(n, Symmetry::None, |i, j, k| (0..n).map(|r| base.l_ijk.get(i, j, r) * d0j.get(r, k)).sum::<f64>());
    let sqt = sq(base, h, s);
    let sq3 = Tensor3::<f64>::from_fn(n, Symmetry::None, |i, j, k| (0..n).map(|r| sqt.get(i, j, r) * d0j.get(r, k)).sum::<f64>());
    let mm = m_ij(base, h, s);
    let x = x_term(base, h, s);
    let h_jik = Tensor3::from_fn(n, Symmetry::None, |j, i, k| {
        let t1 = l3.get(i, j, k) + l3.get(j, k, i) - l3.get(k, i, j);
        let t5 = bj[k] * mm.get(i, j) + bj[i] * mm.get(j, k) - bj[j] * mm.get(k, i);
        let t6 = rk[k] * base.l_ij.get(i, j) + rk[i] * base.l_ij.get(j, k) - rk[j] * base.l_ij.get(k, i);
        let xc = x.get(i, j, k) + x.get(j, k, i) - x.get(k, i, j);
        0.5 * (s.rho * t2 - 2.0 * t) * t1 - t / beta * sq3.get(i, j, k) - t / beta * sq3.get(j, k, i) + t / beta * sq3.get(k, i, j)
            - 0.5 * t2 * t6
            + t / beta * t5
            - 0.5 * xc
    });
    let h_ik =
        Matrix::from_fn(n, |i, k| t2 / beta * (m[i] * bj[k] + m[k] * bj[i]) - t2 * h.e.get(i, k) - 0.5 * (g_ij.get(i, k) + g_ij.get(k, i)));
    (h_jik, h_ik)
}

/// Stage three: `*L_rj D^r_ik = H_jik`, `*L_r D^r_ik = H_ik`.
pub fn djk(
    base: &BaseGeometry,
    h: &HVectorState,
    star: &StarGeometry,
    d0j: &Matrix,
    g_ij: &Matrix,
) -> Result<(Tensor3, Tensor3, Matrix, f64)> {
    let n = base.n;
    let sys = StarSystem::new(base, h)?;
    let (h_raw, h_ik_raw) = h_sources(base, h, sys.scalars(), d0j, g_ij);
    let mut asym = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            for k in 0..n {
                asym = asym.max((h_raw.get(j, i, k) - h_raw.get(j, k, i)).abs());
            }
        }
    }
    let h_jik = Tensor3::from_fn(n, Symmetry::LastTwo, |j, i, k| 0.5 * (h_raw.get(j, i, k) + h_raw.get(j, k, i)));
    let h_ik = h_ik_raw.symmetric_part();
    let mut d = Tensor3::zeros(n, Symmetry::LastTwo);
    let mut res = Vec::new();
    for i in 0..n {
        for k in i..n {
            let b_j = Vector::from_fn(n, |j| h_jik.get(j, i, k));
            let a = sys.solve(&b_j, h_ik.get(i, k));
            let (r1, r2) = StarSystem::plug_back(star, &a, &b_j, h_ik.get(i, k));
            res.push(r1);
            res.push(r2);
            for r in 0..n {
                d.set(r, i, k, a[r]);
            }
        }
    }
    check_stage("Djk", &res)?;
    Ok((d, h_jik, h_ik, asym))
}

/// Runs the three stages.
pub fn difference_tensor(base: &BaseGeometry, h: &HVectorState, star: &StarGeometry) -> Result<DiffTensor> {
    let d00v = d00(base, h, star)?;
    let (d0jm, g_ij, g_j) = d0j(base, h, star, &d00v)?;
    let (djkt, h_jik, h_ik, h_asymmetry) = djk(base, h, star, &d0jm, &g_ij)?;
    Ok(DiffTensor {
        d00: d00v,
        d0j: d0jm,
        djk: djkt,
        g_ij,
        g_j,
        h_jik,
        h_ik,
        f_i0: h.f_i0(&base.y),
        f_beta0: h.f_beta0(&base.y),
        h_asymmetry,
    })
}

/// Residuals of every defining and derived equation for a given `D`.
pub fn residuals(base: &BaseGeometry, h: &HVectorState, star: &StarGeometry, d: &DiffTensor) -> Result<Vec<Residual>> {
    let n = base.n;
    let s = change_scalars(base, h)?;
    let y = &base.y;
    let (t, beta) = (s.tau, s.beta);
    let t2 = t * t;
    let (m, bj, b) = (&h.m, &h.beta_j, &h.b);
    let (sl, slij) = (&star.l, &star.l_ij);
    let dt = &d.djk;
    // D^r_0j recomputed from D^r_ij so that every residual tests the full tensor
    let d0 = Matrix::from_fn(n, |r, j| (0..n).map(|i| y[i] * dt.get(r, i, j)).sum());
    let d00 = d0.mul_vec(y);
    let sum_r = |f: &dyn Fn(usize) -> f64| (0..n).map(f).sum::<f64>();
    let mut out = Vec::new();
    let mut push = |name: &'static str, value: f64| out.push(Residual { name, value });

    // defining system for *F − F (first derivative of *L_i)
    let star_d = Matrix::from_fn(n, |i, j| sum_r(&|r| sl[r] * dt.get(r, i, j)));
    let lij_d0 = slij.matmul(&d0);
    let mb = Matrix::from_fn(n, |i, j| m[i] * bj[j]);
    let r35 = Acc::new(n * n).add(&star_d, 1.0).add(&lij_d0, 1.0).add(&mb, -2.0 * t2 / beta).add(&h.bcov, t2);
    push("eq_first_derivative", r35.rel());

    // defining system (second derivative of *L_ij), with the m_{j|k} terms
    let ld0 = Tensor3::from_fn(n, Symmetry::None, |i, j, k| sum_r(&|r| base.l_ijk.get(i, j, r) * d0.get(r, k)));
    let ld = Tensor3::from_fn(n, Symmetry::None, |i, j, k| {
        sum_r(&|r| base.l_ij.get(r, j) * dt.get(r, i, k) + base.l_ij.get(i, r) * dt.get(r, j, k))
    });
    let md = Tensor3::from_fn(n, Symmetry::None, |i, j, k| sum_r(&|r| m[r] * (m[j] * dt.get(r, i, k) + m[i] * dt.get(r, j, k))));
    let mmb = Tensor3::from_fn(n, Symmetry::None, |i, j, k| {
        sum_r(&|r| (m[i] * m[j] * b[r] + m[j] * m[r] * b[i] + m[r] * m[i] * b[j]) * d0.get(r, k))
    });
    let lb = Tensor3::from_fn(n, Symmetry::None, |i, j, k| bj[k] * base.l_ij.get(i, j));
    let lmd = Tensor3::from_fn(n, Symmetry::None, |i, j, k| {
        sum_r(&|r| (base.l_ij.get(j, r) * m[i] + base.l_ij.get(i, r) * m[j] + base.l_ij.get(i, j) * m[r]) * d0.get(r, k))
    });
    let bmm = Tensor3::from_fn(n, Symmetry::None, |i, j, k| bj[k] * m[i] * m[j]);
    let rl = Tensor3::from_fn(n, Symmetry::None, |i, j, k| h.rho_k[k] * base.l_ij.get(i, j));
    let x = x_term(base, h, &s);
    let r37 = Acc::new(n * n * n)
        .add(&ld0, s.k1)
        .add(&ld, s.k1)
        .add(&md, 2.0 * t2 / beta)
        .add(&mmb, -2.0 * t2 / (beta * beta))
        .add(&lb, 2.0 * t / beta - 2.0 * s.rho * t2 / beta)
        .add(&lmd, 2.0 * t2 / beta * (s.rho - 1.0 / t))
        .add(&bmm, 6.0 * t2 / (beta * beta))
        .add(&rl, t2)
        .add(&x, 1.0);
    push("eq_second_derivative", r37.rel());

    // symmetric and antisymmetric parts
    let lij_d0_t = lij_d0.transpose();
    let mb_t = mb.transpose();
    let r312 = Acc::new(n * n)
        .add(&star_d, 2.0)
        .add(&lij_d0, 1.0)
        .add(&lij_d0_t, 1.0)
        .add(&mb, -2.0 * t2 / beta)
        .add(&mb_t, -2.0 * t2 / beta)
        .add(&h.e, 2.0 * t2);
    push("eq_symmetric_part", r312.rel());
    let r313 =
        Acc::new(n * n).add(&lij_d0, 1.0).add(&lij_d0_t, -1.0).add(&mb, -2.0 * t2 / beta).add(&mb_t, 2.0 * t2 / beta).add(&h.f, 2.0 * t2);
    push("eq_antisymmetric_part", r313.rel());

    // y-contractions
    let sl_d0 = d0.vec_mul(sl);
    let e_i0 = h.e.mul_vec(y);
    let r315 = Acc::new(n).add(&sl_d0, 2.0).add(&slij.mul_vec(&d00), 1.0).add(m, -2.0 * t2 / beta * h.beta_0).add(&e_i0, 2.0 * t2);
    push("eq_contracted_symmetric", r315.rel());
    let (b_i, b00) = d00_sources(base, h, &s);
    let r316 = Acc::new(n).add(&slij.mul_vec(&d00), 1.0).add(&b_i, -1.0);
    push("eq_d00_first", r316.rel());
    let r318 = Acc::new(1).add(&sl.dot(&d00), 1.0).add(&b00, -1.0);
    push("eq_d00_second", r318.rel());
    let r320 = Acc::new(n * n).add(&lij_d0, 1.0).add(&d.g_ij, -1.0);
    push("eq_d0j_first", r320.rel());
    let r322 = Acc::new(n).add(&sl_d0, 1.0).add(&d.g_j, -1.0);
    push("eq_d0j_second", r322.rel());
    let ld = Tensor3::from_fn(n, Symmetry::None, |j, i, k| sum_r(&|r| slij.get(r, j) * dt.get(r, i, k)));
    let r325 = Acc::new(n * n * n).add(&ld, 1.0).add(&d.h_jik, -1.0);
    push("eq_djk_first", r325.rel());
    let r326 = Acc::new(n * n).add(&star_d, 1.0).add(&d.h_ik, -1.0);
    push("eq_djk_second", r326.rel());

    let c1 = Acc::new(n).add(&d.d0j.mul_vec(y), 1.0).add(&d.d00, -1.0);
    push("contraction_d0j_y", c1.rel());
    let c2 = Acc::new(n * n).add(&d0, 1.0).add(&d.d0j, -1.0);
    push("contraction_djk_y", c2.rel());
    let mut asym = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                asym = asym.max((dt.get(i, j, k) - dt.get(i, k, j)).abs());
            }
        }
    }
    push("djk_symmetry", rel_residual(asym, dt.max_abs()));
    let explicit = d00_explicit(base, h)?;
    let ex = Acc::new(n).add(&explicit, 1.0).add(&d.d00, -1.0);
    push("d00_explicit_vs_lemma", ex.rel());
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct Theorem31Outcome {
    pub hypothesis: bool,
    pub max_d: f64,
    pub bcov_norm: f64,
    pub rho_k_norm: f64,
    pub pass: bool,
    /// `D ≈ 0` observed while `b_{i|j} ≠ 0`.
    pub converse_flag: bool,
    pub message: String,
}

/// Parallel `b` (and constant `ρ`) forces identical Cartan connections.
pub fn theorem31_check(h: &HVectorState, d: &DiffTensor, zero_tol: f64, d_tol: f64) -> Theorem31Outcome {
    let bcov_norm = h.bcov.max_abs();
    let rho_k_norm = h.rho_k.max_abs();
    let max_d = d.max_abs();
    let hypothesis = bcov_norm <= zero_tol && rho_k_norm <= zero_tol;
    let converse_flag = max_d < d_tol && !hypothesis;
    let (pass, message) = if hypothesis {
        (max_d < d_tol, format!("b parallel: max |D| = {max_d:e}"))
    } else if bcov_norm <= zero_tol {
        (true, format!("hypothesis violated: rho_k = {rho_k_norm:e} with b_i|j = 0; max |D| = {max_d:e}"))
    } else {
        (true, format!("b not parallel (max |b_i|j| = {bcov_norm:e}); max |D| = {max_d:e}"))
    };
    Theorem31Outcome { hypothesis, max_d, bcov_norm, rho_k_norm, pass, converse_flag, message }
}

/// Connection data of the transformed space assembled from `D`.
#[derive(Clone, Debug)]
pub struct StarConnection {
    pub spray: Vector,
    pub n: Matrix,
    pub cartan: Tensor3,
}

pub fn star_connections(conn: &ConnectionData, d: &DiffTensor) -> StarConnection {
    StarConnection { spray: conn.spray.add(&d.d00.scale(0.5)), n: conn.n.add(&d.d0j), cartan: conn.cartan.add(&d.djk) }
}

impl StarConnection {
    /// `max |*N^i_j y^j − 2 *G^i|` relative to `|*G|`.
    pub fn contraction_residual(&self, y: &Vector) -> f64 {
        let r = self.n.mul_vec(y).sub(&self.spray.scale(2.0)).max_abs();
        rel_residual(r, self.spray.max_abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basegeom::base_objects;
    use crate::hvector::{build_state, HVectorSpec};
    use crate::kropina::star_closed_form;
    use crate::metric::MetricSpec;

    fn setup(bcov: Vec<Vec<f64>>, rho_grad: Vec<f64>) -> (BaseGeometry, HVectorState, StarGeometry) {
        let m = MetricSpec::catalog("randers", 3).unwrap().build().unwrap();
        let base = base_objects(&m, &Vector::from(vec![0.1, -0.2, 0.3]), &Vector::from(vec![1.0, 0.4, -0.3])).unwrap();
        let spec = HVectorSpec::Pointwise { b: vec![0.9, 0.3, -0.1], bcov, rho: 0.4, rho_grad };
        let st = build_state(&base, None, &spec).unwrap();
        let star = star_closed_form(&base, &st).unwrap();
        (base, st, star)
    }

    #[test]
    fn parallel_h_vector_gives_zero_d() {
        let (base, st, star) = setup(vec![], vec![]);
        let d = difference_tensor(&base, &st, &star).unwrap();
        assert!(d.max_abs() < 1e-14);
        let t = theorem31_check(&st, &d, 1e-12, 1e-9);
        assert!(t.hypothesis && t.pass);
    }

    #[test]
    fn generic_instance_residuals() {
        let bcov = vec![vec![0.3, -0.2, 0.1], vec![0.5, 0.2, -0.4], vec![0.05, 0.3, -0.1]];
        let (base, st, star) = setup(bcov, vec![0.1, -0.2, 0.05]);
        let d = difference_tensor(&base, &st, &star).unwrap();
        assert!(d.max_abs() > 1e-3);
        for r in residuals(&base, &st, &star, &d).unwrap() {
            assert!(r.value < 1e-10, "{} = {:e}", r.name, r.value);
        }
    }

    #[test]
    fn zero_sources_give_zero_solution() {
        let (base, st, star) = setup(vec![], vec![]);
        let a = solve_star_system(&base, &st, &star, &Vector::zeros(3), 0.0).unwrap();
        assert_eq!(a.max_abs(), 0.0);
    }

    #[test]
    fn inconsistent_sources_fail_plug_back() {
        let (base, st, star) = setup(vec![], vec![]);
        // y^i B_i must vanish for (i) to be solvable
        let r = solve_star_system(&base, &st, &star, &base.l.clone(), 0.0);
        assert!(matches!(r, Err(Error::StageResidual { .. })));
    }

    #[test]
    fn rho_gradient_alone_breaks_hypothesis() {
        let (base, st, star) = setup(vec![], vec![0.2, 0.0, 0.0]);
        let d = difference_tensor(&base, &st, &star).unwrap();
        assert!(d.max_abs() > 1e-3);
        let t = theorem31_check(&st, &d, 1e-12, 1e-9);
        assert!(!t.hypothesis && t.message.contains("hypothesis violated"));
    }
}
