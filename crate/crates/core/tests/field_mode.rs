//! The difference tensor against the Cartan connection of the transformed
//! metric computed directly from `*L = L²/β` by automatic differentiation.

use kropina_lab::basegeom::{base_objects, connection};
use kropina_lab::difftensor::{difference_tensor, residuals, star_connections};
use kropina_lab::expr::Expr;
use kropina_lab::hvector::{build_state, HVectorSpec, KropinaField};
use kropina_lab::kropina::star_closed_form;
use kropina_lab::metric::MetricSpec;
use kropina_lab::Vector;

fn field(metric: &str, n: usize, c: &[&str], rho: &str) -> (KropinaField, HVectorSpec) {
    let spec = HVectorSpec::Field { c: c.iter().map(|s| Expr::parse(s).unwrap()).collect(), rho: Expr::parse(rho).unwrap() };
    let m = MetricSpec::catalog(metric, n).unwrap().build().unwrap();
    (KropinaField::new(m, &spec).unwrap(), spec)
}

fn check(kf: &KropinaField, spec: &HVectorSpec, x: &[f64], y: &[f64]) -> f64 {
    let (x, y) = (Vector::from(x.to_vec()), Vector::from(y.to_vec()));
    let base = base_objects(&kf.metric, &x, &y).unwrap();
    let conn = connection(&kf.metric, &base).unwrap();
    let h = build_state(&base, Some(&conn), spec).unwrap();
    let star = star_closed_form(&base, &h).unwrap();
    let d = difference_tensor(&base, &h, &star).unwrap();
    for r in residuals(&base, &h, &star, &d).unwrap() {
        assert!(r.value < 1e-8, "{} = {:e}", r.name, r.value);
    }

    let sbase = base_objects(kf, &x, &y).unwrap();
    let sconn = connection(kf, &sbase).unwrap();
    let direct = sconn.cartan.sub(&conn.cartan);
    let scale = sconn.cartan.max_abs().max(1.0);
    let err = direct.sub(&d.djk).max_abs() / scale;
    assert!(err < 1e-8, "D vs *F - F: {err:e}");

    let assembled = star_connections(&conn, &d);
    assert!(assembled.spray.sub(&sconn.spray).max_abs() / scale < 1e-8);
    assert!(assembled.n.sub(&sconn.n).max_abs() / scale < 1e-8);
    assert!(assembled.contraction_residual(&y) < 1e-10);
    d.max_abs()
}

#[test]
fn riemannian_with_varying_h_vector() {
    let (kf, spec) = field(
        "riemannian",
        3,
        &["(+ (const 0.8) (* (const 0.2) (x 2)))", "(* (const 0.3) (x 1) (x 3))", "(const -0.1)"],
        "(+ (const 0.5) (* (const 0.1) (x 3)))",
    );
    let dmax = check(&kf, &spec, &[0.2, -0.1, 0.3], &[1.0, 0.3, -0.2]);
    assert!(dmax > 1e-3);
}

#[test]
fn randers_with_varying_h_vector() {
    let (kf, spec) = field("randers", 2, &["(+ (const 0.7) (* (const 0.1) (x 1) (x 2)))", "(* (const 0.2) (x 1))"], "(const 0.4)");
    check(&kf, &spec, &[0.3, 0.1], &[0.9, 0.2]);
}

#[test]
fn euclidean_with_constant_h_vector_has_zero_d() {
    let (kf, spec) = field("euclidean", 3, &["(const 0.6)", "(const 0.1)", "(const 0.2)"], "(const 0.5)");
    let dmax = check(&kf, &spec, &[0.0, 0.0, 0.0], &[1.0, 0.2, 0.1]);
    assert!(dmax < 1e-12);
}
