use kropina_lab::expr::Expr;
use kropina_lab::hvector::{HVectorSpec, KropinaField};
use kropina_lab::metric::MetricSpec;
use kropina_lab::projective::geodesic_compare;
use kropina_lab::Vector;

fn field(metric: &str, n: usize, c: &[&str], rho: &str) -> (KropinaField, HVectorSpec) {
    let spec = HVectorSpec::Field { c: c.iter().map(|s| Expr::parse(s).unwrap()).collect(), rho: Expr::parse(rho).unwrap() };
    let m = MetricSpec::catalog(metric, n).unwrap().build().unwrap();
    (KropinaField::new(m, &spec).unwrap(), spec)
}

#[test]
fn warped_base_with_parallel_h_vector_stays_projective() {
    let (kf, spec) = field("riemannian-warped", 3, &["(const 0.9)", "(const 0)", "(const 0)"], "(const 0.35)");
    let r = geodesic_compare(&kf, &spec, &Vector::from(vec![0.0, 0.1, 0.2]), &Vector::from(vec![1.0, 0.3, 0.4]), 200, 0.01).unwrap();
    assert!(r.projective_pass(), "{r:?}");
    assert!(r.max_spray_gap < 1e-8, "{r:?}");
    // the path is not a straight line
    assert!((r.end_y[1] - 0.3).abs() > 1e-3);
}

#[test]
fn varying_h_vector_is_detected_along_the_path() {
    let (kf, spec) = field(
        "riemannian",
        3,
        &["(+ (const 0.8) (* (const 0.3) (x 2)))", "(* (const 0.2) (x 3))", "(const 0.1)"],
        "(+ (const 0.4) (* (const 0.2) (x 1)))",
    );
    let r = geodesic_compare(&kf, &spec, &Vector::from(vec![0.1, 0.0, -0.1]), &Vector::from(vec![1.0, 0.2, 0.1]), 200, 0.005).unwrap();
    assert!(r.max_defect > 1e-3, "{r:?}");
    assert!(r.max_spray_gap < 1e-8, "{r:?}");
    assert!(r.endpoint_gap < 1e-6, "{r:?}");
}

#[test]
fn leaving_the_cone_is_a_domain_exit() {
    let (kf, spec) = field("euclidean", 2, &["(const 1)", "(const 0)"], "(const 0.2)");
    // β = 0.2 L + y^1 turns negative for y = (−1, 0)
    let r = geodesic_compare(&kf, &spec, &Vector::from(vec![0.0, 0.0]), &Vector::from(vec![-1.0, 0.0]), 10, 0.1);
    assert!(matches!(r, Err(kropina_lab::Error::DomainExit { step: 0, .. })), "{r:?}");
}
