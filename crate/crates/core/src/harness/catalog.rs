use std::fmt::Write;

use super::scenario::CheckId;
use crate::metric::CATALOG;

/// Scenarios shipped with the tool, by name.
pub const BUNDLED: &[(&str, &str)] = &[
    ("theorem31", include_str!("../../scenarios/theorem31.scn")),
    ("star-forms", include_str!("../../scenarios/star-forms.scn")),
    ("difference-tensor", include_str!("../../scenarios/difference-tensor.scn")),
    ("projective", include_str!("../../scenarios/projective.scn")),
    ("nonprojective", include_str!("../../scenarios/nonprojective.scn")),
    ("geodesic", include_str!("../../scenarios/geodesic.scn")),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

const GENERATORS: &[(&str, &str)] = &[
    ("zero-bcov", "b = rho l + c with b_i|j = 0 and rho_k = 0"),
    ("random", "b = rho l + c with uniform random b_i|j and rho_k"),
    ("projective-constructed", "random symmetric part, antisymmetric part making the change projective"),
];

const CHECK_NOTES: [&str; 9] = [
    "closed-form transformed objects vs differentiation of L^2/beta",
    "transformed inverse metric: identity, dense and rank-one routes",
    "three-stage difference tensor and its defining equations",
    "parallel h-vector gives identical Cartan connections",
    "parallel h-vector gives identical Berwald connections (field mode)",
    "a gradient h-vector has constant rho",
    "projective-change criterion (alias: projective)",
    "spray collinearity along an integrated geodesic (field mode)",
    "degrees of homogeneity and structural identities",
];

pub fn list_catalog() -> String {
    let mut s = String::new();
    writeln!(s, "metrics (kind \"catalog\"):").unwrap();
    for (name, desc) in CATALOG {
        writeln!(s, "  {name:<24} {desc}").unwrap();
    }
    writeln!(s, "metric kinds: euclidean, riemannian, randers, expression, catalog").unwrap();
    writeln!(s, "h-vector modes: pointwise, field").unwrap();
    writeln!(s, "h-vector generators:").unwrap();
    for (name, desc) in GENERATORS {
        writeln!(s, "  {name:<24} {desc}").unwrap();
    }
    writeln!(s, "checks:").unwrap();
    for (c, desc) in CheckId::ALL.iter().zip(CHECK_NOTES) {
        writeln!(s, "  {:<24} {desc}", c.id()).unwrap();
    }
    writeln!(s, "bundled scenarios:").unwrap();
    for (name, _) in BUNDLED {
        writeln!(s, "  {name}").unwrap();
    }
    s
}
