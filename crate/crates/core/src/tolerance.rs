//! Scale-aware tolerances.
//!
//! A quantity is "zero" when it is below `abs + rel * scale`, where `scale`
//! is the magnitude of the largest term entering the expression. Relative
//! residuals are reported as `diff / max(scale, abs / rel)` so that a check
//! with threshold `t` passes iff `diff <= t * max(scale, abs / rel)`.

use serde::{Deserialize, Serialize};

pub const DEFAULT_TOL_ABS: f64 = 1e-12;
pub const DEFAULT_TOL_REL: f64 = 1e-9;

/// Scale below which relative residuals are taken against an absolute floor.
pub const SCALE_FLOOR: f64 = DEFAULT_TOL_ABS / DEFAULT_TOL_REL;

/// Exact-identity checks (rank-one inverse, round-trips).
pub const EXACT: f64 = 1e-10;
/// Closed form vs. differentiation oracle.
pub const CLOSED_FORM: f64 = 1e-8;
/// Plug-back into a linear system that was solved in closed form.
pub const PLUG_BACK: f64 = 1e-9;
/// Metricity of the Cartan connection.
pub const METRICITY: f64 = 1e-8;
/// Geodesic-level collinearity (integration tolerance).
pub const GEODESIC: f64 = 1e-6;
/// Threshold above which an instance is declared non-projective.
pub const NONPROJECTIVE: f64 = 1e-3;

/// Guard on the dimensionless scalars `2 - rho tau` and `2 b^2 tau - rho`.
pub const CHANGE_GUARD: f64 = 1e-10;
/// Guard on `1 + n_k n^k` in a rank-one update.
pub const UPDATE_GUARD: f64 = 1e-12;
/// Minimal `beta / L`.
pub const BETA_MIN: f64 = 1e-8;
/// Minimal `|rho|`.
pub const RHO_MIN: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { rel: DEFAULT_TOL_REL, abs: DEFAULT_TOL_ABS }
    }
}

impl Tolerance {
    pub fn new(rel: f64, abs: f64) -> Self {
        Tolerance { rel, abs }
    }

    pub fn is_zero(&self, value: f64, scale: f64) -> bool {
        value.abs() <= self.abs + self.rel * scale.abs()
    }

    pub fn floor(&self) -> f64 {
        if self.rel > 0.0 {
            self.abs / self.rel
        } else {
            SCALE_FLOOR
        }
    }
}

/// `diff / max(scale, SCALE_FLOOR)`.
pub fn rel_residual(diff: f64, scale: f64) -> f64 {
    diff / scale.abs().max(SCALE_FLOOR)
}

/// Max-norm relative residual between a computed list and a reference list.
pub fn rel_diff(computed: &[f64], reference: &[f64]) -> f64 {
    let diff = crate::tensor::max_abs_diff(computed, reference);
    let scale = reference.iter().chain(computed.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
    rel_residual(diff, scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_applies_for_tiny_scales() {
        assert_eq!(rel_residual(1e-15, 0.0), 1e-12);
        assert_eq!(rel_residual(1e-9, 10.0), 1e-10);
    }

    #[test]
    fn zero_check_is_scale_aware() {
        let t = Tolerance::default();
        assert!(t.is_zero(5e-10, 1.0));
        assert!(!t.is_zero(5e-10, 0.1));
    }
}
