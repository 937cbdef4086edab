mod common;

use common::{catalog, cone_point, rng, uniform_mat, uniform_vec, v, AffineKropina};
use kropina_lab::linalg::{determinant, invert, solve};
use kropina_lab::tensor::Components;
use kropina_lab::tolerance::rel_diff;
use kropina_lab::{eval_jet, JetOrder, Matrix, Vector};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

const NAMES: [&str; 5] = ["euclidean", "riemannian", "randers", "riemannian-warped", "randers-minkowski"];

fn value(f: &AffineKropina, x: &[f64], y: &[f64]) -> f64 {
    eval_jet(f, &v(x), &v(y), JetOrder::Y1).unwrap().value
}

fn bumped(a: &[f64], i: usize, h: f64) -> Vec<f64> {
    let mut b = a.to_vec();
    b[i] += h;
    b
}

/// Richardson-extrapolated central difference of `f` along one coordinate.
fn diff(f: impl Fn(&[f64]) -> f64, at: &[f64], i: usize) -> f64 {
    let c = |h: f64| (f(&bumped(at, i, h)) - f(&bumped(at, i, -h))) / (2.0 * h);
    let h = 1e-3;
    (4.0 * c(h / 2.0) - c(h)) / 3.0
}

fn close(fd: f64, jet: f64) -> bool {
    (fd - jet).abs() < 1e-7 * (1.0 + jet.abs())
}

#[test]
fn jets_match_finite_differences() {
    let mut r = rng(21);
    for (k, name) in NAMES.iter().enumerate() {
        let n = 3 + k % 2;
        let metric = catalog(name, n);
        let mut c0 = uniform_vec(&mut r, n, 0.2);
        c0[0] = 0.9;
        let f = AffineKropina {
            metric: &metric,
            c0: c0.clone(),
            dc: uniform_mat(&mut r, n, 0.3),
            rho0: 0.4,
            drho: uniform_vec(&mut r, n, 0.2),
        };
        let (x, y) = cone_point(&mut r, n, 0.4, &c0, 0.4);
        let jet = eval_jet(&f, &x, &y, JetOrder::FULL).unwrap();
        let (xs, ys) = (x.as_slice(), y.as_slice());
        for i in 0..n {
            let dy = diff(|ys| value(&f, xs, ys), ys, i);
            let dx = diff(|xs| value(&f, xs, ys), xs, i);
            assert!(close(dy, jet.dy[i]), "{name} dy {i}: {dy} vs {}", jet.dy[i]);
            assert!(close(dx, jet.dx().unwrap()[i]), "{name} dx {i}");
            for j in 0..n {
                let dyy = diff(|ys| eval_jet(&f, &x, &v(ys), JetOrder::Y2).unwrap().dy[j], ys, i);
                assert!(close(dyy, jet.dydy().unwrap().get(i, j)), "{name} dydy {i}{j}");
                let dxy = diff(|xs| eval_jet(&f, &v(xs), &y, JetOrder::Y1).unwrap().dy[j], xs, i);
                assert!(close(dxy, jet.dxdy().unwrap().get(i, j)), "{name} dxdy {i}{j}");
                for l in 0..n {
                    let hess = |ys: &[f64]| eval_jet(&f, &x, &v(ys), JetOrder::Y2).unwrap().dydy().unwrap().get(i, j);
                    let d3 = diff(hess, ys, l);
                    assert!(close(d3, jet.dydydy().unwrap().get(i, j, l)), "{name} dydydy {i}{j}{l}");
                }
            }
        }
    }
}

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.dim(), m.dim(), |i, j| m.get(i, j))
}

#[test]
fn linalg_matches_dense_reference() {
    let mut r = rng(22);
    for k in 0..60 {
        let n = 1 + k % 5;
        let m = Matrix::from_rows(&uniform_mat(&mut r, n, 1.0)).add(&Matrix::identity(n).scale(0.3));
        let rhs = v(&uniform_vec(&mut r, n, 1.0));
        let na = to_na(&m);
        let det = na.determinant();
        assert!((determinant(&m) - det).abs() < 1e-12 * det.abs().max(1.0));
        let (inv, d) = invert(&m).unwrap();
        assert!((d - det).abs() < 1e-12 * det.abs().max(1.0));
        let want = na.clone().try_inverse().unwrap();
        assert!(rel_diff(&inv.components(), &Matrix::from_fn(n, |i, j| want[(i, j)]).components()) < 1e-10);
        let x = solve(&m, &rhs).unwrap();
        let xs = na.lu().solve(&DVector::from_column_slice(rhs.as_slice())).unwrap();
        assert!(rel_diff(x.as_slice(), xs.as_slice()) < 1e-10);
    }
}

#[test]
fn singular_matrix_is_an_error() {
    let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
    assert!(invert(&m).is_err());
}

fn direction(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n).prop_filter("cone", |y| y[0] > 0.4 && y.iter().map(|a| a * a).sum::<f64>() > 0.2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn star_l_is_positively_homogeneous(
        name in prop::sample::select(NAMES.to_vec()),
        y in direction(3),
        x in prop::collection::vec(-0.3f64..0.3, 3),
        lambda in 0.1f64..10.0,
    ) {
        let metric = catalog(name, 3);
        let f = AffineKropina::constant(&metric, vec![0.9, 0.1, -0.1], 0.3);
        let a = value(&f, &x, &y);
        let b = value(&f, &x, &y.iter().map(|t| t * lambda).collect::<Vec<_>>());
        prop_assert!((b - lambda * a).abs() <= 1e-12 * (lambda * a).abs());
        let jet = eval_jet(&f, &v(&x), &v(&y), JetOrder::Y3).unwrap();
        prop_assert!(jet.euler_residual(&Vector::from(y.clone()), 1.0).abs() < 1e-12);
    }

    #[test]
    fn metric_tensor_is_symmetric_positive(name in prop::sample::select(NAMES.to_vec()), y in direction(3)) {
        let metric = catalog(name, 3);
        let base = kropina_lab::basegeom::base_objects(&metric, &v(&[0.1, -0.2, 0.05]), &v(&y)).unwrap();
        prop_assert!(base.g.asymmetry() < 1e-14);
        let eig = to_na(&base.g).symmetric_eigenvalues();
        prop_assert!(eig.iter().all(|e| *e > 0.0));
        // g_ij y^i y^j = L²
        prop_assert!((base.g.quad(&base.y, &base.y) - base.l_val * base.l_val).abs() < 1e-12 * base.l_val * base.l_val);
    }
}
