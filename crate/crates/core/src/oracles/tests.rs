use std::sync::Arc;

use proptest::prelude::*;

use super::*;
use crate::geometry::{distance, MaxOf, SquaredDistance, Affine, ConvexFn};

fn v(xs: &[f64]) -> Vector {
    Vector::from_vec(xs.to_vec())
}

fn disk_sublevel() -> SetDescription {
    SetDescription::sublevel(
        Arc::new(SquaredDistance { center: v(&[0.0, 0.0]), offset: -1.0 }),
        0.0,
        v(&[0.0, 0.0]),
    )
    .unwrap()
}

fn box_as_max() -> SetDescription {
    let terms: Vec<ConvexFn> = vec![
        Arc::new(Affine { a: v(&[1.0, 0.0]), b: -1.0 }),
        Arc::new(Affine { a: v(&[-1.0, 0.0]), b: -1.0 }),
        Arc::new(Affine { a: v(&[0.0, 1.0]), b: -1.0 }),
        Arc::new(Affine { a: v(&[0.0, -1.0]), b: -1.0 }),
    ];
    SetDescription::sublevel(Arc::new(MaxOf::new(terms)), 0.0, v(&[0.0, 0.0])).unwrap()
}

#[test]
fn closed_form_route_has_zero_certificate() {
    let ball = SetDescription::ball(v(&[0.0, 0.0]), 1.0).unwrap();
    let r = approx_project(&ball, &v(&[2.0, 0.0]), &ProjectorConfig::with_eps(1e-6)).unwrap();
    assert!((&r.point - v(&[1.0, 0.0])).norm() < 1e-3);
    assert_eq!(r.certified_eps, 0.0);
    assert_eq!(r.method, Method::Exact);
}

#[test]
fn interior_points_short_circuit() {
    let ball = SetDescription::ball(v(&[0.0, 0.0]), 1.0).unwrap();
    let x = v(&[0.2, -0.3]);
    for m in [Method::Auto, Method::FrankWolfe, Method::CuttingPlane] {
        let r = approx_project_with(&ball, &x, &ProjectorConfig::with_eps(1e-6), m).unwrap();
        assert_eq!(r.point, x);
        assert_eq!(r.certified_eps, 0.0);
        assert_eq!(r.iterations, 0);
    }
}

#[test]
fn sublevel_disk_projection() {
    let x = v(&[0.0, 2.0]);
    let r = approx_project(&disk_sublevel(), &x, &ProjectorConfig::with_eps(1e-4)).unwrap();
    assert_eq!(r.method, Method::CuttingPlane);
    assert!(residual(&disk_sublevel(), &r.point) <= 1e-10);
    assert!((&x - &r.point).norm_squared() <= 1.0 + 1e-4);
    assert!(r.certified_eps <= 1e-4);
    assert!((&r.point - v(&[0.0, 1.0])).norm() <= 1e-2);
}

#[test]
fn frank_wolfe_on_ball_matches_exact() {
    let ball = SetDescription::ball(v(&[0.0, 0.0]), 1.0).unwrap();
    let lmo = SetLmo::new(&ball).unwrap();
    let x = v(&[2.0, 0.0]);
    let r = frank_wolfe_project(&lmo, &x, &lmo.default_start(), &ProjectorConfig::with_eps(1e-6)).unwrap();
    assert!((&r.point - v(&[1.0, 0.0])).norm_squared() <= 1e-6);
    assert!(r.certified_eps <= 1e-6);
    assert!(residual(&ball, &r.point) <= 1e-12);
}

#[test]
fn frank_wolfe_from_interior_target_stops_immediately() {
    let ball = SetDescription::ball(v(&[0.0, 0.0]), 1.0).unwrap();
    let lmo = SetLmo::new(&ball).unwrap();
    let x = v(&[0.1, 0.1]);
    let r = frank_wolfe_project(&lmo, &x, &x, &ProjectorConfig::with_eps(1e-6)).unwrap();
    assert_eq!(r.iterations, 0);
    assert_eq!(r.point, x);
}

#[test]
fn frank_wolfe_on_box_matches_clamp() {
    let b = SetDescription::boxed(v(&[-1.0, -1.0]), v(&[1.0, 1.0])).unwrap();
    let lmo = SetLmo::new(&b).unwrap();
    let x = v(&[3.0, 0.5]);
    let r = frank_wolfe_project(&lmo, &x, &lmo.default_start(), &ProjectorConfig::with_eps(1e-6)).unwrap();
    let exact = v(&[1.0, 0.5]);
    assert!((&x - &r.point).norm_squared() <= (&x - &exact).norm_squared() + r.certified_eps);
    assert!((&r.point - &exact).norm() <= 1e-3);
    assert!(residual(&b, &r.point) <= 1e-12);
}

#[test]
fn frank_wolfe_needs_bounded_set() {
    let h = SetDescription::halfspace(v(&[1.0, 0.0]), 0.0).unwrap();
    assert_eq!(SetLmo::new(&h).unwrap_err(), OracleError::UnsupportedKind("halfspace"));
    let r = approx_project_with(&h, &v(&[-1.0, 0.0]), &ProjectorConfig::default(), Method::FrankWolfe);
    assert_eq!(r.unwrap_err(), OracleError::UnsupportedKind("halfspace"));
}

#[test]
fn budget_exhaustion_keeps_feasible_point_and_certificate() {
    let b = SetDescription::boxed(v(&[-1.0, -1.0]), v(&[1.0, 1.0])).unwrap();
    let cfg = ProjectorConfig { eps: 1e-14, max_iter: 3, feas_tol: 1e-12 };
    let x = v(&[3.0, 0.3]);
    let err = approx_project_with(&b, &x, &cfg, Method::FrankWolfe).unwrap_err();
    let r = err.partial_result().expect("partial result");
    assert!(!r.converged);
    assert!(residual(&b, &r.point) <= 1e-12);
    let exact = exact_project(&b, &x).unwrap();
    assert!((&x - &r.point).norm_squared() <= (&x - &exact).norm_squared() + r.certified_eps);
}

#[test]
fn separation_oracle_examples() {
    let s = disk_sublevel();
    assert_eq!(separation_oracle(&s, &v(&[0.0, 0.5])).unwrap(), Separation::Member);
    let Separation::Hyperplane { normal, offset } = separation_oracle(&s, &v(&[0.0, 2.0])).unwrap() else {
        panic!("expected a cut")
    };
    assert_eq!(normal, v(&[0.0, 4.0]));
    assert_eq!(offset, 5.0);
    // Slater point (0, 0) satisfies the cut
    assert!(normal.dot(&v(&[0.0, 0.0])) <= offset);
}

#[test]
fn zero_subgradient_is_reported() {
    #[derive(Debug)]
    struct Broken;
    impl crate::geometry::ConvexFunction for Broken {
        fn eval(&self, x: &Vector) -> f64 {
            x[0] - 1.0
        }
        fn subgradient(&self, x: &Vector) -> Vector {
            Vector::zeros(x.len())
        }
    }
    let s = SetDescription::sublevel(Arc::new(Broken), 0.0, v(&[0.0])).unwrap();
    assert_eq!(separation_oracle(&s, &v(&[2.0])).unwrap_err(), OracleError::ZeroSubgradient);
    assert_eq!(
        cutting_plane_project(&s, &v(&[2.0]), &ProjectorConfig::default()).unwrap_err(),
        OracleError::ZeroSubgradient
    );
}

#[test]
fn separation_requires_sublevel() {
    let ball = SetDescription::ball(v(&[0.0]), 1.0).unwrap();
    assert_eq!(separation_oracle(&ball, &v(&[3.0])).unwrap_err(), OracleError::UnsupportedKind("ball"));
}

#[test]
fn cutting_plane_examples() {
    let cfg = ProjectorConfig::with_eps(1e-4);
    let r = cutting_plane_project(&disk_sublevel(), &v(&[0.0, 2.0]), &cfg).unwrap();
    assert!((&r.point - v(&[0.0, 1.0])).norm() <= 1e-2);
    assert!(r.certified_eps <= 1e-4);

    let inside = v(&[0.1, 0.2]);
    let r = cutting_plane_project(&disk_sublevel(), &inside, &cfg).unwrap();
    assert_eq!((r.point, r.certified_eps, r.iterations), (inside, 0.0, 0));

    let r = cutting_plane_project(&box_as_max(), &v(&[3.0, 0.0]), &cfg).unwrap();
    assert!((&r.point - v(&[1.0, 0.0])).norm() <= 1e-6);
}

#[test]
fn cutting_plane_lower_bounds_never_exceed_true_distance() {
    let set = disk_sublevel();
    let x = v(&[1.3, -2.1]);
    let d2 = (x.norm() - 1.0).powi(2);
    let (r, trace) = cutting_plane_project_traced(&set, &x, &ProjectorConfig::with_eps(1e-12));
    let r = r.unwrap();
    assert!(!trace.is_empty());
    for lb in &trace {
        assert!(*lb <= d2 + 1e-12, "lower bound {lb} > {d2}");
    }
    assert!((&x - &r.point).norm_squared() <= d2 + r.certified_eps);
}

#[test]
fn invalid_config_is_rejected() {
    let ball = SetDescription::ball(v(&[0.0]), 1.0).unwrap();
    let bad = ProjectorConfig { eps: 0.0, ..ProjectorConfig::default() };
    assert!(matches!(approx_project(&ball, &v(&[2.0]), &bad), Err(OracleError::InvalidConfig(_))));
    let bad = ProjectorConfig { max_iter: 0, ..ProjectorConfig::default() };
    assert!(matches!(approx_project(&ball, &v(&[2.0]), &bad), Err(OracleError::InvalidConfig(_))));
}

#[test]
fn approximate_projections_converge_to_exact_projection() {
    // eps_n = 4^-n, x_n -> x
    let ball = SetDescription::ball(v(&[0.0, 0.0]), 1.0).unwrap().with_regularity(crate::geometry::Regularity::ProxRegular(5.0));
    let x = v(&[1.5, 1.0]);
    let target = exact_project(&ball, &x).unwrap();
    let mut errs = Vec::new();
    for n in 1..=20 {
        let eps = 4f64.powi(-n);
        let xn = &x + v(&[0.0, 1.0]) * 2f64.powi(-n);
        let r = approx_project_with(&ball, &xn, &ProjectorConfig::with_eps(eps), Method::CuttingPlane).unwrap();
        errs.push((&r.point - &target).norm());
    }
    for n in 5..errs.len() {
        assert!(errs[n] <= errs[n - 5], "{errs:?}");
    }
    assert!(*errs.last().unwrap() <= 1e-4);
}

fn closed_form_set() -> impl Strategy<Value = SetDescription> {
    let pt = prop::collection::vec(-3.0..3.0f64, 2);
    prop_oneof![
        (pt.clone(), 0.1..3.0f64).prop_map(|(c, r)| SetDescription::ball(Vector::from_vec(c), r).unwrap()),
        (pt.clone(), prop::collection::vec(0.05..2.0f64, 2)).prop_map(|(lo, w)| {
            let lo = Vector::from_vec(lo);
            let hi = &lo + Vector::from_vec(w);
            SetDescription::boxed(lo, hi).unwrap()
        }),
        (pt.clone(), -2.0..2.0f64)
            .prop_filter("nonzero normal", |(a, _)| a[0].abs() + a[1].abs() > 1e-2)
            .prop_map(|(a, c)| SetDescription::halfspace(Vector::from_vec(a), c).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn certificates_are_sound(
        set in closed_form_set(),
        x in prop::collection::vec(-6.0..6.0f64, 2).prop_map(Vector::from_vec),
        log_eps in -8.0..-2.0f64,
        route in 0usize..3,
    ) {
        let method = [Method::Exact, Method::FrankWolfe, Method::CuttingPlane][route];
        let eps = 10f64.powf(log_eps);
        let cfg = ProjectorConfig { eps, max_iter: 100_000, feas_tol: 1e-12 };
        let r = match approx_project_with(&set, &x, &cfg, method) {
            Ok(r) => r,
            Err(OracleError::UnsupportedKind(_)) => return Ok(()),
            // vanilla FW is sublinear on box faces; the partial result must still be sound
            Err(OracleError::BudgetExhausted(r)) if method == Method::FrankWolfe => *r,
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        let exact = exact_project(&set, &x).unwrap();
        prop_assert!(residual(&set, &r.point) <= 1e-12);
        prop_assert_eq!(r.converged, r.certified_eps <= eps);
        prop_assert!((&x - &r.point).norm_squared() <= (&x - &exact).norm_squared() + r.certified_eps);
        let d = distance(&set, &x).unwrap().value;
        prop_assert!((&x - &r.point).norm_squared() <= d * d + r.certified_eps + 1e-12);
    }
}

#[test]
fn anchored_start_converges_on_box_faces() {
    let b = SetDescription::boxed(v(&[0.0, 0.0]), v(&[1.0, 1.0])).unwrap();
    let x = v(&[0.3, 5.0]);
    let lmo = SetLmo::new(&b).unwrap();
    let cfg = ProjectorConfig { eps: 1e-12, max_iter: 100, feas_tol: 1e-12 };
    let r = frank_wolfe_project(&lmo, &x, &lmo.anchored_start(&x), &cfg).unwrap();
    assert!((r.point - v(&[0.3, 1.0])).norm() < 1e-6);
}
