use proptest::prelude::*;

use super::*;
use crate::geometry::SetDescription;
use crate::perturbation::Perturbation;

fn v(xs: &[f64]) -> Vector {
    Vector::from_vec(xs.to_vec())
}

fn zero_selection(dim: usize) -> Selection {
    Selection::new(Perturbation::zero(dim), 1e-8).unwrap()
}

fn dragging_interval() -> SweepingProblem {
    let base = SetDescription::boxed(v(&[0.0]), v(&[1.0])).unwrap();
    let set = MovingSet::Translating { base, velocity: v(&[1.0]) };
    SweepingProblem::new(set, zero_selection(1), v(&[0.0]), 1.0, SolveMode::ProxRegular(f64::INFINITY), SolverOptions::default())
        .unwrap()
}

fn interior_ode() -> SweepingProblem {
    let set = MovingSet::Fixed(SetDescription::ball(v(&[0.0, 0.0]), 10.0).unwrap());
    let sel = Selection::new(Perturbation::linear_decay(), 1e-8).unwrap();
    SweepingProblem::new(set, sel, v(&[1.0, 0.0]), 1.0, SolveMode::FixedSet, SolverOptions::default()).unwrap()
}

fn translating_halfspace() -> SweepingProblem {
    let base = SetDescription::halfspace(v(&[1.0, 0.0]), 0.0).unwrap();
    let set = MovingSet::Translating { base, velocity: v(&[1.0, 0.0]) };
    SweepingProblem::new(set, zero_selection(2), v(&[0.0, 0.0]), 1.0, SolveMode::ProxRegular(f64::INFINITY), SolverOptions::default())
        .unwrap()
}

fn translating_disk(method: Method) -> SweepingProblem {
    let base = SetDescription::ball(v(&[0.0, 0.0]), 1.0).unwrap();
    let set = MovingSet::Translating { base, velocity: v(&[1.0, 0.0]) };
    let options = SolverOptions { method, ..SolverOptions::default() };
    SweepingProblem::new(set, zero_selection(2), v(&[-1.0, 0.0]), 1.0, SolveMode::ProxRegular(f64::INFINITY), options)
        .unwrap()
}

#[test]
fn grid_maps() {
    let g = Grid::new(1.0, 10).unwrap();
    assert_eq!(g.node(3), 0.3);
    assert_eq!(g.node(10), 1.0);
    assert_eq!(g.delta(0.3), 0.3);
    assert_eq!(g.theta(0.3), g.node(4));
    assert_eq!(g.theta(1.0), 1.0);
    assert_eq!(g.delta(1.0), g.node(9));
    assert!(Grid::new(0.0, 3).is_err());
    assert!(Grid::new(1.0, 0).is_err());
}

proptest! {
    #[test]
    fn grid_maps_bracket_time(n in 1usize..500, horizon in 0.1..10.0f64, frac in 0.0..1.0f64) {
        let g = Grid::new(horizon, n).unwrap();
        let t = frac * horizon;
        prop_assert!(g.delta(t) <= t && t < g.theta(t));
        prop_assert!(((g.theta(t) - g.delta(t)) - g.mu()).abs() <= 1e-12 * horizon);
    }
}

#[test]
fn schedule_validation_and_constant() {
    assert!(EpsSchedule::new(1.0, 2.0).is_err());
    assert!(EpsSchedule::new(0.0, 3.0).is_err());
    let s = EpsSchedule::default();
    assert_eq!(s.eps(0.5), 0.125);
    assert_eq!(s.sup_ratio(1.0), 1.0);
    assert_eq!(EpsSchedule::new(4.0, 4.0).unwrap().sup_ratio(3.0), 6.0);
}

#[test]
fn problem_validation() {
    let ball = SetDescription::ball(v(&[0.0, 0.0]), 1.0).unwrap();
    let fixed = MovingSet::Fixed(ball.clone());
    let opts = SolverOptions::default();
    let err = SweepingProblem::new(fixed.clone(), zero_selection(2), v(&[2.0, 0.0]), 1.0, SolveMode::Subsmooth, opts);
    assert!(matches!(err, Err(SolverError::InvalidProblem(_))));
    let moving = MovingSet::Translating { base: ball, velocity: v(&[1.0, 0.0]) };
    let err = SweepingProblem::new(moving, zero_selection(2), v(&[0.0, 0.0]), 1.0, SolveMode::FixedSet, opts);
    assert!(matches!(err, Err(SolverError::InvalidProblem(_))));
    assert!(SweepingProblem::new(fixed, zero_selection(2), v(&[0.0, 0.0]), 1.0, SolveMode::FixedSet, opts).is_ok());
}

#[test]
fn step_examples() {
    let p = dragging_interval();
    let g = Grid::new(1.0, 8).unwrap();
    let (x, _, d) = step(&p, &g, 2, &v(&[g.node(2)]), 1e-6).unwrap();
    assert_eq!(x, v(&[g.node(3)]));
    assert!((d.predictor_distance - g.mu()).abs() < 1e-15);

    let p = interior_ode();
    let (x, i, d) = step(&p, &g, 0, &v(&[1.0, 0.0]), 1e-6).unwrap();
    assert_eq!(x, v(&[1.0, 0.0]) + i);
    assert_eq!(d.certified_eps, 0.0);
    assert_eq!(d.iterations, 0);

    let p = translating_halfspace();
    let (x, _, _) = step(&p, &g, 4, &v(&[g.node(4), 0.0]), 1e-6).unwrap();
    assert!((x - v(&[g.node(5), 0.0])).norm() < 1e-15);
}

#[test]
fn dragging_interval_is_exact_at_nodes() {
    let p = dragging_interval();
    let traj = solve(&p, 64, &EpsSchedule::default()).unwrap();
    for (k, x) in traj.nodes.iter().enumerate() {
        assert_eq!(x[0], traj.grid.node(k));
    }
    let k = 17;
    let mid = 0.5 * (traj.grid.node(k) + traj.grid.node(k + 1));
    let xm = traj.interpolate(mid).unwrap();
    assert!((xm[0] - 0.5 * (traj.nodes[k][0] + traj.nodes[k + 1][0])).abs() < 1e-12);
    let vel = traj.velocity(mid, None).unwrap();
    assert!((vel[0] - 1.0).abs() < 1e-12);
}

#[test]
fn interior_ode_matches_exponential() {
    let p = interior_ode();
    let traj = solve(&p, 1024, &EpsSchedule::default()).unwrap();
    let err = traj
        .nodes
        .iter()
        .enumerate()
        .map(|(k, x)| (x - v(&[(-traj.grid.node(k)).exp(), 0.0])).norm())
        .fold(0.0, f64::max);
    assert!(err <= 1e-2, "{err}");
    let t = traj.grid.node(100) + 0.5 * traj.grid.mu();
    let vel = traj.velocity(t, None).unwrap();
    assert!((vel + &traj.nodes[100]).norm() <= 2.0 * traj.grid.mu());
}

#[test]
fn translating_disk_with_frank_wolfe() {
    let p = translating_disk(Method::FrankWolfe);
    let traj = solve(&p, 512, &EpsSchedule::default()).unwrap();
    let err = traj
        .nodes
        .iter()
        .enumerate()
        .map(|(k, x)| (x - v(&[traj.grid.node(k) - 1.0, 0.0])).norm())
        .fold(0.0, f64::max);
    assert!(err <= 0.05, "{err}");
    assert!(traj.steps.iter().all(|s| s.certified_eps <= traj.eps));
    for (k, x) in traj.nodes.iter().enumerate() {
        assert!(residual(&p.set.at(traj.grid.node(k)), x) <= 1e-10);
    }
}

#[test]
fn interpolant_reproduces_nodes() {
    for p in [dragging_interval(), interior_ode(), translating_halfspace(), translating_disk(Method::FrankWolfe)] {
        let traj = solve(&p, 37, &EpsSchedule::default()).unwrap();
        for k in 0..=37 {
            let x = traj.interpolate(traj.grid.node(k)).unwrap();
            assert!((x - &traj.nodes[k]).norm() <= 1e-12);
        }
        // end of a cell through the formula itself
        let y = traj.within_cell(5, traj.grid.node(6)).unwrap();
        assert!((y - &traj.nodes[6]).norm() <= 1e-12);
        assert!(traj.interpolate(1.5).is_err());
    }
}

#[test]
fn velocity_at_nodes_needs_a_side() {
    let traj = solve(&interior_ode(), 8, &EpsSchedule::default()).unwrap();
    let t = traj.grid.node(3);
    assert!(matches!(traj.velocity(t, None), Err(SolverError::OutOfRange(_))));
    let left = traj.velocity(t, Some(Side::Left)).unwrap();
    let right = traj.velocity(t, Some(Side::Right)).unwrap();
    assert!((left - right).norm() > 0.0);
    assert!(traj.velocity(0.0, Some(Side::Left)).is_err());
    assert!(traj.velocity(1.0, Some(Side::Right)).is_err());
}

#[test]
fn static_interior_point_has_zero_velocity() {
    let set = MovingSet::Fixed(SetDescription::ball(v(&[0.0, 0.0]), 1.0).unwrap());
    let p = SweepingProblem::new(set, zero_selection(2), v(&[0.2, 0.1]), 1.0, SolveMode::FixedSet, SolverOptions::default())
        .unwrap();
    let traj = solve(&p, 16, &EpsSchedule::default()).unwrap();
    assert_eq!(traj.velocity(0.3, None).unwrap(), v(&[0.0, 0.0]));
}

#[test]
fn audit_passes_on_catalog_runs() {
    for p in [dragging_interval(), interior_ode(), translating_halfspace(), translating_disk(Method::FrankWolfe)] {
        let traj = solve(&p, 64, &EpsSchedule::default()).unwrap();
        let report = theorem1_audit(&traj, &p).unwrap();
        assert!(report.passed(), "{report:#?}");
    }
}

#[test]
fn audit_predictor_bound_is_tight_for_dragging_interval() {
    let p = dragging_interval();
    let traj = solve(&p, 64, &EpsSchedule::default()).unwrap();
    let mu = traj.grid.mu();
    assert!(traj.steps.iter().all(|s| (s.predictor_distance - mu).abs() < 1e-15));
    let report = theorem1_audit(&traj, &p).unwrap();
    let c = report.constants;
    assert_eq!(c.k1, 1.0 + 1e-4 + 1.0);
    assert!(report.checks[0].worst_ratio <= 1.0 && report.checks[0].worst_ratio > 0.999);
}

#[test]
fn budget_failure_aborts_or_is_tolerated() {
    let mut p = translating_disk(Method::FrankWolfe);
    p.options.max_iter = 1;
    let err = solve(&p, 16, &EpsSchedule::default()).unwrap_err();
    let SolverError::ProjectionFailed { step, ref partial, .. } = err else { panic!("{err:?}") };
    assert_eq!(partial.completed(), step + 1);
    assert_eq!(partial.failed_cells(), vec![step]);
    assert!(theorem1_audit(partial, &p).map(|r| !r.passed()).unwrap());

    p.options.permissive = true;
    let traj = solve(&p, 16, &EpsSchedule::default()).unwrap();
    assert!(traj.is_complete());
    let report = theorem1_audit(&traj, &p).unwrap();
    assert!(!report.failed_cells.is_empty());
    assert!(!report.passed());
}

#[test]
fn solve_is_deterministic() {
    let p = translating_disk(Method::FrankWolfe);
    let a = solve(&p, 50, &EpsSchedule::default()).unwrap();
    let b = solve(&p, 50, &EpsSchedule::default()).unwrap();
    assert_eq!(a.nodes, b.nodes);
    assert_eq!(a.steps, b.steps);
}
