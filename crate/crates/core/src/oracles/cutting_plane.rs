use super::polyhedron::{project_onto_polyhedron, Cut};
use super::{rounding_slack, separation_oracle, Method, OracleError, ProjectionResult, ProjectorConfig, Separation};
use crate::geometry::{SetDescription, SetKind};
use crate::Vector;

/// Cutting-plane projection onto a sublevel set `{g <= level}` with a Slater point.
///
/// Keeps an outer polyhedron `O ⊇ C` built from separation cuts. Its projection
/// `w` comes with a weak-duality lower bound on `d_C(x)^2`; bisection on the segment
/// `[w, slater]` gives a feasible point `p`. Returns the best `p` once
/// `||x - p||^2 - ||x - w||^2 <= eps`.
///
/// Closed-form sets are accepted through their sublevel representation.
pub fn cutting_plane_project(
    set: &SetDescription,
    x: &Vector,
    cfg: &ProjectorConfig,
) -> Result<ProjectionResult, OracleError> {
    run(set, x, cfg, None)
}

/// Same as [`cutting_plane_project`], also returning the lower bound on
/// `d_C(x)^2` produced at every iteration.
pub fn cutting_plane_project_traced(
    set: &SetDescription,
    x: &Vector,
    cfg: &ProjectorConfig,
) -> (Result<ProjectionResult, OracleError>, Vec<f64>) {
    let mut trace = Vec::new();
    let r = run(set, x, cfg, Some(&mut trace));
    (r, trace)
}

fn run(
    set: &SetDescription,
    x: &Vector,
    cfg: &ProjectorConfig,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<ProjectionResult, OracleError> {
    cfg.validate()?;
    let sub;
    let set = if set.has_closed_form() {
        sub = set.to_sublevel()?;
        &sub
    } else {
        set
    };
    let SetKind::Sublevel { g, level, slater } = set.kind() else {
        unreachable!()
    };
    let result = |point: Vector, certified_eps: f64, iterations: usize, converged: bool| ProjectionResult {
        point,
        certified_eps,
        iterations,
        converged,
        method: Method::CuttingPlane,
    };
    if g.eval(x) <= *level {
        return Ok(result(x.clone(), 0.0, 0, true));
    }

    let mut cuts: Vec<Cut> = Vec::new();
    let mut lower = 0.0_f64;
    let mut best: Option<(Vector, f64)> = None;
    for it in 1..=cfg.max_iter {
        let outer = project_onto_polyhedron(x, &cuts, slater);
        let w = outer.point;
        let lw = outer.sq_dist_lower_bound;
        lower = lower.max(lw);
        if let Some(t) = trace.as_deref_mut() {
            t.push(lw);
        }
        if g.eval(&w) <= *level {
            // w is feasible; its distance is within the duality gap of the optimum over O ⊇ C
            let uw = (x - &w).norm_squared();
            return Ok(result(w, (uw - lower).max(0.0) + rounding_slack(uw), it, true));
        }

        let p = restore_feasibility(g.as_ref(), *level, &w, slater);
        let up = (x - &p).norm_squared();
        if best.as_ref().is_none_or(|(_, u)| up < *u) {
            best = Some((p.clone(), up));
        }
        let (bp, bu) = best.as_ref().unwrap();
        let cert = (bu - lower).max(0.0) + rounding_slack(*bu);
        if cert <= cfg.eps {
            return Ok(result(bp.clone(), cert, it, true));
        }

        match separation_oracle(set, &w)? {
            Separation::Hyperplane { normal, offset } => add_cut(&mut cuts, Cut::new(normal, offset)),
            Separation::Member => unreachable!("w is infeasible"),
        }
        // supporting cut at the boundary point: <g'(p), y> <= <g'(p), p> + level - g(p)
        let sp = g.subgradient(&p);
        let off = sp.dot(&p) + (level - g.eval(&p));
        add_cut(&mut cuts, Cut::new(sp, off));
    }
    let (bp, bu) = best.expect("at least one iteration");
    Err(OracleError::BudgetExhausted(Box::new(result(
        bp,
        (bu - lower).max(0.0) + rounding_slack(bu),
        cfg.max_iter,
        false,
    ))))
}

/// Adds `cut` unless an existing cut with the same normal is at least as tight.
fn add_cut(cuts: &mut Vec<Cut>, cut: Option<Cut>) {
    let Some(cut) = cut else { return };
    for existing in cuts.iter_mut() {
        if (&existing.normal - &cut.normal).norm() <= 1e-12 {
            existing.offset = existing.offset.min(cut.offset);
            return;
        }
    }
    cuts.push(cut);
}

/// Bisection on `[w, slater]` for the boundary; returns the feasible end.
fn restore_feasibility(
    g: &dyn crate::geometry::ConvexFunction,
    level: f64,
    w: &Vector,
    slater: &Vector,
) -> Vector {
    let dir = slater - w;
    let (mut infeasible, mut feasible) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (infeasible + feasible);
        if mid <= infeasible || mid >= feasible {
            break;
        }
        if g.eval(&(w + &dir * mid)) <= level {
            feasible = mid;
        } else {
            infeasible = mid;
        }
    }
    w + dir * feasible
}
