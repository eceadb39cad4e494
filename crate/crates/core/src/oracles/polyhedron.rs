use nalgebra::DMatrix;

use crate::Vector;

/// Halfspace `{y : <normal, y> <= offset}` with a unit normal.
#[derive(Debug, Clone, PartialEq)]
pub struct Cut {
    pub normal: Vector,
    pub offset: f64,
}

impl Cut {
    /// Normalizes `<a, y> <= b`; `None` for a zero normal.
    pub fn new(a: Vector, b: f64) -> Option<Self> {
        let na = a.norm();
        (na > 0.0 && na.is_finite()).then(|| Cut { normal: a / na, offset: b / na })
    }

    pub fn violation(&self, y: &Vector) -> f64 {
        self.normal.dot(y) - self.offset
    }
}

/// Multipliers `mu` with `(A_W A_W^T) mu = A_W r` for the working set `W`.
fn working_multipliers(cuts: &[Cut], working: &[usize], r: &Vector) -> Option<Vector> {
    let k = working.len();
    let gram = DMatrix::from_fn(k, k, |i, j| cuts[working[i]].normal.dot(&cuts[working[j]].normal));
    let rhs = Vector::from_fn(k, |i, _| cuts[working[i]].normal.dot(r));
    gram.cholesky().map(|c| c.solve(&rhs))
}

/// Projection onto a polyhedron with a weak-duality certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyhedralProjection {
    pub point: Vector,
    /// Lower bound on the squared distance from `x` to the polyhedron,
    /// valid whether or not the active-set iteration converged.
    pub sq_dist_lower_bound: f64,
    pub converged: bool,
}

/// `2 D(lambda)` with `D(lambda) = lambda^T (A x - b) - 1/2 ||A^T lambda||^2`,
/// a lower bound on `min_{Ay <= b} ||y - x||^2` for any `lambda >= 0`.
fn dual_bound(x: &Vector, cuts: &[Cut], working: &[usize], mu: &Vector) -> f64 {
    let mut at_lambda = Vector::zeros(x.len());
    let mut linear = 0.0;
    for (j, &i) in working.iter().enumerate() {
        let l = mu[j].max(0.0);
        at_lambda.axpy(l, &cuts[i].normal, 1.0);
        linear += l * cuts[i].violation(x);
    }
    (2.0 * linear - at_lambda.norm_squared()).max(0.0)
}

/// Euclidean projection of `x` onto `{y : <a_i, y> <= b_i for all cuts}`.
///
/// Primal active-set method for `min 1/2 ||y - x||^2`. `start` must satisfy
/// every cut; the working set stays linearly independent because a blocking
/// constraint always has a component outside the span of the current one.
pub fn project_onto_polyhedron(x: &Vector, cuts: &[Cut], start: &Vector) -> PolyhedralProjection {
    let mut y = start.clone();
    let mut working: Vec<usize> = Vec::new();
    let max_steps = 20 * (cuts.len() + x.len()) + 100;
    let finish = |y: Vector, working: &[usize], converged: bool| {
        let r = x - &y;
        let bound = if working.is_empty() {
            if converged { r.norm_squared() } else { 0.0 }
        } else {
            working_multipliers(cuts, working, &r)
                .map(|mu| dual_bound(x, cuts, working, &mu))
                .unwrap_or(0.0)
        };
        PolyhedralProjection { point: y, sq_dist_lower_bound: bound, converged }
    };
    for _ in 0..max_steps {
        let r = x - &y;
        let (step, mu) = if working.is_empty() {
            (r.clone(), Vector::zeros(0))
        } else {
            match working_multipliers(cuts, &working, &r) {
                Some(mu) => {
                    let mut p = r.clone();
                    for (j, &i) in working.iter().enumerate() {
                        p.axpy(-mu[j], &cuts[i].normal, 1.0);
                    }
                    (p, mu)
                }
                None => {
                    // numerically dependent working set
                    working.pop();
                    continue;
                }
            }
        };
        if step.norm() <= 1e-15 * (1.0 + r.norm() + y.norm()) {
            let Some((j, &m)) = mu.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)) else {
                return finish(y, &working, true);
            };
            if m >= -1e-14 {
                return finish(y, &working, true);
            }
            working.remove(j);
            continue;
        }
        let mut alpha = 1.0;
        let mut blocking = None;
        let step_norm = step.norm();
        for (i, cut) in cuts.iter().enumerate() {
            if working.contains(&i) {
                continue;
            }
            let ap = cut.normal.dot(&step);
            // normals (nearly) in the span of the working set cannot block
            if ap > 1e-12 * step_norm {
                let slack = (cut.offset - cut.normal.dot(&y)).max(0.0);
                let a = slack / ap;
                if a < alpha {
                    alpha = a;
                    blocking = Some(i);
                }
            }
        }
        y.axpy(alpha, &step, 1.0);
        if let Some(i) = blocking {
            working.push(i);
        }
    }
    finish(y, &working, false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_vec(xs.to_vec())
    }

    #[test]
    fn no_cuts_returns_target() {
        let x = v(&[3.0, -1.0]);
        let p = project_onto_polyhedron(&x, &[], &v(&[0.0, 0.0]));
        assert_eq!(p.point, x);
        assert_eq!(p.sq_dist_lower_bound, 0.0);
    }

    #[test]
    fn projects_onto_single_halfspace() {
        let cuts = [Cut::new(v(&[0.0, 2.0]), 2.0).unwrap()];
        let p = project_onto_polyhedron(&v(&[0.5, 3.0]), &cuts, &v(&[0.0, 0.0]));
        assert!(p.converged);
        assert!((p.point - v(&[0.5, 1.0])).norm() < 1e-14);
        assert!((p.sq_dist_lower_bound - 4.0).abs() < 1e-12);
    }

    #[test]
    fn projects_onto_square_corner_and_face() {
        let cuts: Vec<Cut> = [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)]
            .iter()
            .map(|&(a, b)| Cut::new(v(&[a, b]), 1.0).unwrap())
            .collect();
        let start = v(&[0.0, 0.0]);
        let corner = project_onto_polyhedron(&v(&[3.0, 2.0]), &cuts, &start).point;
        assert!((corner - v(&[1.0, 1.0])).norm() < 1e-14);
        let face = project_onto_polyhedron(&v(&[3.0, 0.25]), &cuts, &start).point;
        assert!((face - v(&[1.0, 0.25])).norm() < 1e-14);
    }

    #[test]
    fn releases_constraints_with_negative_multipliers() {
        // the path from the start hits the first cut, but the optimum is on the second
        let cuts = vec![
            Cut::new(v(&[1.0, 1.0]), 1.0).unwrap(),
            Cut::new(v(&[1.0, -1.0]), 0.0).unwrap(),
        ];
        let x = v(&[2.0, 0.0]);
        let proj = project_onto_polyhedron(&x, &cuts, &v(&[-1.0, 0.0]));
        let y = proj.point;
        // brute force over a fine grid of feasible points
        let mut best = f64::INFINITY;
        for i in 0..=400 {
            for j in 0..=400 {
                let p = v(&[-1.0 + i as f64 * 0.01, -2.0 + j as f64 * 0.01]);
                if cuts.iter().all(|c| c.violation(&p) <= 1e-12) {
                    best = best.min((&p - &x).norm_squared());
                }
            }
        }
        let got = (&y - &x).norm_squared();
        assert!(cuts.iter().all(|c| c.violation(&y) <= 1e-12));
        assert!(got <= best + 1e-12);
        assert!(got >= best - 0.02);
        assert!(proj.sq_dist_lower_bound <= got + 1e-12);
        assert!(proj.sq_dist_lower_bound >= got - 1e-12);
    }

    #[test]
    fn dual_bound_stays_valid_without_convergence() {
        let cuts: Vec<Cut> = (0..40)
            .map(|k| {
                let th = k as f64 * 0.05;
                Cut::new(v(&[th.cos(), th.sin()]), 1.0).unwrap()
            })
            .collect();
        let x = v(&[3.0, 2.0]);
        let full = project_onto_polyhedron(&x, &cuts, &v(&[0.0, 0.0]));
        assert!(full.converged);
        let exact = (&x - &full.point).norm_squared();
        assert!(full.sq_dist_lower_bound <= exact + 1e-12);
        assert!(full.sq_dist_lower_bound >= exact - 1e-9);
    }
}
