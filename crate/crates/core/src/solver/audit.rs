use super::{SolverError, SweepingProblem, Trajectory};
use crate::geometry::distance;

/// Explicit constants of the discrete a-priori bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremConstants {
    pub l_c: f64,
    pub l_h: f64,
    pub h0: f64,
    pub sqrt_gamma: f64,
    /// `sup_n sqrt(eps_n) / mu_n`.
    pub c_frak: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    pub k5: f64,
    pub k6: f64,
}

impl TheoremConstants {
    pub fn new(problem: &SweepingProblem, c_frak: f64) -> Self {
        let l_c = problem.lipschitz_c();
        let p = &problem.selection.perturbation;
        let l_h = p.lipschitz_h();
        let h0 = p.h(&problem.x0);
        let sg = problem.selection.gamma.sqrt();
        let t = problem.horizon;
        let k1 = t * (l_c + 2.0 * h0 + sg + c_frak) * (2.0 * l_h * t).exp();
        let hk = h0 + l_h * k1;
        let k2 = k1 + problem.x0.norm() + t * (l_c + 2.0 * (hk + sg) + c_frak);
        let k3 = l_c + 2.0 * (hk + sg);
        let k4 = k3 + l_c + 2.0 * hk + 2.0 * sg;
        let k5 = k4 + l_c;
        let k6 = c_frak + l_c + 2.0 * (hk + sg);
        Self { l_c, l_h, h0, sqrt_gamma: sg, c_frak, k1, k2, k3, k4, k5, k6 }
    }
}

/// Worst case of one bound over the sampled cells or times.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub name: &'static str,
    pub samples: usize,
    pub violations: usize,
    /// Largest `lhs - rhs` seen (negative when every sample passes with room).
    pub worst_margin: f64,
    /// `lhs / rhs` at the tightest sample.
    pub worst_ratio: f64,
}

impl BoundCheck {
    fn new(name: &'static str) -> Self {
        Self { name, samples: 0, violations: 0, worst_margin: f64::NEG_INFINITY, worst_ratio: 0.0 }
    }

    fn record(&mut self, lhs: f64, rhs: f64) {
        self.samples += 1;
        // rounding allowance
        if lhs > rhs + 1e-10 * (1.0 + rhs.abs()) {
            self.violations += 1;
        }
        self.worst_margin = self.worst_margin.max(lhs - rhs);
        if rhs > 0.0 {
            self.worst_ratio = self.worst_ratio.max(lhs / rhs);
        } else if lhs > 0.0 {
            self.worst_ratio = f64::INFINITY;
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub constants: TheoremConstants,
    pub checks: Vec<BoundCheck>,
    /// Cells whose certificate exceeded `eps_n`.
    pub failed_cells: Vec<usize>,
    pub complete: bool,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.complete && self.failed_cells.is_empty() && self.checks.iter().all(BoundCheck::passed)
    }
}

/// Interior sample fractions per cell.
const CELL_SAMPLES: [f64; 4] = [0.125, 0.375, 0.625, 0.875];

/// Checks the computable a-priori bounds on a trajectory: predictor distance (i),
/// drift from `x0` (ii), sup norm (iii), node increments (iv), distance to the
/// next node (v), distance to `C(theta_n(t))` at `m = n` (b) and velocity (c).
pub fn theorem1_audit(traj: &Trajectory, problem: &SweepingProblem) -> Result<AuditReport, SolverError> {
    let c = TheoremConstants::new(problem, traj.schedule.sup_ratio(problem.horizon));
    let mu = traj.grid.mu();
    let se = traj.eps.sqrt();
    let mut i = BoundCheck::new("a.i predictor distance");
    let mut ii = BoundCheck::new("a.ii drift from x0");
    let mut iii = BoundCheck::new("a.iii sup norm");
    let mut iv = BoundCheck::new("a.iv node increment");
    let mut v = BoundCheck::new("a.v distance to next node");
    let mut b = BoundCheck::new("b distance to C(theta)");
    let mut vel = BoundCheck::new("c velocity");

    for (k, s) in traj.steps.iter().enumerate() {
        let x_k = &traj.nodes[k];
        let x_next = &traj.nodes[k + 1];
        i.record(s.predictor_distance, (c.l_c + s.h_xk + c.sqrt_gamma) * mu);
        ii.record((x_next - &problem.x0).norm(), c.k1);
        iv.record((x_next - x_k).norm(), c.k3 * mu + se);

        let (t0, t1) = (traj.grid.node(k), traj.grid.node(k + 1));
        let set_next = problem.set.at(t1);
        iii.record(x_k.norm(), c.k2);
        for frac in CELL_SAMPLES.iter().copied().chain(std::iter::once(1.0)) {
            let t = if frac == 1.0 { t1 } else { t0 + frac * mu };
            let x_t = traj.interpolate(t)?;
            iii.record(x_t.norm(), c.k2);
            v.record((&x_t - x_next).norm(), c.k4 * mu + 2.0 * se);
            let d = distance(&set_next, &x_t).map_err(crate::oracles::OracleError::from)?.value;
            b.record(d, c.k5 * mu + c.l_c * mu + 2.0 * se);
            if frac < 1.0 {
                vel.record(traj.velocity(t, None)?.norm(), c.k6);
            }
        }
    }
    Ok(AuditReport {
        constants: c,
        checks: vec![i, ii, iii, iv, v, b, vel],
        failed_cells: traj.failed_cells(),
        complete: traj.is_complete(),
    })
}
