use super::{rounding_slack, Method, OracleError, ProjectionResult, ProjectorConfig};
use crate::geometry::{SetDescription, SetKind};
use crate::Vector;

/// `s(w) = argmin_{y in C} <w, y>` over a compact convex set.
pub trait LinearMinimizationOracle {
    fn minimize(&self, w: &Vector) -> Vector;
}

/// Exact linear minimization over a ball or a box.
#[derive(Debug, Clone, Copy)]
pub struct SetLmo<'a> {
    set: &'a SetDescription,
}

impl<'a> SetLmo<'a> {
    pub fn new(set: &'a SetDescription) -> Result<Self, OracleError> {
        match set.kind() {
            SetKind::Ball { .. } | SetKind::Box { .. } => Ok(Self { set }),
            other => Err(OracleError::UnsupportedKind(other.name())),
        }
    }

    /// The vertex minimizing `<(1, ..., 1), y>`; an arbitrary but fixed extreme point.
    pub fn default_start(&self) -> Vector {
        self.minimize(&Vector::from_element(self.set.dim(), 1.0))
    }

    /// The first Frank–Wolfe vertex seen from the anchor of the set towards `x`.
    /// On a box it lies on the face containing the projection of `x`.
    pub fn anchored_start(&self, x: &Vector) -> Vector {
        self.minimize(&(self.set.anchor() - x))
    }
}

impl LinearMinimizationOracle for SetLmo<'_> {
    fn minimize(&self, w: &Vector) -> Vector {
        match self.set.kind() {
            SetKind::Ball { center, radius } => {
                let nw = w.norm();
                if nw > 0.0 {
                    center - w * (radius / nw)
                } else {
                    center.clone()
                }
            }
            SetKind::Box { lo, hi } => Vector::from_fn(w.len(), |i, _| if w[i] > 0.0 { lo[i] } else { hi[i] }),
            _ => unreachable!("checked in SetLmo::new"),
        }
    }
}

/// Frank–Wolfe minimization of `||x - z||^2` over `C` with exact line search.
///
/// Stops once the duality gap `2 <z - x, z - s>` (an upper bound on
/// `||x - z||^2 - d_C(x)^2`) drops below `cfg.eps`. `start` must lie in `C`;
/// every iterate is a convex combination of points of `C`.
pub fn frank_wolfe_project<L: LinearMinimizationOracle + ?Sized>(
    lmo: &L,
    x: &Vector,
    start: &Vector,
    cfg: &ProjectorConfig,
) -> Result<ProjectionResult, OracleError> {
    cfg.validate()?;
    let mut z = start.clone();
    for it in 0..cfg.max_iter {
        let w = &z - x;
        let s = lmo.minimize(&w);
        let dir = &s - &z;
        let gap = -2.0 * w.dot(&dir);
        let cert = gap.max(0.0) + rounding_slack(w.norm_squared());
        if cert <= cfg.eps {
            return Ok(ProjectionResult {
                point: z,
                certified_eps: cert,
                iterations: it,
                converged: true,
                method: Method::FrankWolfe,
            });
        }
        let dd = dir.norm_squared();
        if dd == 0.0 {
            break;
        }
        let tau = (-w.dot(&dir) / dd).clamp(0.0, 1.0);
        z += dir * tau;
    }
    let w = &z - x;
    let s = lmo.minimize(&w);
    let gap = -2.0 * w.dot(&(&s - &z));
    Err(OracleError::BudgetExhausted(Box::new(ProjectionResult {
        certified_eps: gap.max(0.0) + rounding_slack(w.norm_squared()),
        point: z,
        iterations: cfg.max_iter,
        converged: false,
        method: Method::FrankWolfe,
    })))
}
