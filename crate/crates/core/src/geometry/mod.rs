//! Finite-dimensional set descriptions, closed-form projections and distances,
//! and the scalar helpers tied to uniform prox-regularity.

mod functions;
mod moving;

pub use functions::{Affine, ConvexFn, ConvexFunction, Distance as DistanceFn, MaxOf, Shifted, SquaredDistance};
pub use moving::{LipschitzCheck, MovingSet};

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::Vector;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("operation not supported for set kind `{0}`")]
    UnsupportedKind(&'static str),
    #[error("no root: gamma = {0} must lie in (0, 1)")]
    NoRoot(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Regularity class attached to a set. Convex sets are prox-regular for every radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regularity {
    Convex,
    ProxRegular(f64),
    Subsmooth,
    Closed,
}

impl Regularity {
    /// Prox-regularity radius, `+inf` for convex sets, `None` when the tag carries none.
    pub fn prox_radius(&self) -> Option<f64> {
        match *self {
            Regularity::Convex => Some(f64::INFINITY),
            Regularity::ProxRegular(rho) => Some(rho),
            Regularity::Subsmooth | Regularity::Closed => None,
        }
    }
}

/// Geometric shape of a set.
#[derive(Debug, Clone)]
pub enum SetKind {
    /// `{x : <a, x> >= c}`.
    Halfspace { a: Vector, c: f64 },
    Ball { center: Vector, radius: f64 },
    Box { lo: Vector, hi: Vector },
    /// `{x : g(x) <= level}` with a strictly feasible `slater` point.
    Sublevel { g: ConvexFn, level: f64, slater: Vector },
}

impl SetKind {
    pub fn name(&self) -> &'static str {
        match self {
            SetKind::Halfspace { .. } => "halfspace",
            SetKind::Ball { .. } => "ball",
            SetKind::Box { .. } => "box",
            SetKind::Sublevel { .. } => "sublevel",
        }
    }
}

/// A closed set in `R^d` with its regularity tag.
#[derive(Debug, Clone)]
pub struct SetDescription {
    kind: SetKind,
    regularity: Regularity,
}

fn check_finite(v: &Vector, what: &str) -> Result<(), GeometryError> {
    if v.is_empty() {
        return Err(GeometryError::InvalidArgument(format!("{what} has dimension 0")));
    }
    if v.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(GeometryError::InvalidArgument(format!("{what} has non-finite coordinates")))
    }
}

impl SetDescription {
    pub fn halfspace(a: Vector, c: f64) -> Result<Self, GeometryError> {
        check_finite(&a, "halfspace normal")?;
        if a.norm() <= 0.0 || !c.is_finite() {
            return Err(GeometryError::InvalidArgument("halfspace needs a nonzero normal".into()));
        }
        Ok(Self { kind: SetKind::Halfspace { a, c }, regularity: Regularity::Convex })
    }

    pub fn ball(center: Vector, radius: f64) -> Result<Self, GeometryError> {
        check_finite(&center, "ball center")?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(GeometryError::InvalidArgument(format!("ball radius {radius} must be positive")));
        }
        Ok(Self { kind: SetKind::Ball { center, radius }, regularity: Regularity::Convex })
    }

    pub fn boxed(lo: Vector, hi: Vector) -> Result<Self, GeometryError> {
        check_finite(&lo, "box lower corner")?;
        check_finite(&hi, "box upper corner")?;
        if lo.len() != hi.len() {
            return Err(GeometryError::DimensionMismatch { expected: lo.len(), got: hi.len() });
        }
        if lo.iter().zip(hi.iter()).any(|(l, h)| l > h) {
            return Err(GeometryError::InvalidArgument("box needs lo <= hi componentwise".into()));
        }
        Ok(Self { kind: SetKind::Box { lo, hi }, regularity: Regularity::Convex })
    }

    pub fn sublevel(g: ConvexFn, level: f64, slater: Vector) -> Result<Self, GeometryError> {
        check_finite(&slater, "slater point")?;
        let gs = g.eval(&slater);
        if !(gs < level) {
            return Err(GeometryError::InvalidArgument(format!(
                "slater point is not strictly feasible: g = {gs}, level = {level}"
            )));
        }
        Ok(Self { kind: SetKind::Sublevel { g, level, slater }, regularity: Regularity::Convex })
    }

    /// Intersection `{x : max_i g_i(x) <= 0}` through the max-function reduction.
    pub fn intersection(gs: Vec<ConvexFn>, slater: Vector) -> Result<Self, GeometryError> {
        if gs.is_empty() {
            return Err(GeometryError::InvalidArgument("empty intersection".into()));
        }
        Self::sublevel(Arc::new(MaxOf::new(gs)), 0.0, slater)
    }

    pub fn with_regularity(mut self, regularity: Regularity) -> Self {
        self.regularity = regularity;
        self
    }

    pub fn kind(&self) -> &SetKind {
        &self.kind
    }

    pub fn regularity(&self) -> Regularity {
        self.regularity
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            SetKind::Halfspace { a, .. } => a.len(),
            SetKind::Ball { center, .. } => center.len(),
            SetKind::Box { lo, .. } => lo.len(),
            SetKind::Sublevel { slater, .. } => slater.len(),
        }
    }

    pub fn has_closed_form(&self) -> bool {
        !matches!(self.kind, SetKind::Sublevel { .. })
    }

    /// A point used as the origin for boundary sampling and oracle starts.
    pub fn anchor(&self) -> Vector {
        match &self.kind {
            SetKind::Halfspace { a, c } => a * (*c / a.norm_squared()),
            SetKind::Ball { center, .. } => center.clone(),
            SetKind::Box { lo, hi } => (lo + hi) * 0.5,
            SetKind::Sublevel { slater, .. } => slater.clone(),
        }
    }

    /// The set translated by `shift`.
    pub fn translated(&self, shift: &Vector) -> SetDescription {
        let kind = match &self.kind {
            SetKind::Halfspace { a, c } => SetKind::Halfspace { a: a.clone(), c: c + a.dot(shift) },
            SetKind::Ball { center, radius } => SetKind::Ball { center: center + shift, radius: *radius },
            SetKind::Box { lo, hi } => SetKind::Box { lo: lo + shift, hi: hi + shift },
            SetKind::Sublevel { g, level, slater } => SetKind::Sublevel {
                g: Arc::new(Shifted { inner: g.clone(), shift: shift.clone() }),
                level: *level,
                slater: slater + shift,
            },
        };
        SetDescription { kind, regularity: self.regularity }
    }

    /// The same set written as a sublevel set of a convex function with a Slater point.
    pub fn to_sublevel(&self) -> Result<SetDescription, GeometryError> {
        let kind = match &self.kind {
            SetKind::Halfspace { a, c } => {
                let na = a.norm();
                SetKind::Sublevel {
                    g: Arc::new(Affine { a: -a / na, b: c / na }),
                    level: 0.0,
                    slater: a * ((c + na) / a.norm_squared()),
                }
            }
            SetKind::Ball { center, radius } => SetKind::Sublevel {
                g: Arc::new(functions::Distance { center: center.clone(), offset: 0.0 }),
                level: *radius,
                slater: center.clone(),
            },
            SetKind::Box { lo, hi } => {
                let d = lo.len();
                let mut terms: Vec<ConvexFn> = Vec::with_capacity(2 * d);
                for i in 0..d {
                    let mut e = Vector::zeros(d);
                    e[i] = 1.0;
                    terms.push(Arc::new(Affine { a: e.clone(), b: -hi[i] }));
                    terms.push(Arc::new(Affine { a: -e, b: lo[i] }));
                }
                if lo.iter().zip(hi.iter()).any(|(l, h)| l >= h) {
                    return Err(GeometryError::InvalidArgument("degenerate box has no Slater point".into()));
                }
                SetKind::Sublevel { g: Arc::new(MaxOf::new(terms)), level: 0.0, slater: (lo + hi) * 0.5 }
            }
            SetKind::Sublevel { .. } => return Ok(self.clone()),
        };
        Ok(SetDescription { kind, regularity: self.regularity })
    }

    fn check_dim(&self, x: &Vector) -> Result<(), GeometryError> {
        if x.len() == self.dim() {
            Ok(())
        } else {
            Err(GeometryError::DimensionMismatch { expected: self.dim(), got: x.len() })
        }
    }
}

/// Unique nearest point of a closed-form set.
pub fn exact_project(set: &SetDescription, x: &Vector) -> Result<Vector, GeometryError> {
    set.check_dim(x)?;
    match &set.kind {
        SetKind::Halfspace { a, c } => {
            let ax = a.dot(x);
            if ax >= *c {
                Ok(x.clone())
            } else {
                Ok(x + a * ((c - ax) / a.norm_squared()))
            }
        }
        SetKind::Ball { center, radius } => {
            let r = x - center;
            let nr = r.norm();
            if nr <= *radius {
                Ok(x.clone())
            } else {
                Ok(center + r * (radius / nr))
            }
        }
        SetKind::Box { lo, hi } => Ok(Vector::from_fn(x.len(), |i, _| x[i].clamp(lo[i], hi[i]))),
        SetKind::Sublevel { .. } => Err(GeometryError::UnsupportedKind("sublevel")),
    }
}

/// Distance value with a flag telling whether it is exact or only an upper bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distance {
    pub value: f64,
    pub exact: bool,
}

/// Default certificate used for sublevel distance bounds.
pub const SUBLEVEL_DISTANCE_EPS: f64 = 1e-10;

/// `d_set(x)`: exact for closed-form kinds, a certified upper bound for sublevel sets.
pub fn distance(set: &SetDescription, x: &Vector) -> Result<Distance, GeometryError> {
    distance_with_eps(set, x, SUBLEVEL_DISTANCE_EPS)
}

/// Like [`distance`], with the projection certificate for sublevel sets chosen by the caller.
/// The upper bound tightens to the true distance as `eps -> 0`.
pub fn distance_with_eps(set: &SetDescription, x: &Vector, eps: f64) -> Result<Distance, GeometryError> {
    set.check_dim(x)?;
    match &set.kind {
        SetKind::Halfspace { a, c } => Ok(Distance { value: ((c - a.dot(x)) / a.norm()).max(0.0), exact: true }),
        SetKind::Ball { center, radius } => {
            Ok(Distance { value: ((x - center).norm() - radius).max(0.0), exact: true })
        }
        SetKind::Box { .. } => {
            let p = exact_project(set, x)?;
            Ok(Distance { value: (x - p).norm(), exact: true })
        }
        SetKind::Sublevel { g, level, .. } => {
            if g.eval(x) <= *level {
                return Ok(Distance { value: 0.0, exact: true });
            }
            let cfg = crate::oracles::ProjectorConfig { eps, max_iter: 2000, feas_tol: 1e-10 };
            // a budget-exhausted result still carries a feasible point, hence a valid bound
            let result = match crate::oracles::cutting_plane_project(set, x, &cfg) {
                Ok(r) => r,
                Err(crate::oracles::OracleError::BudgetExhausted(r)) => *r,
                Err(e) => return Err(GeometryError::InvalidArgument(e.to_string())),
            };
            Ok(Distance { value: (x - &result.point).norm(), exact: false })
        }
    }
}

/// Feasibility residual: `<= 0` exactly when `x` belongs to the set.
pub fn residual(set: &SetDescription, x: &Vector) -> f64 {
    match &set.kind {
        SetKind::Halfspace { a, c } => (c - a.dot(x)) / a.norm(),
        SetKind::Ball { center, radius } => (x - center).norm() - radius,
        SetKind::Box { lo, hi } => (0..x.len())
            .map(|i| (lo[i] - x[i]).max(x[i] - hi[i]))
            .fold(f64::NEG_INFINITY, f64::max),
        SetKind::Sublevel { g, level, .. } => g.eval(x) - level,
    }
}

/// Largest `eps0 > 0` for which approximate projections stay stable in the
/// `gamma`-tube of a `rho`-prox-regular set: the root of
/// `gamma + 4 sqrt(eps0) (1 + gamma + (1 + 4 sqrt(eps0)) / rho) = 1`.
///
/// Solved by bisection on `s = sqrt(eps0)`; `rho = +inf` is accepted.
pub fn prox_eps0(gamma: f64, rho: f64) -> Result<f64, GeometryError> {
    if gamma >= 1.0 {
        return Err(GeometryError::NoRoot(gamma));
    }
    if !(gamma > 0.0) {
        return Err(GeometryError::InvalidArgument(format!("gamma = {gamma} must be positive")));
    }
    if !(rho > 0.0) {
        return Err(GeometryError::InvalidArgument(format!("rho = {rho} must be positive")));
    }
    let inv_rho = if rho.is_infinite() { 0.0 } else { 1.0 / rho };
    let lhs = |s: f64| gamma + 4.0 * s * (1.0 + gamma + inv_rho * (1.0 + 4.0 * s));
    let mut lo = 0.0_f64;
    // at this s the linear part alone already reaches 1
    let mut hi = (1.0 - gamma) / (4.0 * (1.0 + gamma));
    // bisect to floating-point resolution, well below the 1e-12 target
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if lhs(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = if (lhs(lo) - 1.0).abs() <= (lhs(hi) - 1.0).abs() { lo } else { hi };
    Ok(s * s)
}

fn random_direction(rng: &mut ChaCha8Rng, d: usize) -> Vector {
    loop {
        let v = Vector::from_fn(d, |_, _| StandardNormal.sample(rng));
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

/// Boundary point of `set` hit by the ray from its anchor along `u`, if any.
fn boundary_point(set: &SetDescription, u: &Vector) -> Option<Vector> {
    match &set.kind {
        SetKind::Ball { center, radius } => Some(center + u * *radius),
        SetKind::Box { lo, hi } => {
            let c = (lo + hi) * 0.5;
            let mut t = f64::INFINITY;
            for i in 0..u.len() {
                if u[i].abs() > 0.0 {
                    t = t.min((0.5 * (hi[i] - lo[i])) / u[i].abs());
                }
            }
            t.is_finite().then(|| c + u * t)
        }
        SetKind::Halfspace { a, .. } => {
            // boundary points: anchor plus a tangential offset
            let n = a / a.norm();
            let tangential = u - &n * n.dot(u);
            Some(set.anchor() + tangential)
        }
        SetKind::Sublevel { g, level, slater } => {
            let mut r = 1.0;
            let mut expansions = 0;
            while g.eval(&(slater + u * r)) <= *level {
                r *= 2.0;
                expansions += 1;
                if expansions > 60 {
                    return None;
                }
            }
            let (mut inside, mut outside) = (0.0, r);
            for _ in 0..200 {
                let mid = 0.5 * (inside + outside);
                if mid <= inside || mid >= outside {
                    break;
                }
                if g.eval(&(slater + u * mid)) <= *level {
                    inside = mid;
                } else {
                    outside = mid;
                }
            }
            Some(slater + u * inside)
        }
    }
}

fn one_sided_excess(
    a: &SetDescription,
    b: &SetDescription,
    dirs: &[Vector],
) -> Result<f64, GeometryError> {
    let mut excess = 0.0_f64;
    let mut sampled = 0usize;
    for u in dirs {
        if let Some(p) = boundary_point(a, u) {
            excess = excess.max(distance(b, &p)?.value);
            sampled += 1;
        }
    }
    if sampled == 0 {
        return Err(GeometryError::UnsupportedKind(a.kind.name()));
    }
    Ok(excess)
}

/// Sampled estimate of the Hausdorff distance `d_H(a, b)`.
///
/// Boundary points are generated along uniformly random directions from each
/// set's anchor and projected onto the other set. The result is a lower-bound
/// estimator (up to the upper-bound distances used for sublevel sets).
pub fn hausdorff_estimate(
    a: &SetDescription,
    b: &SetDescription,
    samples: usize,
    seed: u64,
) -> Result<f64, GeometryError> {
    if samples == 0 {
        return Err(GeometryError::InvalidArgument("samples must be >= 1".into()));
    }
    if a.dim() != b.dim() {
        return Err(GeometryError::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dirs: Vec<Vector> = (0..samples).map(|_| random_direction(&mut rng, a.dim())).collect();
    Ok(one_sided_excess(a, b, &dirs)?.max(one_sided_excess(b, a, &dirs)?))
}
