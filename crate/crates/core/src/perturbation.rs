//! Set-valued perturbations `F(t, x)` and their approximate minimal-norm selection.
//!
//! Upper semicontinuity of `F` is a contract on the caller; it is not checked.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{distance, GeometryError, SetDescription};
use crate::oracles::{approx_project, OracleError, ProjectorConfig};
use crate::Vector;

type ValueFn = Arc<dyn Fn(f64, &Vector) -> SetDescription + Send + Sync>;
type GrowthFn = Arc<dyn Fn(&Vector) -> f64 + Send + Sync>;
type ModulusFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Convex-valued perturbation with growth bound `d(0, F(t,x)) <= h(x)`.
#[derive(Clone)]
pub struct Perturbation {
    values: ValueFn,
    h: GrowthFn,
    lipschitz_h: f64,
    modulus: Option<ModulusFn>,
    time_independent: bool,
}

impl fmt::Debug for Perturbation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Perturbation")
            .field("lipschitz_h", &self.lipschitz_h)
            .field("has_modulus", &self.modulus.is_some())
            .field("time_independent", &self.time_independent)
            .finish_non_exhaustive()
    }
}

fn singleton(p: Vector) -> SetDescription {
    SetDescription::boxed(p.clone(), p).expect("finite singleton")
}

impl Perturbation {
    /// General perturbation. `h` must dominate `d(0, F(t,x))` and be
    /// `lipschitz_h`-Lipschitz.
    pub fn new<V, H>(values: V, h: H, lipschitz_h: f64) -> Self
    where
        V: Fn(f64, &Vector) -> SetDescription + Send + Sync + 'static,
        H: Fn(&Vector) -> f64 + Send + Sync + 'static,
    {
        Self { values: Arc::new(values), h: Arc::new(h), lipschitz_h, modulus: None, time_independent: false }
    }

    /// `F = {0}`.
    pub fn zero(dim: usize) -> Self {
        let z = Vector::zeros(dim);
        Self::new(move |_, _| singleton(z.clone()), |_| 0.0, 0.0)
            .with_modulus(|_| 0.0)
            .time_independent()
    }

    /// `F(t,x) = {-x}`, with `h = ||x||` and modulus `-1`.
    pub fn linear_decay() -> Self {
        Self::new(|_, x| singleton(-x), |x| x.norm(), 1.0)
            .with_modulus(|_| -1.0)
            .time_independent()
    }

    /// `F(t,x) = S` for a fixed convex set; `h = d(0, S)`.
    pub fn constant_set(set: SetDescription) -> Result<Self, GeometryError> {
        let h0 = distance(&set, &Vector::zeros(set.dim()))?.value;
        Ok(Self::new(move |_, _| set.clone(), move |_| h0, 0.0).time_independent())
    }

    /// Declares the modulus `k(t)` of `<y - y', x - x'> <= k(t) ||x - x'||^2`.
    pub fn with_modulus<K>(mut self, k: K) -> Self
    where
        K: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.modulus = Some(Arc::new(k));
        self
    }

    /// Declares that `F(t,x)` does not depend on `t`.
    pub fn time_independent(mut self) -> Self {
        self.time_independent = true;
        self
    }

    pub fn values(&self, t: f64, x: &Vector) -> SetDescription {
        (self.values)(t, x)
    }

    pub fn h(&self, x: &Vector) -> f64 {
        (self.h)(x)
    }

    pub fn lipschitz_h(&self) -> f64 {
        self.lipschitz_h
    }

    pub fn modulus(&self, t: f64) -> Option<f64> {
        self.modulus.as_ref().map(|k| k(t))
    }

    pub fn is_time_independent(&self) -> bool {
        self.time_independent
    }
}

/// `f(t,x) in proj^gamma_{F(t,x)}(0)`.
pub fn min_norm_selection(p: &Perturbation, t: f64, x: &Vector, gamma: f64) -> Result<Vector, OracleError> {
    if !(gamma > 0.0) {
        return Err(OracleError::InvalidConfig(format!("gamma = {gamma} must be positive")));
    }
    let set = p.values(t, x);
    let cfg = ProjectorConfig { eps: gamma, ..ProjectorConfig::default() };
    Ok(approx_project(&set, &Vector::zeros(set.dim()), &cfg)?.point)
}

pub const DEFAULT_GAMMA: f64 = 1e-8;
pub const DEFAULT_QUADRATURE_NODES: usize = 4;

/// The selection `f` attached to a perturbation, with its quadrature rule.
#[derive(Debug, Clone)]
pub struct Selection {
    pub perturbation: Perturbation,
    pub gamma: f64,
    /// Midpoint sub-nodes per integral.
    pub quadrature_nodes: usize,
    /// Optional bound on `||d^2/dt^2 f(t,x)||`, used for the quadrature slack.
    pub second_derivative_bound: Option<f64>,
}

impl Selection {
    pub fn new(perturbation: Perturbation, gamma: f64) -> Result<Self, OracleError> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(OracleError::InvalidConfig(format!("gamma = {gamma} must be positive")));
        }
        Ok(Self { perturbation, gamma, quadrature_nodes: DEFAULT_QUADRATURE_NODES, second_derivative_bound: None })
    }

    pub fn with_quadrature_nodes(mut self, q: usize) -> Self {
        self.quadrature_nodes = q.max(1);
        self
    }

    pub fn with_second_derivative_bound(mut self, m2: f64) -> Self {
        self.second_derivative_bound = Some(m2);
        self
    }

    pub fn eval(&self, t: f64, x: &Vector) -> Result<Vector, OracleError> {
        min_norm_selection(&self.perturbation, t, x, self.gamma)
    }

    /// `int_a^b f(s, x) ds` with `x` frozen: one evaluation for time-independent
    /// perturbations, composite midpoint otherwise.
    pub fn cell_integral(&self, x: &Vector, a: f64, b: f64) -> Result<Vector, OracleError> {
        let len = b - a;
        if self.perturbation.is_time_independent() {
            return Ok(self.eval(a, x)? * len);
        }
        let q = self.quadrature_nodes;
        let h = len / q as f64;
        let mut acc = Vector::zeros(x.len());
        for j in 0..q {
            acc += self.eval(a + (j as f64 + 0.5) * h, x)?;
        }
        Ok(acc * h)
    }

    /// Bound on the quadrature error of [`Selection::cell_integral`] over `[a, b]`.
    pub fn quadrature_slack(&self, a: f64, b: f64) -> f64 {
        if self.perturbation.is_time_independent() {
            return 0.0;
        }
        let q = self.quadrature_nodes as f64;
        self.second_derivative_bound.map_or(0.0, |m2| (b - a).powi(3) * m2 / (24.0 * q * q))
    }
}

/// Sampled checks of the hypotheses on `F` and of the selection bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationCheck {
    pub samples: usize,
    /// `d(0, F(t,x)) <= h(x)`.
    pub growth_ok: bool,
    /// `|h(x) - h(y)| <= L_h ||x - y||`.
    pub h_lipschitz_ok: bool,
    /// `None` when no modulus is declared.
    pub monotonicity_ok: Option<bool>,
    /// `f(t,x) in F(t,x)`, `||f||^2 <= d(0,F)^2 + gamma` and `||f|| <= h(x) + sqrt(gamma)`.
    pub selection_ok: bool,
    pub worst_violation: f64,
}

impl PerturbationCheck {
    pub fn passed(&self) -> bool {
        self.growth_ok && self.h_lipschitz_ok && self.monotonicity_ok != Some(false) && self.selection_ok
    }
}

/// Samples `(t, x)` in `[0, horizon] x [-radius, radius]^dim`.
pub fn check_perturbation(
    sel: &Selection,
    dim: usize,
    horizon: f64,
    radius: f64,
    samples: usize,
    seed: u64,
) -> Result<PerturbationCheck, OracleError> {
    let p = &sel.perturbation;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let point = |rng: &mut ChaCha8Rng| Vector::from_fn(dim, |_, _| rng.random_range(-radius..=radius));
    let tol = |scale: f64| 1e-10 * (1.0 + scale);
    let mut check = PerturbationCheck {
        samples,
        growth_ok: true,
        h_lipschitz_ok: true,
        monotonicity_ok: p.modulus.as_ref().map(|_| true),
        selection_ok: true,
        worst_violation: 0.0,
    };
    let mut record = |ok: &mut bool, excess: f64, scale: f64| {
        if excess > tol(scale) {
            *ok = false;
        }
        check.worst_violation = check.worst_violation.max(excess);
    };
    let mut growth_ok = true;
    let mut h_ok = true;
    let mut mono_ok = true;
    let mut sel_ok = true;
    for _ in 0..samples {
        let t = rng.random_range(0.0..=horizon);
        let x = point(&mut rng);
        let y = point(&mut rng);
        let hx = p.h(&x);
        let hy = p.h(&y);
        let fset = p.values(t, &x);
        let d0 = distance(&fset, &Vector::zeros(dim))?.value;
        record(&mut growth_ok, d0 - hx, hx);
        record(&mut h_ok, (hx - hy).abs() - p.lipschitz_h() * (&x - &y).norm(), hx.max(hy));

        let fx = sel.eval(t, &x)?;
        let fy = sel.eval(t, &y)?;
        let member = crate::geometry::residual(&fset, &fx);
        record(&mut sel_ok, member, fx.norm());
        record(&mut sel_ok, fx.norm_squared() - d0 * d0 - sel.gamma, d0 * d0);
        record(&mut sel_ok, fx.norm() - hx - sel.gamma.sqrt(), hx);
        if let Some(k) = p.modulus(t) {
            let dx = &x - &y;
            record(&mut mono_ok, (&fx - &fy).dot(&dx) - k * dx.norm_squared(), dx.norm_squared());
        }
    }
    check.growth_ok = growth_ok;
    check.h_lipschitz_ok = h_ok;
    check.selection_ok = sel_ok;
    if check.monotonicity_ok.is_some() {
        check.monotonicity_ok = Some(mono_ok);
    }
    Ok(check)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_vec(xs.to_vec())
    }

    fn time_curve(f: fn(f64) -> f64) -> Selection {
        let p = Perturbation::new(move |t, _| singleton(v(&[f(t), 0.0])), move |_| 1.0, 0.0);
        Selection::new(p, 1e-8).unwrap()
    }

    #[test]
    fn selection_examples() {
        let x = v(&[0.7, -2.0]);
        assert_eq!(min_norm_selection(&Perturbation::linear_decay(), 0.0, &x, 1e-8).unwrap(), -&x);

        let interval = Perturbation::constant_set(SetDescription::boxed(v(&[2.0]), v(&[3.0])).unwrap()).unwrap();
        let s = min_norm_selection(&interval, 0.0, &v(&[0.0]), 1e-6).unwrap();
        assert!((2.0..=3.0).contains(&s[0]) && s[0] * s[0] < 4.0 + 1e-6);

        let ball = Perturbation::constant_set(SetDescription::ball(v(&[3.0, 0.0]), 1.0).unwrap()).unwrap();
        let s = min_norm_selection(&ball, 0.0, &v(&[0.0, 0.0]), 1e-6).unwrap();
        assert!(s.norm_squared() < 4.0 + 1e-6);
        assert!((s - v(&[2.0, 0.0])).norm() < 1e-3);

        assert!(min_norm_selection(&ball, 0.0, &v(&[0.0, 0.0]), 0.0).is_err());
    }

    #[test]
    fn cell_integral_examples() {
        let decay = Selection::new(Perturbation::linear_decay(), 1e-8).unwrap();
        let i = decay.cell_integral(&v(&[1.0, 0.0]), 0.0, 0.1).unwrap();
        assert!((i - v(&[-0.1, 0.0])).norm() < 1e-16);

        let lin = time_curve(|s| s).cell_integral(&v(&[0.0, 0.0]), 0.0, 1.0).unwrap();
        assert!((lin - v(&[0.5, 0.0])).norm() < 1e-12);

        let sq = time_curve(|s| s * s).cell_integral(&v(&[0.0, 0.0]), 0.0, 1.0).unwrap();
        // four midpoints: (1 + 9 + 25 + 49) / 256
        assert!((sq - v(&[21.0 / 64.0, 0.0])).norm() < 1e-15);
        let fine = time_curve(|s| s * s).with_quadrature_nodes(8).cell_integral(&v(&[0.0, 0.0]), 0.0, 1.0).unwrap();
        assert!((fine - v(&[1.0 / 3.0, 0.0])).norm() < 2e-3);
    }

    #[test]
    fn cell_integral_is_additive() {
        let x = v(&[0.4, 1.0]);
        for sel in [Selection::new(Perturbation::linear_decay(), 1e-8).unwrap(), time_curve(|s| 3.0 * s - 1.0)] {
            let (a, b, c) = (0.125, 0.3, 0.8);
            let whole = sel.cell_integral(&x, a, c).unwrap();
            let parts = sel.cell_integral(&x, a, b).unwrap() + sel.cell_integral(&x, b, c).unwrap();
            assert!((whole - parts).norm() <= 1e-12);
        }
    }

    #[test]
    fn quadrature_slack_uses_second_derivative_bound() {
        let sel = time_curve(|s| s * s).with_second_derivative_bound(2.0);
        let slack = sel.quadrature_slack(0.0, 1.0);
        assert!((slack - 2.0 / (24.0 * 16.0)).abs() < 1e-15);
        let exact = sel.cell_integral(&v(&[0.0, 0.0]), 0.0, 1.0).unwrap();
        assert!((exact[0] - 1.0 / 3.0).abs() <= slack + 1e-15);
    }

    #[test]
    fn catalog_perturbations_pass_sampled_checks() {
        let sets = [
            Perturbation::zero(2),
            Perturbation::linear_decay(),
            Perturbation::constant_set(SetDescription::ball(v(&[3.0, 0.0]), 1.0).unwrap()).unwrap(),
            Perturbation::constant_set(SetDescription::boxed(v(&[-1.0, 2.0]), v(&[1.0, 3.0])).unwrap()).unwrap(),
        ];
        for p in sets {
            let sel = Selection::new(p, 1e-8).unwrap();
            let check = check_perturbation(&sel, 2, 1.0, 5.0, 200, 11).unwrap();
            assert!(check.passed(), "{check:?}");
        }
    }

    #[test]
    fn misdeclared_growth_and_modulus_are_caught() {
        let p = Perturbation::new(|_, x| singleton(x * 2.0), |x| x.norm(), 1.0).with_modulus(|_| 1.0);
        let sel = Selection::new(p, 1e-8).unwrap();
        let check = check_perturbation(&sel, 2, 1.0, 5.0, 50, 3).unwrap();
        assert!(!check.growth_ok);
        assert_eq!(check.monotonicity_ok, Some(false));
        assert!(!check.passed());
    }
}
