//! Convex function oracles used to describe sublevel sets `{x : g(x) <= level}`.

use std::fmt::Debug;
use std::sync::Arc;

use crate::Vector;

/// A finite convex function together with a subgradient selector.
///
/// Implementations must satisfy the subgradient inequality
/// `g(y) >= g(x) + <subgradient(x), y - x>` for all `x, y`.
pub trait ConvexFunction: Debug + Send + Sync {
    fn eval(&self, x: &Vector) -> f64;
    /// One element of the subdifferential at `x`.
    fn subgradient(&self, x: &Vector) -> Vector;
}

/// Shared handle to a convex function oracle.
pub type ConvexFn = Arc<dyn ConvexFunction>;

/// `g(x) = <a, x> + b`.
#[derive(Debug, Clone)]
pub struct Affine {
    pub a: Vector,
    pub b: f64,
}

impl ConvexFunction for Affine {
    fn eval(&self, x: &Vector) -> f64 {
        self.a.dot(x) + self.b
    }

    fn subgradient(&self, _x: &Vector) -> Vector {
        self.a.clone()
    }
}

/// `g(x) = ||x - center||^2 + offset`.
#[derive(Debug, Clone)]
pub struct SquaredDistance {
    pub center: Vector,
    pub offset: f64,
}

impl ConvexFunction for SquaredDistance {
    fn eval(&self, x: &Vector) -> f64 {
        (x - &self.center).norm_squared() + self.offset
    }

    fn subgradient(&self, x: &Vector) -> Vector {
        (x - &self.center) * 2.0
    }
}

/// `g(x) = ||x - center|| + offset`. The subgradient at the center is zero.
#[derive(Debug, Clone)]
pub struct Distance {
    pub center: Vector,
    pub offset: f64,
}

impl ConvexFunction for Distance {
    fn eval(&self, x: &Vector) -> f64 {
        (x - &self.center).norm() + self.offset
    }

    fn subgradient(&self, x: &Vector) -> Vector {
        let r = x - &self.center;
        let nr = r.norm();
        if nr > 0.0 {
            r / nr
        } else {
            Vector::zeros(x.len())
        }
    }
}

/// Pointwise maximum `g(x) = max_i g_i(x)`.
///
/// At kinks the subgradient of the lowest-index active term is returned.
#[derive(Debug, Clone)]
pub struct MaxOf {
    pub terms: Vec<ConvexFn>,
}

impl MaxOf {
    pub fn new(terms: Vec<ConvexFn>) -> Self {
        assert!(!terms.is_empty(), "max of an empty family");
        Self { terms }
    }

    fn active(&self, x: &Vector) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, g) in self.terms.iter().enumerate() {
            let v = g.eval(x);
            // strict comparison keeps the lowest index on ties
            if v > best.1 {
                best = (i, v);
            }
        }
        best
    }
}

impl ConvexFunction for MaxOf {
    fn eval(&self, x: &Vector) -> f64 {
        self.active(x).1
    }

    fn subgradient(&self, x: &Vector) -> Vector {
        let (i, _) = self.active(x);
        self.terms[i].subgradient(x)
    }
}

/// `g(x) = inner(x - shift)`, the function of a translated sublevel set.
#[derive(Debug, Clone)]
pub struct Shifted {
    pub inner: ConvexFn,
    pub shift: Vector,
}

impl ConvexFunction for Shifted {
    fn eval(&self, x: &Vector) -> f64 {
        self.inner.eval(&(x - &self.shift))
    }

    fn subgradient(&self, x: &Vector) -> Vector {
        self.inner.subgradient(&(x - &self.shift))
    }
}
