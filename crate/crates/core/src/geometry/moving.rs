use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{hausdorff_estimate, GeometryError, SetDescription};
use crate::Vector;

type SetFn = Arc<dyn Fn(f64) -> SetDescription + Send + Sync>;

/// A time-dependent closed set `t -> C(t)` with its declared Hausdorff
/// Lipschitz constant `L_C`.
#[derive(Clone)]
pub enum MovingSet {
    /// `C(t) = C` for all `t`; `L_C = 0`.
    Fixed(SetDescription),
    /// `C(t) = base + t * velocity`; `L_C = ||velocity||`.
    Translating { base: SetDescription, velocity: Vector },
    /// Arbitrary motion with a user-declared constant.
    Custom { at: SetFn, lipschitz: f64 },
}

impl fmt::Debug for MovingSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MovingSet::Fixed(s) => f.debug_tuple("Fixed").field(s).finish(),
            MovingSet::Translating { base, velocity } => f
                .debug_struct("Translating")
                .field("base", base)
                .field("velocity", &velocity.as_slice())
                .finish(),
            MovingSet::Custom { lipschitz, .. } => {
                f.debug_struct("Custom").field("lipschitz", lipschitz).finish_non_exhaustive()
            }
        }
    }
}

/// Outcome of sampling `d_H(C(t), C(s)) <= L_C |t - s|`.
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzCheck {
    pub declared: f64,
    /// Largest observed ratio `d_H / |t - s|` over the sampled pairs.
    pub observed: f64,
    pub pairs: usize,
    pub passed: bool,
}

impl MovingSet {
    pub fn custom<F>(at: F, lipschitz: f64) -> Self
    where
        F: Fn(f64) -> SetDescription + Send + Sync + 'static,
    {
        MovingSet::Custom { at: Arc::new(at), lipschitz }
    }

    pub fn at(&self, t: f64) -> SetDescription {
        match self {
            MovingSet::Fixed(s) => s.clone(),
            MovingSet::Translating { base, velocity } => base.translated(&(velocity * t)),
            MovingSet::Custom { at, .. } => at(t),
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match self {
            MovingSet::Fixed(_) => 0.0,
            MovingSet::Translating { velocity, .. } => velocity.norm(),
            MovingSet::Custom { lipschitz, .. } => *lipschitz,
        }
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self, MovingSet::Fixed(_))
    }

    pub fn dim(&self) -> usize {
        self.at(0.0).dim()
    }

    /// Samples random time pairs in `[0, horizon]` and compares the Hausdorff
    /// estimate of `C(t), C(s)` with the declared constant.
    pub fn check_lipschitz(
        &self,
        horizon: f64,
        pairs: usize,
        samples: usize,
        seed: u64,
    ) -> Result<LipschitzCheck, GeometryError> {
        let declared = self.lipschitz();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut observed = 0.0_f64;
        for i in 0..pairs {
            let t = rng.random_range(0.0..=horizon);
            let s = rng.random_range(0.0..=horizon);
            if (t - s).abs() < 1e-9 * horizon.max(1.0) {
                continue;
            }
            let dh = hausdorff_estimate(&self.at(t), &self.at(s), samples, seed.wrapping_add(i as u64))?;
            observed = observed.max(dh / (t - s).abs());
        }
        // sampled estimates carry rounding from the projections
        let passed = observed <= declared * (1.0 + 1e-9) + 1e-9;
        Ok(LipschitzCheck { declared, observed, pairs, passed })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn translating_ball_is_lipschitz_with_speed() {
        let base = SetDescription::ball(Vector::from_vec(vec![0.0, 0.0]), 1.0).unwrap();
        let m = MovingSet::Translating { base, velocity: Vector::from_vec(vec![1.0, 0.0]) };
        assert_eq!(m.lipschitz(), 1.0);
        let check = m.check_lipschitz(1.0, 20, 200, 3).unwrap();
        assert!(check.passed, "{check:?}");
        assert!(check.observed > 0.95);
    }

    #[test]
    fn misdeclared_constant_is_caught() {
        let m = MovingSet::custom(
            |t| SetDescription::ball(Vector::from_vec(vec![2.0 * t]), 1.0).unwrap(),
            1.0,
        );
        let check = m.check_lipschitz(1.0, 10, 4, 5).unwrap();
        assert!(!check.passed);
    }

    #[test]
    fn fixed_set_has_zero_constant() {
        let m = MovingSet::Fixed(SetDescription::ball(Vector::from_vec(vec![0.0, 0.0]), 10.0).unwrap());
        assert_eq!(m.lipschitz(), 0.0);
        // only projection rounding remains
        assert!(m.check_lipschitz(1.0, 5, 10, 1).unwrap().observed < 1e-12);
    }
}
