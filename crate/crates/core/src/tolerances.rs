use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Numerical thresholds shared by the checks. Every field can be overridden
/// per scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances<T> {
    /// Membership slack for set oracles.
    pub feas: T,
    /// Optimality slack of projections against sampled competitors.
    pub proj: T,
    /// Acceptance slack for sampled normal and subgradient residuals.
    pub res: T,
    /// Slack for the exact certificate identities.
    pub cert: T,
    /// Angular merge radius for cone clustering, in radians.
    pub angle: T,
}

impl<T: Scalar> Default for Tolerances<T> {
    fn default() -> Self {
        Self {
            feas: T::lit(1e-9),
            proj: T::lit(1e-7),
            res: T::lit(1e-3),
            cert: T::lit(1e-9),
            angle: T::lit(0.02),
        }
    }
}
