//! Scalar functions whose epigraphs and hypographs appear in the set catalog.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// A continuous function `R -> R` identified by a tag and parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "function", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarFunction<T> {
    /// `coef * t^2`
    Parabola { coef: T },
    /// `k^m t^2` for `t >= 0` and `0` for `t < 0`.
    KMParabola { k: T, m: T },
    /// `t sin(1/t)`, with value `0` at the origin.
    XSinInvX,
    /// `min(0, t sin(1/t))`
    XSinInvXNonpos,
    /// `-|t|^(1 + 1/ln^2|t|)` on `0 < |t| < 1`, zero elsewhere.
    NegPowLog,
    /// `-|t|`
    NegAbs,
}

impl<T: Scalar> ScalarFunction<T> {
    pub fn evaluate(&self, t: T) -> T {
        match self {
            Self::Parabola { coef } => *coef * t * t,
            Self::KMParabola { .. } => {
                if t > T::zero() {
                    self.quadratic_coef() * t * t
                } else {
                    T::zero()
                }
            }
            Self::XSinInvX => {
                if t == T::zero() {
                    T::zero()
                } else {
                    t * (T::one() / t).sin()
                }
            }
            Self::XSinInvXNonpos => Self::XSinInvX.evaluate(t).min(T::zero()),
            Self::NegPowLog => {
                let a = t.abs();
                if a == T::zero() || a >= T::one() {
                    T::zero()
                } else {
                    let l = a.ln();
                    -(a.ln() * (T::one() + T::one() / (l * l))).exp()
                }
            }
            Self::NegAbs => -t.abs(),
        }
    }

    /// Derivative where the function is differentiable, `None` at kinks and
    /// at points where no closed form is provided.
    pub fn derivative(&self, t: T) -> Option<T> {
        match self {
            Self::Parabola { coef } => Some(T::two() * *coef * t),
            Self::KMParabola { .. } => Some(if t > T::zero() {
                T::two() * self.quadratic_coef() * t
            } else {
                T::zero()
            }),
            Self::XSinInvX => (t != T::zero()).then(|| {
                let inv = T::one() / t;
                inv.sin() - inv.cos() * inv
            }),
            Self::XSinInvXNonpos => {
                let v = Self::XSinInvX.evaluate(t);
                if v < T::zero() {
                    Self::XSinInvX.derivative(t)
                } else if v > T::zero() {
                    Some(T::zero())
                } else {
                    None
                }
            }
            Self::NegPowLog => None,
            Self::NegAbs => (t != T::zero()).then(|| -t.signum()),
        }
    }

    /// Coefficient of the quadratic branch for the parabola families.
    pub fn quadratic_coef(&self) -> T {
        match self {
            Self::Parabola { coef } => *coef,
            Self::KMParabola { k, m } => k.powf(*m),
            _ => T::nan(),
        }
    }

    /// Whether nearest points on the graph have a closed form.
    pub fn has_closed_form_projection(&self) -> bool {
        matches!(self, Self::Parabola { .. } | Self::KMParabola { .. } | Self::NegAbs)
    }

    pub fn identifier(&self) -> &'static str {
        match self {
            Self::Parabola { .. } => "parabola",
            Self::KMParabola { .. } => "k_m_parabola",
            Self::XSinInvX => "x_sin_inv_x",
            Self::XSinInvXNonpos => "x_sin_inv_x_nonpos",
            Self::NegPowLog => "neg_pow_log",
            Self::NegAbs => "neg_abs",
        }
    }

    /// Spot check of continuity at `t`: the increments along the step
    /// ladder `h_j = h0 * 2^-j` must shrink below `tol` at the finest steps.
    pub fn continuity_spot_check(&self, t: T, h0: T, steps: usize, tol: T) -> bool {
        let f0 = self.evaluate(t);
        if !f0.is_finite() {
            return false;
        }
        let mut h = h0;
        let mut last = T::infinity();
        for _ in 0..steps {
            let jump = (self.evaluate(t + h) - f0)
                .abs()
                .max((self.evaluate(t - h) - f0).abs());
            last = jump;
            h = h * T::half();
        }
        last <= tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values() {
        let g = ScalarFunction::KMParabola { k: 3.0, m: 4.0 };
        assert_eq!(g.evaluate(-1.0), 0.0);
        assert_eq!(g.evaluate(0.5), 81.0 * 0.25);
        assert_eq!(ScalarFunction::<f64>::XSinInvX.evaluate(0.0), 0.0);
        let f = ScalarFunction::<f64>::NegPowLog;
        let t: f64 = 1e-3;
        let expected = -t.powf(1.0 + 1.0 / t.ln().powi(2));
        assert!((f.evaluate(t) - expected).abs() < 1e-15);
        assert_eq!(f.evaluate(-t), f.evaluate(t));
    }

    #[test]
    fn continuity_of_catalog_functions() {
        let fns: Vec<ScalarFunction<f64>> = vec![
            ScalarFunction::Parabola { coef: 1.0 },
            ScalarFunction::KMParabola { k: 2.0, m: 4.0 },
            ScalarFunction::XSinInvX,
            ScalarFunction::XSinInvXNonpos,
            ScalarFunction::NegPowLog,
            ScalarFunction::NegAbs,
        ];
        for f in &fns {
            for &t in &[0.0, 0.3, -0.7] {
                assert!(f.continuity_spot_check(t, 1e-2, 40, 1e-9), "{f:?} at {t}");
            }
        }
    }

    #[test]
    fn serde_tags() {
        let f: ScalarFunction<f64> =
            serde_json::from_str(r#"{"function":"k_m_parabola","k":3,"m":4}"#).unwrap();
        assert_eq!(f, ScalarFunction::KMParabola { k: 3.0, m: 4.0 });
        assert!(serde_json::from_str::<ScalarFunction<f64>>(r#"{"function":"cosh"}"#).is_err());
    }
}
