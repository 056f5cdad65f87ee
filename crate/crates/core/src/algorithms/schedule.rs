use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Step-size sequences `α_t`, all positive and non-increasing in `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepSchedule {
    /// `α_t = α₀`.
    Constant { alpha0: f64 },
    /// `α_t = 1/√T` for a fixed horizon `T`.
    RobustSqrt { horizon: usize },
    /// `α_t = β/(shift + t)`.
    DecayBetaLambda { beta: f64, shift: f64 },
    /// `α_t = 1/(c (t + 1))`.
    EigenDecay { c: f64 },
}

impl StepSchedule {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, v: f64| {
            Err(Error::config(
                format!("schedule.{field}"),
                format!("must be positive and finite, got {v}"),
            ))
        };
        match *self {
            StepSchedule::Constant { alpha0 } if !(alpha0 > 0.0 && alpha0.is_finite()) => {
                bad("alpha0", alpha0)
            }
            StepSchedule::RobustSqrt { horizon: 0 } => {
                Err(Error::config("schedule.horizon", "must be at least 1"))
            }
            StepSchedule::DecayBetaLambda { beta, .. } if !(beta > 0.0 && beta.is_finite()) => {
                bad("beta", beta)
            }
            StepSchedule::DecayBetaLambda { shift, .. } if !(shift > 0.0 && shift.is_finite()) => {
                bad("shift", shift)
            }
            StepSchedule::EigenDecay { c } if !(c > 0.0 && c.is_finite()) => bad("c", c),
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn alpha(&self, t: usize) -> f64 {
        match *self {
            StepSchedule::Constant { alpha0 } => alpha0,
            StepSchedule::RobustSqrt { horizon } => 1.0 / (horizon as f64).sqrt(),
            StepSchedule::DecayBetaLambda { beta, shift } => beta / (shift + t as f64),
            StepSchedule::EigenDecay { c } => 1.0 / (c * (t as f64 + 1.0)),
        }
    }

    /// Horizon baked into the schedule, if any.
    pub fn horizon(&self) -> Option<usize> {
        match *self {
            StepSchedule::RobustSqrt { horizon } => Some(horizon),
            _ => None,
        }
    }

    /// Same schedule re-targeted at horizon `t` (only `RobustSqrt` changes).
    pub fn with_horizon(&self, t: usize) -> Self {
        match *self {
            StepSchedule::RobustSqrt { .. } => StepSchedule::RobustSqrt { horizon: t },
            other => other,
        }
    }

    /// `β = 2/((1-γ)ω)`, shift `16/((1-γ)²ω)`.
    pub fn decay_for(gamma: f64, omega: f64) -> Self {
        StepSchedule::DecayBetaLambda {
            beta: 2.0 / ((1.0 - gamma) * omega),
            shift: 16.0 / ((1.0 - gamma).powi(2) * omega),
        }
    }

    /// `α_t = 1/(ω(t+1)(1-c))` for contraction modulus `c`.
    pub fn eigen_decay_for(contraction: f64, omega: f64) -> Self {
        StepSchedule::EigenDecay {
            c: omega * (1.0 - contraction),
        }
    }
}
