//! Closed-form finite-time bounds for mean-path TD, TD(0) under i.i.d. and
//! Markov observations, and projected TD(λ), with the constants they use.

use serde::{Deserialize, Serialize};

use crate::algorithms::td0_second_moment;
use crate::error::{Error, Result};
use crate::fixed_point::kappa;
use crate::mrp::{Instance, Vector};
use crate::sampling::{geometric_threshold, MixingProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundKind {
    T1Avg,
    T1Geo,
    T2a,
    T2b,
    T2c,
    T3a,
    T3b,
    T3c,
    T4a,
    T4b,
    T4c,
}

impl BoundKind {
    pub const ALL: [BoundKind; 11] = [
        BoundKind::T1Avg,
        BoundKind::T1Geo,
        BoundKind::T2a,
        BoundKind::T2b,
        BoundKind::T2c,
        BoundKind::T3a,
        BoundKind::T3b,
        BoundKind::T3c,
        BoundKind::T4a,
        BoundKind::T4b,
        BoundKind::T4c,
    ];

    /// True when the bound controls `‖Φθ̄_T - Φθ*‖²_D` (averaged iterate);
    /// otherwise it controls `‖θ_T - θ*‖²₂`.
    pub fn uses_average(&self) -> bool {
        matches!(
            self,
            BoundKind::T1Avg
                | BoundKind::T2a
                | BoundKind::T3a
                | BoundKind::T3c
                | BoundKind::T4a
                | BoundKind::T4c
        )
    }

    pub fn name(&self) -> &'static str {
        match self {
            BoundKind::T1Avg => "T1_avg",
            BoundKind::T1Geo => "T1_geo",
            BoundKind::T2a => "T2a",
            BoundKind::T2b => "T2b",
            BoundKind::T2c => "T2c",
            BoundKind::T3a => "T3a",
            BoundKind::T3b => "T3b",
            BoundKind::T3c => "T3c",
            BoundKind::T4a => "T4a",
            BoundKind::T4b => "T4b",
            BoundKind::T4c => "T4c",
        }
    }
}

/// Instance constants entering the bounds.
#[derive(Debug, Clone, Serialize)]
pub struct BoundConstants {
    pub sigma_sq: f64,
    /// `r_max + 2R` (zero-radius placeholder when no projection is used).
    pub g: f64,
    /// `G / (1 - γλ)`.
    pub b: f64,
    pub omega: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub kappa: f64,
    pub radius: f64,
    pub r_max: f64,
    pub theta_star_norm: f64,
    pub mixing_m: Option<f64>,
    pub mixing_rho: Option<f64>,
}

impl BoundConstants {
    /// `sigma_sq` is passed in so that the stopping-problem second moment can
    /// be used in place of the TD(0) one.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        gamma: f64,
        omega: f64,
        r_max: f64,
        sigma_sq: f64,
        theta_star: &Vector,
        radius: Option<f64>,
        lambda: f64,
        mixing: Option<&MixingProfile>,
    ) -> Self {
        let radius = radius.unwrap_or(0.0);
        let g = r_max + 2.0 * radius;
        Self {
            sigma_sq,
            g,
            b: g / (1.0 - gamma * lambda),
            omega,
            gamma,
            lambda,
            kappa: kappa(gamma, lambda),
            radius,
            r_max,
            theta_star_norm: theta_star.norm(),
            mixing_m: mixing.map(|p| p.m),
            mixing_rho: mixing.map(|p| p.rho),
        }
    }

    /// Constants for TD(0) / TD(λ) on an instance with `σ²` from exact
    /// enumeration at `theta_star`.
    pub fn for_instance(
        inst: &Instance,
        theta_star: &Vector,
        radius: Option<f64>,
        lambda: f64,
        mixing: Option<&MixingProfile>,
    ) -> Self {
        Self::new(
            inst.gamma(),
            inst.geometry.omega(),
            inst.mrp.r_max(),
            sigma_sq(inst, theta_star),
            theta_star,
            radius,
            lambda,
            mixing,
        )
    }

    fn mixing(&self) -> Result<(f64, f64)> {
        match (self.mixing_m, self.mixing_rho) {
            (Some(m), Some(rho)) => Ok((m, rho)),
            _ => Err(Error::config("mixing", "Markov-model bounds need a mixing profile")),
        }
    }

    pub fn tau(&self, eps: f64) -> Result<usize> {
        let (m, rho) = self.mixing()?;
        Ok(geometric_threshold(m, rho, eps))
    }

    pub fn tau_lambda(&self, eps: f64) -> Result<usize> {
        let gl = self.gamma * self.lambda;
        let algo = if gl == 0.0 { 0 } else { geometric_threshold(1.0, gl, eps) };
        Ok(self.tau(eps)?.max(algo))
    }
}

/// `σ² = Σ_{s,s'} π(s)P(s'|s) ‖g(θ*; s, s')‖²`.
pub fn sigma_sq(inst: &Instance, theta_star: &Vector) -> f64 {
    td0_second_moment(theta_star, inst)
}

/// `2 r_max / (√ω (1-γ)^{3/2})`, an upper bound on `‖θ*‖₂`.
pub fn projection_radius_bound(r_max: f64, gamma: f64, omega: f64) -> f64 {
    2.0 * r_max / (omega.sqrt() * (1.0 - gamma).powf(1.5))
}

/// Right-hand side of the selected bound. `d0 = ‖θ* - θ₀‖²₂`; `alpha0` is
/// required for the constant-step parts (b). Violated preconditions are
/// configuration errors.
pub fn theorem_bound(
    kind: BoundKind,
    c: &BoundConstants,
    d0: f64,
    horizon: usize,
    alpha0: Option<f64>,
) -> Result<f64> {
    evaluate(kind, c, d0, horizon, alpha0, true)
}

/// The displayed formula without the theorem's preconditions on `T`, `α₀`
/// and `R` (inputs such as `alpha0` and mixing constants are still needed).
pub fn theorem_formula(
    kind: BoundKind,
    c: &BoundConstants,
    d0: f64,
    horizon: usize,
    alpha0: Option<f64>,
) -> Result<f64> {
    evaluate(kind, c, d0, horizon, alpha0, false)
}

fn evaluate(
    kind: BoundKind,
    c: &BoundConstants,
    d0: f64,
    horizon: usize,
    alpha0: Option<f64>,
    check: bool,
) -> Result<f64> {
    if horizon == 0 {
        return Err(Error::config("horizon", "must be at least 1"));
    }
    let t = horizon as f64;
    let gamma = c.gamma;
    let omega = c.omega;
    let need_alpha = || {
        alpha0
            .filter(|a| *a > 0.0)
            .ok_or_else(|| Error::config("alpha0", format!("{} needs a positive constant step", kind.name())))
    };
    let need_radius = || {
        if check && c.radius < c.theta_star_norm {
            Err(Error::config(
                "radius",
                format!(
                    "{} needs R >= ||theta*|| = {}, got {}",
                    kind.name(),
                    c.theta_star_norm,
                    c.radius
                ),
            ))
        } else {
            Ok(())
        }
    };
    let g2 = c.g * c.g;
    let b2 = c.b * c.b;
    let k = c.kappa;

    let value = match kind {
        BoundKind::T1Avg => 4.0 * d0 / (t * (1.0 - gamma).powi(2)),
        BoundKind::T1Geo => (-(1.0 - gamma).powi(2) * omega / 4.0 * t).exp() * d0,
        BoundKind::T2a => {
            let need = (8.0 / (1.0 - gamma)).powi(2);
            if check && t < need {
                return Err(Error::config(
                    "horizon",
                    format!("T2a needs T >= (8/(1-gamma))^2 = {need}, got {horizon}"),
                ));
            }
            (d0 + 2.0 * c.sigma_sq) / (t.sqrt() * (1.0 - gamma))
        }
        BoundKind::T2b => {
            let a = need_alpha()?;
            let cap = omega * (1.0 - gamma) / 8.0;
            if check && a > cap {
                return Err(Error::config(
                    "alpha0",
                    format!("T2b needs alpha0 <= omega(1-gamma)/8 = {cap}, got {a}"),
                ));
            }
            (-a * (1.0 - gamma) * omega * t).exp() * d0
                + a * 2.0 * c.sigma_sq / ((1.0 - gamma) * omega)
        }
        BoundKind::T2c => {
            let shift = 16.0 / ((1.0 - gamma).powi(2) * omega);
            let nu = (8.0 * c.sigma_sq / ((1.0 - gamma).powi(2) * omega * omega))
                .max(16.0 * d0 / ((1.0 - gamma).powi(2) * omega));
            nu / (shift + t)
        }
        BoundKind::T3a => {
            need_radius()?;
            let tau = c.tau(1.0 / t.sqrt())? as f64;
            (d0 + g2 * (9.0 + 12.0 * tau)) / (2.0 * t.sqrt() * (1.0 - gamma))
        }
        BoundKind::T3b => {
            need_radius()?;
            let a = need_alpha()?;
            let cap = 1.0 / (2.0 * omega * (1.0 - gamma));
            if check && a >= cap {
                return Err(Error::config(
                    "alpha0",
                    format!("T3b needs alpha0 < 1/(2 omega (1-gamma)) = {cap}, got {a}"),
                ));
            }
            let tau = c.tau(a)? as f64;
            (-2.0 * a * (1.0 - gamma) * omega * t).exp() * d0
                + a * g2 * (9.0 + 12.0 * tau) / (2.0 * (1.0 - gamma) * omega)
        }
        BoundKind::T3c => {
            need_radius()?;
            let alpha_t = 1.0 / (omega * (t + 1.0) * (1.0 - gamma));
            let tau = c.tau(alpha_t)? as f64;
            g2 * (9.0 + 24.0 * tau) / (t * (1.0 - gamma).powi(2) * omega) * (1.0 + t.ln())
        }
        BoundKind::T4a => {
            need_radius()?;
            let tau = c.tau_lambda(1.0 / t.sqrt())? as f64;
            (d0 + b2 * (13.0 + 28.0 * tau)) / (2.0 * t.sqrt() * (1.0 - k))
        }
        BoundKind::T4b => {
            need_radius()?;
            let a = need_alpha()?;
            let cap = 1.0 / (2.0 * omega * (1.0 - k));
            if check && a >= cap {
                return Err(Error::config(
                    "alpha0",
                    format!("T4b needs alpha0 < 1/(2 omega (1-kappa)) = {cap}, got {a}"),
                ));
            }
            let tau = c.tau_lambda(a)?;
            if check && horizon <= 2 * tau {
                return Err(Error::config(
                    "horizon",
                    format!("T4b needs T > 2 tau_lambda(alpha0) = {}, got {horizon}", 2 * tau),
                ));
            }
            let tau = tau as f64;
            (-2.0 * a * (1.0 - k) * omega * t).exp() * d0
                + a * b2 * (13.0 + 24.0 * tau) / (2.0 * (1.0 - k) * omega)
        }
        BoundKind::T4c => {
            need_radius()?;
            let alpha_t = 1.0 / (omega * (t + 1.0) * (1.0 - k));
            let tau = c.tau_lambda(alpha_t)? as f64;
            b2 * (13.0 + 52.0 * tau) / (t * (1.0 - k).powi(2) * omega) * (1.0 + t.ln())
        }
    };
    Ok(value)
}
