//! TD(0), projected TD(0), projected TD(λ) and Q-learning for optimal
//! stopping: per-sample update directions, their exact expectations, the
//! ball projection and the gradient-error diagnostic ζ.

mod runner;
mod schedule;

pub use runner::{
    mean_path_td, run_qlearn_optstop, run_td0, run_td_lambda, IterateState, Recording, RunConfig,
    RunOutput, StepRecord, Variant, CSV_HEADER,
};
#[cfg(test)]
pub(crate) use runner::mean_path;
pub use schedule::StepSchedule;

use crate::error::Result;
use crate::mrp::{FeatureMap, Instance, Vector};
use crate::sampling::Observation;
use crate::stopping::OptimalStoppingProblem;

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `δ = r + γφ(s')ᵀθ - φ(s)ᵀθ`.
#[inline]
pub fn td_error(theta: &[f64], obs: &Observation, features: &FeatureMap, gamma: f64) -> f64 {
    obs.r + gamma * dot(features.row(obs.s_next), theta) - dot(features.row(obs.s), theta)
}

/// Optimal-stopping temporal difference with the observation reward read as
/// `u(s)`: `u(s) + γ max(U(s'), φ(s')ᵀθ) - φ(s)ᵀθ`.
#[inline]
pub fn optstop_td_error(
    theta: &[f64],
    obs: &Observation,
    problem: &OptimalStoppingProblem,
    features: &FeatureMap,
) -> f64 {
    let cont = dot(features.row(obs.s_next), theta);
    let best = problem.termination()[obs.s_next].max(cont);
    obs.r + problem.gamma() * best - dot(features.row(obs.s), theta)
}

/// `g = (r + γφ(s')ᵀθ - φ(s)ᵀθ) φ(s)`.
pub fn td0_gradient(theta: &Vector, obs: &Observation, features: &FeatureMap, gamma: f64) -> Vector {
    let delta = td_error(theta.as_slice(), obs, features, gamma);
    Vector::from_column_slice(features.row(obs.s)) * delta
}

/// Stopping update with `obs.r = u(s)`.
pub fn qlearn_optstop_gradient(
    theta: &Vector,
    obs: &Observation,
    problem: &OptimalStoppingProblem,
    features: &FeatureMap,
) -> Vector {
    let delta = optstop_td_error(theta.as_slice(), obs, problem, features);
    Vector::from_column_slice(features.row(obs.s)) * delta
}

/// `ḡ(θ) = ΦᵀD(T Φθ - Φθ)`.
pub fn gbar(theta: &Vector, inst: &Instance) -> Vector {
    let v = inst.features.value(theta);
    let err = inst.mrp.bellman(&v) - v;
    inst.geometry.weighted_features(&inst.features, &err)
}

/// `x̄(θ) = ΦᵀD(T^(λ)Φθ - Φθ)`.
pub fn xbar_lambda(theta: &Vector, inst: &Instance, lambda: f64) -> Result<Vector> {
    let v = inst.features.value(theta);
    let err = inst.mrp.bellman_lambda(lambda, &v)? - v;
    Ok(inst.geometry.weighted_features(&inst.features, &err))
}

/// `ΦᵀD(FΦθ - Φθ)`; `inst` carries the stopping problem's chain.
pub fn gbar_optstop(theta: &Vector, problem: &OptimalStoppingProblem, inst: &Instance) -> Vector {
    let q = inst.features.value(theta);
    let err = problem.f_operator(&q) - q;
    inst.geometry.weighted_features(&inst.features, &err)
}

/// Exact stationary second moment `Σ_{s,s'} π(s)P(s'|s) ‖g(θ; s, s')‖²` of a
/// scalar-times-feature update whose scalar is `delta(θ, s, s')`.
pub fn stationary_second_moment(
    inst: &Instance,
    delta: impl Fn(&Observation) -> f64,
) -> f64 {
    let n = inst.n();
    let p = inst.mrp.transition();
    let pi = inst.geometry.pi();
    let mut total = 0.0;
    for s in 0..n {
        let phi_sq = dot(inst.features.row(s), inst.features.row(s));
        for s_next in 0..n {
            let w = pi[s] * p[(s, s_next)];
            if w == 0.0 {
                continue;
            }
            let obs = Observation {
                s,
                r: inst.mrp.reward()[(s, s_next)],
                s_next,
            };
            let d = delta(&obs);
            total += w * d * d * phi_sq;
        }
    }
    total
}

/// `E‖g(θ)‖²` under the stationary tuple distribution, by enumeration.
pub fn td0_second_moment(theta: &Vector, inst: &Instance) -> f64 {
    stationary_second_moment(inst, |o| td_error(theta.as_slice(), o, &inst.features, inst.gamma()))
}

/// Optimal-stopping analogue of [`td0_second_moment`].
pub fn optstop_second_moment(theta: &Vector, problem: &OptimalStoppingProblem, inst: &Instance) -> f64 {
    stationary_second_moment(inst, |o| optstop_td_error(theta.as_slice(), o, problem, &inst.features))
}

/// Euclidean projection onto the ball of radius `radius`.
pub fn project_ball(theta: &Vector, radius: f64) -> Vector {
    let mut out = theta.clone();
    project_ball_in_place(out.as_mut_slice(), radius);
    out
}

#[inline]
pub(crate) fn project_ball_in_place(theta: &mut [f64], radius: f64) {
    let norm = dot(theta, theta).sqrt();
    if norm > radius {
        let scale = radius / norm;
        theta.iter_mut().for_each(|x| *x *= scale);
    }
}

/// `ζ(θ) = (g(θ) - ḡ(θ))ᵀ(θ - θ*)` for one observation.
pub fn zeta_diagnostic(theta: &Vector, obs: &Observation, inst: &Instance, theta_star: &Vector) -> f64 {
    zeta_given_mean(theta, obs, inst, &gbar(theta, inst), theta_star)
}

/// [`zeta_diagnostic`] with `ḡ(θ)` supplied by the caller.
pub fn zeta_given_mean(
    theta: &Vector,
    obs: &Observation,
    inst: &Instance,
    gbar_theta: &Vector,
    theta_star: &Vector,
) -> f64 {
    (td0_gradient(theta, obs, &inst.features, inst.gamma()) - gbar_theta).dot(&(theta - theta_star))
}

/// TD(λ) error function `(δ(θ) z - x̄(θ))ᵀ(θ - θ*)` for a given trace `z`.
pub fn zeta_lambda(
    theta: &Vector,
    obs: &Observation,
    trace: &Vector,
    inst: &Instance,
    xbar_theta: &Vector,
    theta_star: &Vector,
) -> f64 {
    let delta = td_error(theta.as_slice(), obs, &inst.features, inst.gamma());
    (trace * delta - xbar_theta).dot(&(theta - theta_star))
}

/// Trace `z_{l:t} = Σ_{k=l}^{t} (γλ)^{t-k} φ(s_k)` over `states[l..=t]`.
pub fn truncated_trace(features: &FeatureMap, states: &[usize], decay: f64) -> Vector {
    let mut z = Vector::zeros(features.d());
    for &s in states {
        z *= decay;
        z += Vector::from_column_slice(features.row(s));
    }
    z
}
