//! Limit points of TD(0), TD(λ) and Q-learning for optimal stopping, and the
//! approximation-error / policy-suboptimality guarantees attached to them.

use serde::Serialize;

use crate::algorithms::{gbar, gbar_optstop, xbar_lambda};
use crate::error::{Error, Result};
use crate::mrp::{check_lambda, solve, solve_matrix, Instance, Matrix, Vector};
use crate::stopping::OptimalStoppingProblem;

const REFINE_STEPS: usize = 3;
const POLISH_STEPS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    LinearSolve,
    ContractionIteration,
}

#[derive(Debug, Clone, Serialize)]
pub struct FixedPointResult {
    #[serde(serialize_with = "crate::serialize_vector")]
    pub theta_star: Vector,
    /// `‖expected update at θ*‖₂`.
    pub residual: f64,
    pub method: Method,
    pub iterations: usize,
}

/// Expected update written as the affine map `θ ↦ Aθ + b`.
#[derive(Debug, Clone)]
pub struct AffineUpdate {
    pub a: Matrix,
    pub b: Vector,
}

impl AffineUpdate {
    pub fn apply(&self, theta: &Vector) -> Vector {
        &self.a * theta + &self.b
    }

    /// Solves `Aθ = -b`, then applies a few steps of iterative refinement.
    fn solve_root(&self) -> Result<Vector> {
        let mut theta = solve(self.a.clone(), -&self.b, "expected-update matrix")?;
        for _ in 0..REFINE_STEPS {
            let r = self.apply(&theta);
            if r.amax() == 0.0 {
                break;
            }
            theta -= solve(self.a.clone(), r, "expected-update matrix")?;
        }
        Ok(theta)
    }
}

/// `A = ΦᵀD(γP - I)Φ`, `b = ΦᵀDR̄`.
pub fn td0_system(inst: &Instance) -> AffineUpdate {
    let phi = inst.features.matrix();
    let pi = inst.geometry.pi();
    let gamma = inst.gamma();
    let p_phi = inst.mrp.transition() * phi;
    let inner = p_phi * gamma - phi;
    let a = weighted_tr_mul(phi, pi, &inner);
    let b = inst.geometry.weighted_features(&inst.features, &inst.mrp.expected_reward());
    AffineUpdate { a, b }
}

/// `x̄(θ) = ΦᵀD(T^(λ)Φθ - Φθ)` as an affine map via the closed form of `T^(λ)`.
pub fn td_lambda_system(inst: &Instance, lambda: f64) -> Result<AffineUpdate> {
    check_lambda(lambda)?;
    let phi = inst.features.matrix();
    let pi = inst.geometry.pi();
    let gamma = inst.gamma();
    let n = inst.n();
    let p = inst.mrp.transition();
    let resolvent = Matrix::identity(n, n) - p * (gamma * lambda);
    let m = solve_matrix(resolvent.clone(), p * phi, "I - gamma lambda P")?;
    let c = solve(resolvent, inst.mrp.expected_reward(), "I - gamma lambda P")?;
    let inner = m * (gamma * (1.0 - lambda)) - phi;
    let a = weighted_tr_mul(phi, pi, &inner);
    let b = inst.geometry.weighted_features(&inst.features, &c);
    Ok(AffineUpdate { a, b })
}

fn weighted_tr_mul(phi: &Matrix, pi: &Vector, m: &Matrix) -> Matrix {
    let mut dm = m.clone();
    for (s, mut row) in dm.row_iter_mut().enumerate() {
        row *= pi[s];
    }
    phi.tr_mul(&dm)
}

pub fn td0_fixed_point(inst: &Instance) -> Result<FixedPointResult> {
    let theta_star = td0_system(inst).solve_root()?;
    let residual = gbar(&theta_star, inst).norm();
    Ok(FixedPointResult {
        theta_star,
        residual,
        method: Method::LinearSolve,
        iterations: 0,
    })
}

pub fn td_lambda_fixed_point(inst: &Instance, lambda: f64) -> Result<FixedPointResult> {
    let theta_star = td_lambda_system(inst, lambda)?.solve_root()?;
    let residual = xbar_lambda(&theta_star, inst, lambda)?.norm();
    Ok(FixedPointResult {
        theta_star,
        residual,
        method: Method::LinearSolve,
        iterations: 0,
    })
}

/// Fixed point of `Π_D F` together with the D-norm displacement of every
/// contraction step (used to check the contraction rate).
#[derive(Debug, Clone)]
pub struct OptStopSolution {
    pub result: FixedPointResult,
    pub displacements: Vec<f64>,
}

/// Runs `θ_{k+1} = Σ⁻¹ΦᵀD F(Φθ_k)` from zero until the a-posteriori bound
/// `‖θ_{k+1} - θ_k‖₂ / (1 - γ)` drops below `tol`, then polishes the result by
/// solving the projected equation on the stopping set it induces.
pub fn optstop_fixed_point(
    problem: &OptimalStoppingProblem,
    inst: &Instance,
    tol: f64,
) -> Result<FixedPointResult> {
    Ok(optstop_fixed_point_traced(problem, inst, tol)?.result)
}

pub fn optstop_fixed_point_traced(
    problem: &OptimalStoppingProblem,
    inst: &Instance,
    tol: f64,
) -> Result<OptStopSolution> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", format!("must be positive, got {tol}")));
    }
    let gamma = problem.gamma();
    let step = |theta: &Vector| {
        let q = inst.features.value(theta);
        inst.geometry
            .project_coefficients(&inst.features, &problem.f_operator(&q))
    };

    let mut theta = Vector::zeros(inst.d());
    let mut next = step(&theta);
    let c0 = (&next - &theta).norm();
    // Euclidean displacements shrink like γ^k in the D-norm image, which is
    // within a factor 1/√ω of the Euclidean norm.
    let limit = if c0 <= tol * (1.0 - gamma) || gamma == 0.0 {
        2
    } else {
        let k = ((tol * (1.0 - gamma) * inst.geometry.omega().sqrt() / c0).ln() / gamma.ln())
            .ceil()
            .max(0.0) as usize;
        k + 100
    };

    let mut displacements = Vec::new();
    let mut iterations = 1;
    loop {
        let delta = &next - &theta;
        displacements.push(inst.geometry.sigma_norm(&delta));
        theta = next;
        if delta.norm() / (1.0 - gamma) <= tol {
            break;
        }
        if iterations >= limit {
            return Err(Error::NoConvergence { iterations });
        }
        next = step(&theta);
        iterations += 1;
    }

    let theta_star = polish_optstop(problem, inst, theta);
    let residual = gbar_optstop(&theta_star, problem, inst).norm();
    Ok(OptStopSolution {
        result: FixedPointResult {
            theta_star,
            residual,
            method: Method::ContractionIteration,
            iterations,
        },
        displacements,
    })
}

/// With the stopping set `S = {s : U(s) ≥ φ(s)ᵀθ}` held fixed the projected
/// equation is linear; solve it and keep the answer while it is
/// self-consistent and reduces the expected-update residual.
fn polish_optstop(problem: &OptimalStoppingProblem, inst: &Instance, start: Vector) -> Vector {
    let phi = inst.features.matrix();
    let pi = inst.geometry.pi();
    let gamma = problem.gamma();
    let p = problem.transition();
    let n = problem.n();

    let mut best_res = gbar_optstop(&start, problem, inst).norm();
    let mut best = start;
    for _ in 0..POLISH_STEPS {
        let q = inst.features.value(&best);
        let stop_set = problem.stopping_set(&q);
        let mut cont_phi = phi.clone();
        let mut stop_reward = Vector::zeros(n);
        for s in 0..n {
            if stop_set[s] {
                cont_phi.row_mut(s).fill(0.0);
                stop_reward[s] = problem.termination()[s];
            }
        }
        let inner = (p * cont_phi) * gamma - phi;
        let a = weighted_tr_mul(phi, pi, &inner);
        let target = problem.continuation() + (p * stop_reward) * gamma;
        let b = inst.geometry.weighted_features(&inst.features, &target);
        let candidate = match (AffineUpdate { a, b }).solve_root() {
            Ok(c) => c,
            Err(_) => break,
        };
        let res = gbar_optstop(&candidate, problem, inst).norm();
        if res < best_res {
            best_res = res;
            best = candidate;
        } else {
            break;
        }
    }
    best
}

/// `κ = γ(1-λ)/(1-γλ)`, the contraction modulus of `Π_D T^(λ)`.
pub fn kappa(gamma: f64, lambda: f64) -> f64 {
    gamma * (1.0 - lambda) / (1.0 - gamma * lambda)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ApproxKind {
    Td0,
    TdLambda(f64),
    OptStop,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ApproximationError {
    /// `(1/√(1-c²)) ‖Π_D V - V‖_D`.
    pub bound: f64,
    /// `‖Φθ* - V‖_D` for the computed fixed point.
    pub actual: f64,
}

impl ApproximationError {
    pub fn holds(&self, slack: f64) -> bool {
        self.actual <= self.bound + slack
    }
}

/// Compares the limit `Φθ*` with its target (`V_μ` for TD, `Q*` for optimal
/// stopping) against the projection-residual guarantee with modulus
/// `c = γ` or `c = κ(γ, λ)`.
pub fn approximation_error_bound(
    kind: ApproxKind,
    inst: &Instance,
    theta_star: &Vector,
    target: &Vector,
) -> ApproximationError {
    let c = match kind {
        ApproxKind::Td0 | ApproxKind::OptStop => inst.gamma(),
        ApproxKind::TdLambda(lambda) => kappa(inst.gamma(), lambda),
    };
    let projected = inst.geometry.project(&inst.features, target);
    let residual = inst.geometry.d_norm(&(projected - target));
    let actual = inst.geometry.d_norm(&(inst.features.value(theta_star) - target));
    ApproximationError {
        bound: residual / (1.0 - c * c).sqrt(),
        actual,
    }
}

/// `2/((1-γ)√(1-γ²)) ‖Π_D Q* - Q*‖_D`.
pub fn policy_suboptimality_bound_from_residual(gamma: f64, residual: f64) -> f64 {
    2.0 / ((1.0 - gamma) * (1.0 - gamma * gamma).sqrt()) * residual
}

pub fn policy_suboptimality_bound(problem: &OptimalStoppingProblem, inst: &Instance) -> Result<f64> {
    let q_star = problem.q_star()?;
    let projected = inst.geometry.project(&inst.features, &q_star);
    let residual = inst.geometry.d_norm(&(projected - q_star));
    Ok(policy_suboptimality_bound_from_residual(problem.gamma(), residual))
}

/// `E_π[V*(s₀)] - E_π[V_μ̃(s₀)]` where `μ̃` stops once `U(s) ≥ (Φθ)(s)`.
pub fn policy_gap(problem: &OptimalStoppingProblem, inst: &Instance, theta: &Vector) -> Result<f64> {
    let v_star = problem.optimal_value()?;
    let stop_set = problem.stopping_set(&inst.features.value(theta));
    let v_policy = problem.policy_value(&stop_set)?;
    Ok(inst.geometry.pi().dot(&(v_star - v_policy)))
}
