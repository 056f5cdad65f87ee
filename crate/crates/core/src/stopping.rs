//! Optimal stopping problems on a finite ergodic chain: continuation rewards
//! `u`, termination rewards `U`, the operator `FQ = u + γP max(U, Q)` and
//! dense dynamic-programming oracles.

use crate::error::{Error, Result};
use crate::mrp::{solve, MarkovRewardProcess, Matrix, Vector};

const VI_TOL: f64 = 1e-13;
const VI_MAX_ITERS: usize = 10_000_000;

#[derive(Debug, Clone)]
pub struct OptimalStoppingProblem {
    chain: MarkovRewardProcess,
    u: Vector,
    stop: Vector,
    r_max: f64,
}

impl OptimalStoppingProblem {
    /// The underlying chain is stored as an MRP whose transition reward is
    /// `R(s, s') = u(s)`, so sampled observations carry `u(s_t)` as their
    /// reward, matching the exploratory always-continue data policy.
    pub fn new(transition: Matrix, gamma: f64, u: Vector, stop: Vector) -> Result<Self> {
        let n = transition.nrows();
        if u.len() != n {
            return Err(Error::invalid("u", format!("expected {n} entries, got {}", u.len())));
        }
        if stop.len() != n {
            return Err(Error::invalid("U", format!("expected {n} entries, got {}", stop.len())));
        }
        if u.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("u", "entries must be finite"));
        }
        if stop.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("U", "entries must be finite"));
        }
        let reward = Matrix::from_fn(n, transition.ncols(), |s, _| u[s]);
        let chain = MarkovRewardProcess::new(transition, reward, gamma)?;
        let r_max = u.iter().chain(stop.iter()).fold(0.0_f64, |m, x| m.max(x.abs()));
        Ok(Self {
            chain,
            u,
            stop,
            r_max,
        })
    }

    pub fn n(&self) -> usize {
        self.chain.n()
    }

    pub fn gamma(&self) -> f64 {
        self.chain.gamma()
    }

    pub fn transition(&self) -> &Matrix {
        self.chain.transition()
    }

    /// The always-continue chain with `R(s, s') = u(s)`.
    pub fn chain(&self) -> &MarkovRewardProcess {
        &self.chain
    }

    pub fn continuation(&self) -> &Vector {
        &self.u
    }

    pub fn termination(&self) -> &Vector {
        &self.stop
    }

    /// `max(max |u|, max |U|)`.
    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// `(FQ)(s) = u(s) + γ Σ P(s'|s) max(U(s'), Q(s'))`.
    pub fn f_operator(&self, q: &Vector) -> Vector {
        let best = q.zip_map(&self.stop, |a, b| a.max(b));
        &self.u + (self.transition() * best) * self.gamma()
    }

    /// `Q*` by value iteration, finished with one policy-evaluation solve on
    /// the resulting stopping set when that solve is consistent and more
    /// accurate.
    pub fn q_star(&self) -> Result<Vector> {
        let gamma = self.gamma();
        let mut q = Vector::zeros(self.n());
        let mut converged = false;
        for _ in 0..VI_MAX_ITERS {
            let next = self.f_operator(&q);
            let change = (&next - &q).amax();
            q = next;
            if change * gamma <= VI_TOL * (1.0 - gamma) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NoConvergence {
                iterations: VI_MAX_ITERS,
            });
        }
        let stop_set = self.stopping_set(&q);
        if let Ok(polished) = self.continuation_values(&stop_set) {
            if self.stopping_set(&polished) == stop_set
                && (self.f_operator(&polished) - &polished).amax()
                    <= (self.f_operator(&q) - &q).amax()
            {
                return Ok(polished);
            }
        }
        Ok(q)
    }

    /// States where stopping is chosen against continuation estimates `q`
    /// (ties stop).
    pub fn stopping_set(&self, q: &Vector) -> Vec<bool> {
        self.stop.iter().zip(q.iter()).map(|(u, q)| u >= q).collect()
    }

    /// Continuation values when the states in `stop_set` stop:
    /// `Q = u + γP w`, `w(s) = U(s)` on the stopping set and `Q(s)` elsewhere.
    pub fn continuation_values(&self, stop_set: &[bool]) -> Result<Vector> {
        let n = self.n();
        let gamma = self.gamma();
        let p = self.transition();
        let mut a = Matrix::identity(n, n);
        let mut rhs = self.u.clone();
        for s in 0..n {
            for t in 0..n {
                if stop_set[t] {
                    rhs[s] += gamma * p[(s, t)] * self.stop[t];
                } else {
                    a[(s, t)] -= gamma * p[(s, t)];
                }
            }
        }
        solve(a, rhs, "stopping policy evaluation")
    }

    /// Value of the policy that stops at the first visit to `stop_set`,
    /// including time zero.
    pub fn policy_value(&self, stop_set: &[bool]) -> Result<Vector> {
        let q = self.continuation_values(stop_set)?;
        Ok(Vector::from_fn(self.n(), |s, _| {
            if stop_set[s] {
                self.stop[s]
            } else {
                q[s]
            }
        }))
    }

    /// `V*(s) = max(U(s), Q*(s))`.
    pub fn optimal_value(&self) -> Result<Vector> {
        let q = self.q_star()?;
        Ok(q.zip_map(&self.stop, |a, b| a.max(b)))
    }
}
