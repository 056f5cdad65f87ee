//! Finite Markov reward processes, linear feature maps and the steady-state
//! geometry (stationary distribution, feature covariance, weighted norms and
//! the weighted projection onto the feature span).

use std::collections::VecDeque;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Row-sum tolerance for transition matrices.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// Feature rows may exceed unit norm by at most this much.
pub const FEATURE_NORM_TOL: f64 = 1e-12;
/// Smallest admissible eigenvalue of the feature covariance.
pub const OMEGA_FLOOR: f64 = 1e-12;

const DIRECT_SOLVE_MAX_STATES: usize = 2000;
const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITERS: usize = 1_000_000;

/// A finite Markov reward process `(S, P, R, gamma)`.
///
/// Construction validates stochasticity of `P`, ergodicity of the chain and
/// `gamma < 1`; the reward bound `r_max = max |R(s, s')|` is cached.
#[derive(Debug, Clone)]
pub struct MarkovRewardProcess {
    transition: Matrix,
    reward: Matrix,
    gamma: f64,
    r_max: f64,
}

impl MarkovRewardProcess {
    pub fn new(transition: Matrix, reward: Matrix, gamma: f64) -> Result<Self> {
        validate_stochastic(&transition)?;
        if reward.shape() != transition.shape() {
            return Err(Error::invalid(
                "R",
                format!(
                    "expected {0}x{0} reward matrix, got {1}x{2}",
                    transition.nrows(),
                    reward.nrows(),
                    reward.ncols()
                ),
            ));
        }
        if let Some((i, j)) = first_non_finite(&reward) {
            return Err(Error::invalid("R", format!("entry ({i},{j}) is not finite")));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::invalid("gamma", format!("must lie in [0, 1), got {gamma}")));
        }
        check_ergodic(&transition)?;
        let r_max = reward.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
        Ok(Self {
            transition,
            reward,
            gamma,
            r_max,
        })
    }

    pub fn n(&self) -> usize {
        self.transition.nrows()
    }

    pub fn transition(&self) -> &Matrix {
        &self.transition
    }

    pub fn reward(&self) -> &Matrix {
        &self.reward
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// `R̄(s) = Σ_{s'} P(s'|s) R(s, s')`.
    pub fn expected_reward(&self) -> Vector {
        let n = self.n();
        Vector::from_fn(n, |s, _| {
            (0..n)
                .map(|t| self.transition[(s, t)] * self.reward[(s, t)])
                .sum()
        })
    }

    /// Solves `(I - gamma P) V = R̄` for the exact value function.
    pub fn true_value_function(&self) -> Result<Vector> {
        let n = self.n();
        let a = Matrix::identity(n, n) - &self.transition * self.gamma;
        solve(a, self.expected_reward(), "I - gamma P")
    }

    /// `(T V)(s) = R̄(s) + gamma Σ P(s'|s) V(s')`.
    pub fn bellman(&self, v: &Vector) -> Vector {
        self.expected_reward() + (&self.transition * v) * self.gamma
    }

    /// The lambda-averaged Bellman operator in closed form,
    /// `(I - gamma lambda P)^{-1} (R̄ + gamma (1 - lambda) P V)`.
    pub fn bellman_lambda(&self, lambda: f64, v: &Vector) -> Result<Vector> {
        check_lambda(lambda)?;
        let n = self.n();
        let gl = self.gamma * lambda;
        let a = Matrix::identity(n, n) - &self.transition * gl;
        let rhs = self.expected_reward() + (&self.transition * v) * (self.gamma * (1.0 - lambda));
        solve(a, rhs, "I - gamma lambda P")
    }
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::invalid("lambda", format!("must lie in [0, 1], got {lambda}")));
    }
    Ok(())
}

fn first_non_finite(m: &Matrix) -> Option<(usize, usize)> {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if !m[(i, j)].is_finite() {
                return Some((i, j));
            }
        }
    }
    None
}

fn validate_stochastic(p: &Matrix) -> Result<()> {
    let n = p.nrows();
    if n == 0 {
        return Err(Error::invalid("P", "need at least one state"));
    }
    if p.ncols() != n {
        return Err(Error::invalid("P", format!("must be square, got {}x{}", n, p.ncols())));
    }
    for i in 0..n {
        let mut sum = 0.0;
        for j in 0..n {
            let x = p[(i, j)];
            if !x.is_finite() || x < 0.0 {
                return Err(Error::invalid(
                    "P",
                    format!("entry ({i},{j}) = {x} is not a probability"),
                ));
            }
            sum += x;
        }
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::invalid("P", format!("row {i} sums to {sum}, expected 1")));
        }
    }
    Ok(())
}

/// Irreducibility by forward/backward reachability from state 0 on the support
/// graph, aperiodicity by the gcd of BFS level differences along every edge.
pub fn check_ergodic(p: &Matrix) -> Result<()> {
    let n = p.nrows();
    let succ: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| p[(i, j)] > 0.0).collect())
        .collect();
    let mut pred = vec![Vec::new(); n];
    for (i, row) in succ.iter().enumerate() {
        for &j in row {
            pred[j].push(i);
        }
    }

    let levels = bfs_levels(&succ);
    if let Some(s) = levels.iter().position(Option::is_none) {
        return Err(Error::NotErgodic(format!(
            "reducible: state {s} is not reachable from state 0"
        )));
    }
    if let Some(s) = bfs_levels(&pred).iter().position(Option::is_none) {
        return Err(Error::NotErgodic(format!(
            "reducible: state 0 is not reachable from state {s}"
        )));
    }

    if (0..n).any(|s| p[(s, s)] > 0.0) {
        return Ok(());
    }
    let level: Vec<usize> = levels.into_iter().map(|l| l.unwrap()).collect();
    let mut period = 0usize;
    for (u, row) in succ.iter().enumerate() {
        for &v in row {
            period = gcd(period, level[u] + 1 - level[v]);
        }
    }
    if period != 1 {
        return Err(Error::NotErgodic(format!("periodic with period {period}")));
    }
    Ok(())
}

fn bfs_levels(adj: &[Vec<usize>]) -> Vec<Option<usize>> {
    let mut level = vec![None; adj.len()];
    let mut queue = VecDeque::new();
    level[0] = Some(0);
    queue.push_back(0);
    while let Some(u) = queue.pop_front() {
        let next = level[u].unwrap() + 1;
        for &v in &adj[u] {
            if level[v].is_none() {
                level[v] = Some(next);
                queue.push_back(v);
            }
        }
    }
    level
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Stationary distribution of an ergodic chain.
///
/// Solves `[Pᵀ - I; 1ᵀ] π = [0; 1]` directly (the last balance row is replaced
/// by the normalisation constraint) and falls back to power iteration when the
/// direct solve is unavailable or inaccurate.
pub fn stationary_distribution(p: &Matrix) -> Result<Vector> {
    validate_stochastic(p)?;
    check_ergodic(p)?;
    let n = p.nrows();
    if n <= DIRECT_SOLVE_MAX_STATES {
        let mut a = p.transpose() - Matrix::identity(n, n);
        a.row_mut(n - 1).fill(1.0);
        let mut b = Vector::zeros(n);
        b[n - 1] = 1.0;
        if let Ok(mut pi) = solve(a, b, "stationary balance") {
            let sum = pi.sum();
            pi /= sum;
            if pi.iter().all(|&x| x > 0.0) && stationarity_residual(p, &pi) <= 1e-10 {
                return Ok(pi);
            }
        }
    }
    stationary_distribution_power(p)
}

/// Power iteration `π ← πP` from the uniform distribution, stopping when the
/// L1 change drops below 1e-12.
pub fn stationary_distribution_power(p: &Matrix) -> Result<Vector> {
    let n = p.nrows();
    let pt = p.transpose();
    let mut pi = Vector::from_element(n, 1.0 / n as f64);
    for _ in 0..POWER_MAX_ITERS {
        let mut next = &pt * &pi;
        let sum = next.sum();
        next /= sum;
        let change = (&next - &pi).lp_norm(1);
        pi = next;
        if change <= POWER_TOL {
            return Ok(pi);
        }
    }
    Err(Error::NoConvergence {
        iterations: POWER_MAX_ITERS,
    })
}

/// `max_s |(πP)(s) - π(s)|`.
pub fn stationarity_residual(p: &Matrix, pi: &Vector) -> f64 {
    (p.tr_mul(pi) - pi).amax()
}

/// Linear feature architecture `Φ ∈ R^{n×d}`, row `s` being `φ(s)ᵀ`.
#[derive(Debug, Clone)]
pub struct FeatureMap {
    phi: Matrix,
    rows: Vec<f64>,
}

impl FeatureMap {
    /// Rejects rows with `‖φ(s)‖₂ > 1` and rank-deficient `Φ`; see
    /// [`normalize_features`] for a rescaling helper.
    pub fn new(phi: Matrix) -> Result<Self> {
        let (n, d) = phi.shape();
        if n == 0 || d == 0 {
            return Err(Error::invalid("Phi", "feature matrix must be non-empty"));
        }
        if d > n {
            return Err(Error::invalid(
                "Phi",
                format!("d = {d} features cannot be independent on n = {n} states"),
            ));
        }
        if let Some((i, j)) = first_non_finite(&phi) {
            return Err(Error::invalid("Phi", format!("entry ({i},{j}) is not finite")));
        }
        for s in 0..n {
            let norm = phi.row(s).norm();
            if norm > 1.0 + FEATURE_NORM_TOL {
                return Err(Error::invalid(
                    "Phi",
                    format!("row {s} has norm {norm} > 1; normalize features first"),
                ));
            }
        }
        let sv = phi.clone().singular_values();
        let smax = sv.max();
        let smin = sv.min();
        if smax == 0.0 || smin <= 1e-10 * smax {
            return Err(Error::invalid("Phi", "columns are linearly dependent"));
        }
        let mut rows = Vec::with_capacity(n * d);
        for s in 0..n {
            rows.extend(phi.row(s).iter());
        }
        Ok(Self { phi, rows })
    }

    pub fn identity(n: usize) -> Self {
        Self::new(Matrix::identity(n, n)).expect("identity features are valid")
    }

    pub fn matrix(&self) -> &Matrix {
        &self.phi
    }

    pub fn n(&self) -> usize {
        self.phi.nrows()
    }

    pub fn d(&self) -> usize {
        self.phi.ncols()
    }

    /// Feature vector of state `s` as a contiguous slice.
    #[inline]
    pub fn row(&self, s: usize) -> &[f64] {
        let d = self.d();
        &self.rows[s * d..(s + 1) * d]
    }

    /// `Φθ`.
    pub fn value(&self, theta: &Vector) -> Vector {
        &self.phi * theta
    }
}

/// Divides each row by `max(1, ‖φ(s)‖₂)`.
pub fn normalize_features(phi: &Matrix) -> Matrix {
    let mut out = phi.clone();
    for s in 0..out.nrows() {
        let norm = out.row(s).norm();
        if norm > 1.0 {
            out.row_mut(s).unscale_mut(norm);
        }
    }
    out
}

/// `π`, `Σ = ΦᵀDΦ` and `ω = λ_min(Σ)`.
#[derive(Debug, Clone)]
pub struct SteadyStateGeometry {
    pi: Vector,
    sigma: Matrix,
    sigma_chol: Cholesky<f64, Dyn>,
    omega: f64,
    lambda_max: f64,
}

impl SteadyStateGeometry {
    pub fn new(mrp: &MarkovRewardProcess, features: &FeatureMap) -> Result<Self> {
        if features.n() != mrp.n() {
            return Err(Error::invalid(
                "Phi",
                format!("has {} rows but the chain has {} states", features.n(), mrp.n()),
            ));
        }
        let pi = stationary_distribution(mrp.transition())?;
        Self::from_distribution(pi, features)
    }

    pub fn from_distribution(pi: Vector, features: &FeatureMap) -> Result<Self> {
        let phi = features.matrix();
        let mut weighted = phi.clone();
        for (s, mut row) in weighted.row_iter_mut().enumerate() {
            row *= pi[s];
        }
        let mut sigma = phi.tr_mul(&weighted);
        sigma = (&sigma + sigma.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sigma.clone());
        let omega = eig.eigenvalues.min();
        let lambda_max = eig.eigenvalues.max();
        if omega <= OMEGA_FLOOR {
            return Err(Error::DegenerateFeatures { omega });
        }
        if lambda_max > 1.0 + 1e-10 {
            return Err(Error::invalid(
                "Phi",
                format!("feature covariance has eigenvalue {lambda_max} > 1"),
            ));
        }
        let sigma_chol = Cholesky::new(sigma.clone())
            .ok_or_else(|| Error::SolveFailure("feature covariance is not positive definite".into()))?;
        Ok(Self {
            pi,
            sigma,
            sigma_chol,
            omega,
            lambda_max,
        })
    }

    pub fn pi(&self) -> &Vector {
        &self.pi
    }

    pub fn d_matrix(&self) -> Matrix {
        Matrix::from_diagonal(&self.pi)
    }

    pub fn sigma(&self) -> &Matrix {
        &self.sigma
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// `‖V‖_D`.
    pub fn d_norm(&self, v: &Vector) -> f64 {
        d_norm(&self.pi, v)
    }

    /// `‖θ‖_Σ = ‖Φθ‖_D`.
    pub fn sigma_norm(&self, theta: &Vector) -> f64 {
        theta.dot(&(&self.sigma * theta)).max(0.0).sqrt()
    }

    /// `Φᵀ D V`.
    pub fn weighted_features(&self, features: &FeatureMap, v: &Vector) -> Vector {
        features.matrix().tr_mul(&v.component_mul(&self.pi))
    }

    /// `Σ^{-1} x` through the cached Cholesky factor.
    pub fn solve_sigma(&self, x: &Vector) -> Vector {
        self.sigma_chol.solve(x)
    }

    /// Coefficients of the D-weighted least-squares fit of `V` on `Φ`.
    pub fn project_coefficients(&self, features: &FeatureMap, v: &Vector) -> Vector {
        self.solve_sigma(&self.weighted_features(features, v))
    }

    /// `Π_D V = Φ(ΦᵀDΦ)^{-1}ΦᵀD V`.
    pub fn project(&self, features: &FeatureMap, v: &Vector) -> Vector {
        features.value(&self.project_coefficients(features, v))
    }
}

/// `sqrt(Σ_s π(s) V(s)²)`.
pub fn d_norm(pi: &Vector, v: &Vector) -> f64 {
    pi.iter()
        .zip(v.iter())
        .map(|(p, x)| p * x * x)
        .sum::<f64>()
        .sqrt()
}

/// An MRP together with its feature map and steady-state geometry.
#[derive(Debug, Clone)]
pub struct Instance {
    pub mrp: MarkovRewardProcess,
    pub features: FeatureMap,
    pub geometry: SteadyStateGeometry,
}

impl Instance {
    pub fn new(mrp: MarkovRewardProcess, features: FeatureMap) -> Result<Self> {
        let geometry = SteadyStateGeometry::new(&mrp, &features)?;
        Ok(Self {
            mrp,
            features,
            geometry,
        })
    }

    pub fn n(&self) -> usize {
        self.mrp.n()
    }

    pub fn d(&self) -> usize {
        self.features.d()
    }

    pub fn gamma(&self) -> f64 {
        self.mrp.gamma()
    }

    /// `‖Φθ - Φθ'‖_D`.
    pub fn value_distance(&self, theta: &Vector, other: &Vector) -> f64 {
        self.geometry.sigma_norm(&(theta - other))
    }
}

/// Solves `a x = b` by LU, reporting singular or non-finite outcomes.
pub(crate) fn solve(a: Matrix, b: Vector, what: &str) -> Result<Vector> {
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::SolveFailure(format!("{what} is singular")))?;
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::SolveFailure(format!("{what} produced non-finite values")))
    }
}

/// Solves `a X = b` column-wise by LU.
pub(crate) fn solve_matrix(a: Matrix, b: Matrix, what: &str) -> Result<Matrix> {
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::SolveFailure(format!("{what} is singular")))?;
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::SolveFailure(format!("{what} produced non-finite values")))
    }
}
