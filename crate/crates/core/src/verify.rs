//! Property checks of the structural lemmas on randomly generated instances.
//!
//! Every check evaluates `lhs - rhs` of an inequality on exactly computed
//! quantities; the largest value seen is the check's `max_violation`, and the
//! check passes when it does not exceed the tolerance.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{
    gbar, gbar_optstop, mean_path_td, optstop_second_moment, optstop_td_error, td0_second_moment,
    td_error, truncated_trace, xbar_lambda, zeta_given_mean, zeta_lambda,
};
use crate::bounds::projection_radius_bound;
use crate::error::{Error, Result};
use crate::fixed_point::{
    approximation_error_bound, kappa, optstop_fixed_point, td0_fixed_point, td_lambda_fixed_point,
    ApproxKind,
};
use crate::mrp::{d_norm, FeatureMap, Instance, MarkovRewardProcess, Matrix, Vector};
use crate::sampling::{trial_rng, MarkovSampler, ObservationSource, Observation, TrialRng};
use crate::stopping::OptimalStoppingProblem;

pub const LAMBDA_GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.9, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Check {
    NormEquivalence,
    ContractionT,
    ContractionTLambda,
    ContractionF,
    DescentTD0,
    DescentLambda,
    DescentOptStop,
    GbarNorm,
    SecondMoment,
    PathwiseNorm,
    ZetaRegularity,
    ZetaLambdaRegularity,
    ApproxErrorBounds,
    ProjectionRadius,
    MeanPathMonotone,
}

impl Check {
    pub const ALL: [Check; 15] = [
        Check::NormEquivalence,
        Check::ContractionT,
        Check::ContractionTLambda,
        Check::ContractionF,
        Check::DescentTD0,
        Check::DescentLambda,
        Check::DescentOptStop,
        Check::GbarNorm,
        Check::SecondMoment,
        Check::PathwiseNorm,
        Check::ZetaRegularity,
        Check::ZetaLambdaRegularity,
        Check::ApproxErrorBounds,
        Check::ProjectionRadius,
        Check::MeanPathMonotone,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Check::NormEquivalence => "NormEquivalence",
            Check::ContractionT => "ContractionT",
            Check::ContractionTLambda => "ContractionTLambda",
            Check::ContractionF => "ContractionF",
            Check::DescentTD0 => "DescentTD0",
            Check::DescentLambda => "DescentLambda",
            Check::DescentOptStop => "DescentOptStop",
            Check::GbarNorm => "GbarNorm",
            Check::SecondMoment => "SecondMoment",
            Check::PathwiseNorm => "PathwiseNorm",
            Check::ZetaRegularity => "ZetaRegularity",
            Check::ZetaLambdaRegularity => "ZetaLambdaRegularity",
            Check::ApproxErrorBounds => "ApproxErrorBounds",
            Check::ProjectionRadius => "ProjectionRadius",
            Check::MeanPathMonotone => "MeanPathMonotone",
        }
    }

    /// Parses a comma-separated list; `all` selects every check.
    pub fn parse_suite(text: &str) -> Result<Vec<Check>> {
        if text.trim() == "all" {
            return Ok(Check::ALL.to_vec());
        }
        text.split(',').map(|s| s.trim().parse()).collect()
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Check {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Check::ALL
            .iter()
            .copied()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::config("suite", format!("unknown check `{s}`")))
    }
}

/// Random instance distribution.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub n_min: usize,
    pub n_max: usize,
    pub d_max: usize,
    pub gamma_min: f64,
    pub gamma_max: f64,
    /// Mass mixed onto the diagonal of every row.
    pub self_loop: f64,
    /// Feature rows get norms uniform in `[feature_norm_min, 1]`.
    pub feature_norm_min: f64,
    pub omega_min: f64,
    pub max_attempts: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            n_min: 2,
            n_max: 50,
            d_max: 8,
            gamma_min: 0.1,
            gamma_max: 0.95,
            self_loop: 0.05,
            feature_norm_min: 0.5,
            omega_min: 1e-6,
            max_attempts: 100,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_min < 1 || self.n_max < self.n_min {
            return Err(Error::config("generator.n_max", "need 1 <= n_min <= n_max"));
        }
        if self.d_max < 1 {
            return Err(Error::config("generator.d_max", "must be at least 1"));
        }
        if !(0.0 <= self.gamma_min && self.gamma_min <= self.gamma_max && self.gamma_max < 1.0) {
            return Err(Error::config("generator.gamma_max", "need 0 <= gamma_min <= gamma_max < 1"));
        }
        if !(0.0 < self.self_loop && self.self_loop <= 1.0) {
            return Err(Error::config("generator.self_loop", "must lie in (0, 1]"));
        }
        if !(0.0 < self.feature_norm_min && self.feature_norm_min <= 1.0) {
            return Err(Error::config("generator.feature_norm_min", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// A generated MRP with features and a stopping problem on the same chain.
#[derive(Debug, Clone)]
pub struct GeneratedInstance {
    pub index: u64,
    pub instance: Instance,
    pub stopping: OptimalStoppingProblem,
    /// Same features on the stopping problem's always-continue chain.
    pub stopping_instance: Instance,
}

fn uniform(rng: &mut TrialRng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn gaussian_direction(rng: &mut TrialRng, d: usize) -> Vector {
    loop {
        let g = Vector::from_fn(d, |_, _| StandardNormal.sample(rng));
        let norm = g.norm();
        if norm > 1e-12 {
            return g / norm;
        }
    }
}

/// Uniform draw from the Euclidean ball of radius `radius`.
pub fn sample_ball(rng: &mut TrialRng, d: usize, radius: f64) -> Vector {
    gaussian_direction(rng, d) * (radius * rng.random::<f64>().powf(1.0 / d as f64))
}

/// Instance `index` of the stream seeded by `master_seed`; depends on nothing
/// else.
pub fn generate_instance(cfg: &GeneratorConfig, master_seed: u64, index: u64) -> Result<GeneratedInstance> {
    cfg.validate()?;
    let mut rng = trial_rng(master_seed, index);
    let dirichlet = Gamma::new(1.0, 1.0).expect("valid gamma parameters");
    let mut last = String::new();
    for _ in 0..cfg.max_attempts {
        let n = rng.random_range(cfg.n_min..=cfg.n_max);
        let d = rng.random_range(1..=cfg.d_max.min(n));
        let gamma = uniform(&mut rng, cfg.gamma_min, cfg.gamma_max);
        let mut p = Matrix::zeros(n, n);
        for s in 0..n {
            let w: Vec<f64> = (0..n).map(|_| dirichlet.sample(&mut rng)).collect();
            let total: f64 = w.iter().sum();
            for (t, wt) in w.iter().enumerate() {
                p[(s, t)] = (1.0 - cfg.self_loop) * wt / total;
            }
            p[(s, s)] += cfg.self_loop;
            let row_sum: f64 = p.row(s).sum();
            p.row_mut(s).unscale_mut(row_sum);
        }
        let r = Matrix::from_fn(n, n, |_, _| uniform(&mut rng, -1.0, 1.0));
        let mut phi = Matrix::zeros(n, d);
        for s in 0..n {
            let norm = uniform(&mut rng, cfg.feature_norm_min, 1.0);
            phi.set_row(s, &(gaussian_direction(&mut rng, d) * norm).transpose());
        }
        let u = Vector::from_fn(n, |_, _| uniform(&mut rng, -1.0, 1.0));
        let stop = Vector::from_fn(n, |_, _| uniform(&mut rng, -1.0, 1.0));

        let attempt = (|| -> Result<GeneratedInstance> {
            let features = FeatureMap::new(phi)?;
            let mrp = MarkovRewardProcess::new(p.clone(), r, gamma)?;
            let instance = Instance::new(mrp, features.clone())?;
            if instance.geometry.omega() <= cfg.omega_min {
                return Err(Error::DegenerateFeatures {
                    omega: instance.geometry.omega(),
                });
            }
            let stopping = OptimalStoppingProblem::new(p, gamma, u, stop)?;
            let stopping_instance = Instance::new(stopping.chain().clone(), features)?;
            Ok(GeneratedInstance {
                index,
                instance,
                stopping,
                stopping_instance,
            })
        })();
        match attempt {
            Ok(g) => return Ok(g),
            Err(e) => last = e.to_string(),
        }
    }
    Err(Error::GenerationFailure {
        attempts: cfg.max_attempts,
        reason: last,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub generator: GeneratorConfig,
    pub instances: usize,
    pub draws: usize,
    pub master_seed: u64,
    pub tolerance: f64,
    pub mean_path_horizon: usize,
    pub trajectory_length: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            generator: GeneratorConfig::default(),
            instances: 100,
            draws: 100,
            master_seed: 0,
            tolerance: 1e-9,
            mean_path_horizon: 200,
            trajectory_length: 60,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CheckReport {
    pub check_name: String,
    pub instances_tested: usize,
    /// Largest `lhs - rhs` observed (negative means every inequality held
    /// with room to spare).
    pub max_violation: f64,
    /// `(master_seed, instance index)` of the worst case.
    pub worst_seed: (u64, u64),
    pub passed: bool,
}

/// Quantities shared by all checks on one instance.
struct Context<'a> {
    gen: &'a GeneratedInstance,
    theta_td0: Vector,
    v_mu: Vector,
    lambdas: Vec<(f64, Vector)>,
    theta_f: Vector,
    q_star: Vector,
    sigma_sq: f64,
    sigma_sq_f: f64,
    /// Common radius `R ≥ max(‖θ*‖, r_max)` over all fixed points.
    radius: f64,
}

impl<'a> Context<'a> {
    fn new(gen: &'a GeneratedInstance) -> Result<Self> {
        let inst = &gen.instance;
        let theta_td0 = td0_fixed_point(inst)?.theta_star;
        let v_mu = inst.mrp.true_value_function()?;
        let lambdas = LAMBDA_GRID
            .iter()
            .map(|&l| Ok((l, td_lambda_fixed_point(inst, l)?.theta_star)))
            .collect::<Result<Vec<_>>>()?;
        let theta_f = optstop_fixed_point(&gen.stopping, &gen.stopping_instance, 1e-12)?.theta_star;
        let q_star = gen.stopping.q_star()?;
        let sigma_sq = td0_second_moment(&theta_td0, inst);
        let sigma_sq_f = optstop_second_moment(&theta_f, &gen.stopping, &gen.stopping_instance);
        let radius = lambdas
            .iter()
            .map(|(_, t)| t.norm())
            .chain([theta_td0.norm(), theta_f.norm(), inst.mrp.r_max(), gen.stopping.r_max()])
            .fold(0.0_f64, f64::max);
        Ok(Self {
            gen,
            theta_td0,
            v_mu,
            lambdas,
            theta_f,
            q_star,
            sigma_sq,
            sigma_sq_f,
            radius,
        })
    }

    fn inst(&self) -> &Instance {
        &self.gen.instance
    }

    fn stop_inst(&self) -> &Instance {
        &self.gen.stopping_instance
    }

    fn sweep(&self, rng: &mut TrialRng) -> Vector {
        sample_ball(rng, self.inst().d(), 2.0 * self.radius)
    }

    fn in_ball(&self, rng: &mut TrialRng) -> Vector {
        sample_ball(rng, self.inst().d(), self.radius)
    }
}

/// Positive-probability `(s, s')` pairs with their observation.
fn tuples(inst: &Instance) -> Vec<Observation> {
    let n = inst.n();
    let p = inst.mrp.transition();
    let mut out = Vec::new();
    for s in 0..n {
        for s_next in 0..n {
            if p[(s, s_next)] > 0.0 {
                out.push(Observation {
                    s,
                    r: inst.mrp.reward()[(s, s_next)],
                    s_next,
                });
            }
        }
    }
    out
}

struct Tracker(f64);

impl Tracker {
    fn new() -> Self {
        Tracker(f64::NEG_INFINITY)
    }

    /// Records `lhs ≤ rhs`.
    fn le(&mut self, lhs: f64, rhs: f64) {
        let v = lhs - rhs;
        self.0 = if v.is_nan() { f64::INFINITY } else { self.0.max(v) };
    }
}

fn run_one(check: Check, ctx: &Context, cfg: &VerifyConfig) -> Result<f64> {
    let mut rng = trial_rng(cfg.master_seed ^ 0x5eed_c4ec, ctx.gen.index * 64 + check as u64);
    let inst = ctx.inst();
    let geo = &inst.geometry;
    let feats = &inst.features;
    let gamma = inst.gamma();
    let mut tr = Tracker::new();
    let draws = cfg.draws;

    match check {
        Check::NormEquivalence => {
            let omega = geo.omega();
            for _ in 0..draws {
                let theta = ctx.sweep(&mut rng);
                let v = d_norm(geo.pi(), &feats.value(&theta));
                tr.le(omega.sqrt() * theta.norm(), v);
                tr.le(v, theta.norm());
            }
        }
        Check::ContractionT => {
            for _ in 0..draws {
                let (a, b) = (ctx.sweep(&mut rng), ctx.sweep(&mut rng));
                let ta = geo.project(feats, &inst.mrp.bellman(&feats.value(&a)));
                let tb = geo.project(feats, &inst.mrp.bellman(&feats.value(&b)));
                tr.le(geo.d_norm(&(ta - tb)), gamma * geo.d_norm(&feats.value(&(a - b))));
            }
        }
        Check::ContractionTLambda => {
            for &(lambda, _) in &ctx.lambdas {
                let k = kappa(gamma, lambda);
                for _ in 0..draws {
                    let (a, b) = (ctx.sweep(&mut rng), ctx.sweep(&mut rng));
                    let ta = geo.project(feats, &inst.mrp.bellman_lambda(lambda, &feats.value(&a))?);
                    let tb = geo.project(feats, &inst.mrp.bellman_lambda(lambda, &feats.value(&b))?);
                    tr.le(geo.d_norm(&(ta - tb)), k * geo.d_norm(&feats.value(&(a - b))));
                }
            }
        }
        Check::ContractionF => {
            let si = ctx.stop_inst();
            let problem = &ctx.gen.stopping;
            for _ in 0..draws {
                let (a, b) = (ctx.sweep(&mut rng), ctx.sweep(&mut rng));
                let fa = si.geometry.project(&si.features, &problem.f_operator(&si.features.value(&a)));
                let fb = si.geometry.project(&si.features, &problem.f_operator(&si.features.value(&b)));
                tr.le(
                    si.geometry.d_norm(&(fa - fb)),
                    gamma * si.geometry.d_norm(&si.features.value(&(a - b))),
                );
            }
        }
        Check::DescentTD0 => {
            for _ in 0..draws {
                let theta = ctx.sweep(&mut rng);
                let diff = &ctx.theta_td0 - &theta;
                let dist = inst.value_distance(&ctx.theta_td0, &theta);
                tr.le((1.0 - gamma) * dist * dist, diff.dot(&gbar(&theta, inst)));
            }
        }
        Check::DescentLambda => {
            for (lambda, theta_star) in &ctx.lambdas {
                let k = kappa(gamma, *lambda);
                for _ in 0..draws {
                    let theta = ctx.sweep(&mut rng);
                    let dist = inst.value_distance(theta_star, &theta);
                    let lhs = (theta_star - &theta).dot(&xbar_lambda(&theta, inst, *lambda)?);
                    tr.le((1.0 - k) * dist * dist, lhs);
                }
            }
        }
        Check::DescentOptStop => {
            let si = ctx.stop_inst();
            for _ in 0..draws {
                let theta = ctx.sweep(&mut rng);
                let dist = si.value_distance(&ctx.theta_f, &theta);
                let lhs = (&ctx.theta_f - &theta).dot(&gbar_optstop(&theta, &ctx.gen.stopping, si));
                tr.le((1.0 - gamma) * dist * dist, lhs);
            }
        }
        Check::GbarNorm => {
            let si = ctx.stop_inst();
            for _ in 0..draws {
                let theta = ctx.sweep(&mut rng);
                tr.le(gbar(&theta, inst).norm(), 2.0 * inst.value_distance(&theta, &ctx.theta_td0));
                let gf = gbar_optstop(&theta, &ctx.gen.stopping, si);
                tr.le(gf.norm(), 2.0 * si.value_distance(&theta, &ctx.theta_f));
            }
        }
        Check::SecondMoment => {
            let si = ctx.stop_inst();
            for _ in 0..draws {
                let theta = ctx.sweep(&mut rng);
                let dist = inst.value_distance(&theta, &ctx.theta_td0);
                tr.le(td0_second_moment(&theta, inst), 2.0 * ctx.sigma_sq + 8.0 * dist * dist);
                let dist_f = si.value_distance(&theta, &ctx.theta_f);
                tr.le(
                    optstop_second_moment(&theta, &ctx.gen.stopping, si),
                    2.0 * ctx.sigma_sq_f + 8.0 * dist_f * dist_f,
                );
            }
        }
        Check::PathwiseNorm => {
            let si = ctx.stop_inst();
            let all = tuples(inst);
            let r_max = inst.mrp.r_max();
            let radius = ctx.radius;
            let g_stop = ctx.gen.stopping.r_max() + 2.0 * radius;
            for _ in 0..draws {
                // any θ for the unprojected bound, θ ∈ Θ_R for the others
                let free = ctx.sweep(&mut rng);
                let theta = ctx.in_ball(&mut rng);
                for obs in &all {
                    let phi_norm = Vector::from_column_slice(feats.row(obs.s)).norm();
                    let g = td_error(free.as_slice(), obs, feats, gamma).abs() * phi_norm;
                    tr.le(g, r_max + 2.0 * free.norm());
                    let obs_f = Observation {
                        r: ctx.gen.stopping.continuation()[obs.s],
                        ..*obs
                    };
                    let gf = optstop_td_error(theta.as_slice(), &obs_f, &ctx.gen.stopping, &si.features)
                        .abs()
                        * phi_norm;
                    tr.le(gf, g_stop);
                }
            }
            for &(lambda, _) in &ctx.lambdas {
                let b = (r_max + 2.0 * radius) / (1.0 - gamma * lambda);
                let mut sampler = MarkovSampler::new(&inst.mrp, geo.pi(), rng.clone())?;
                let theta = ctx.in_ball(&mut rng);
                tr.le(xbar_lambda(&theta, inst, lambda)?.norm(), b);
                let mut z = Vector::zeros(inst.d());
                for _ in 0..cfg.trajectory_length.max(1) * 4 {
                    let obs = sampler.next_observation();
                    z = z * (gamma * lambda) + Vector::from_column_slice(feats.row(obs.s));
                    let delta = td_error(theta.as_slice(), &obs, feats, gamma);
                    tr.le((&z * delta).norm(), b);
                }
            }
        }
        Check::ZetaRegularity => {
            let all = tuples(inst);
            let g = inst.mrp.r_max() + 2.0 * ctx.radius;
            for _ in 0..draws {
                let a = ctx.in_ball(&mut rng);
                let b = ctx.in_ball(&mut rng);
                let (ga, gb) = (gbar(&a, inst), gbar(&b, inst));
                let gap = (&a - &b).norm();
                for obs in &all {
                    let za = zeta_given_mean(&a, obs, inst, &ga, &ctx.theta_td0);
                    let zb = zeta_given_mean(&b, obs, inst, &gb, &ctx.theta_td0);
                    tr.le(za.abs(), 2.0 * g * g);
                    tr.le((za - zb).abs(), 6.0 * g * gap);
                }
            }
        }
        Check::ZetaLambdaRegularity => {
            let len = cfg.trajectory_length.max(2);
            for (lambda, theta_star) in &ctx.lambdas {
                let decay = gamma * lambda;
                let b = (inst.mrp.r_max() + 2.0 * ctx.radius) / (1.0 - decay);
                let mut sampler = MarkovSampler::new(&inst.mrp, geo.pi(), rng.clone())?;
                let _ = rng.random::<u64>();
                let path: Vec<Observation> = (0..len).map(|_| sampler.next_observation()).collect();
                let states: Vec<usize> = path.iter().map(|o| o.s).collect();
                let per_lambda = (draws / 10).max(1);
                for _ in 0..per_lambda {
                    let t = rng.random_range(0..len);
                    let l = rng.random_range(0..=t);
                    let tau = rng.random_range(0..=t);
                    let a = ctx.in_ball(&mut rng);
                    let c = ctx.in_ball(&mut rng);
                    let (xa, xc) = (xbar_lambda(&a, inst, *lambda)?, xbar_lambda(&c, inst, *lambda)?);
                    let z_lt = truncated_trace(feats, &states[l..=t], decay);
                    let z_full = truncated_trace(feats, &states[..=t], decay);
                    let z_tail = truncated_trace(feats, &states[t - tau..=t], decay);
                    let za = zeta_lambda(&a, &path[t], &z_lt, inst, &xa, theta_star);
                    let zc = zeta_lambda(&c, &path[t], &z_lt, inst, &xc, theta_star);
                    tr.le(za.abs(), 2.0 * b * b);
                    tr.le((za - zc).abs(), 6.0 * b * (&a - &c).norm());
                    let full = zeta_lambda(&a, &path[t], &z_full, inst, &xa, theta_star);
                    let tail = zeta_lambda(&a, &path[t], &z_tail, inst, &xa, theta_star);
                    tr.le((full - tail).abs(), b * b * decay.powi(tau as i32));
                }
            }
        }
        Check::ApproxErrorBounds => {
            let e = approximation_error_bound(ApproxKind::Td0, inst, &ctx.theta_td0, &ctx.v_mu);
            tr.le(e.actual, e.bound);
            for (lambda, theta_star) in &ctx.lambdas {
                let e = approximation_error_bound(ApproxKind::TdLambda(*lambda), inst, theta_star, &ctx.v_mu);
                tr.le(e.actual, e.bound);
            }
            let e = approximation_error_bound(ApproxKind::OptStop, ctx.stop_inst(), &ctx.theta_f, &ctx.q_star);
            tr.le(e.actual, e.bound);
        }
        Check::ProjectionRadius => {
            let bound = projection_radius_bound(inst.mrp.r_max(), gamma, geo.omega());
            tr.le(ctx.theta_td0.norm(), bound);
        }
        Check::MeanPathMonotone => {
            let omega = geo.omega();
            let horizon = cfg.mean_path_horizon.max(1);
            let theta0 = ctx.sweep(&mut rng);
            let d0 = (&ctx.theta_td0 - &theta0).norm_squared();
            let path = mean_path_td(inst, &theta0, horizon);
            let mut bar = Vector::zeros(inst.d());
            for t in 0..horizon {
                let now = (&ctx.theta_td0 - &path[t]).norm_squared();
                let next = (&ctx.theta_td0 - &path[t + 1]).norm_squared();
                let dist = inst.value_distance(&ctx.theta_td0, &path[t]);
                tr.le(next, now - (1.0 - gamma).powi(2) / 4.0 * dist * dist);
                bar += (&path[t] - &bar) / (t as f64 + 1.0);
                let tt = (t + 1) as f64;
                let avg = inst.value_distance(&ctx.theta_td0, &bar);
                tr.le(avg * avg, 4.0 * d0 / (tt * (1.0 - gamma).powi(2)));
                tr.le(next, (-(1.0 - gamma).powi(2) * omega / 4.0 * tt).exp() * d0);
            }
        }
    }
    Ok(tr.0)
}

/// Runs `checks` on `cfg.instances` generated instances, in parallel over
/// instances on the current rayon pool. Results do not depend on the pool size.
pub fn run_checks(checks: &[Check], cfg: &VerifyConfig) -> Result<Vec<CheckReport>> {
    let per_instance: Vec<Result<Vec<f64>>> = (0..cfg.instances as u64)
        .into_par_iter()
        .map(|index| {
            let gen = generate_instance(&cfg.generator, cfg.master_seed, index)?;
            let ctx = Context::new(&gen)?;
            checks.iter().map(|&c| run_one(c, &ctx, cfg)).collect()
        })
        .collect();
    let mut reports: Vec<CheckReport> = checks
        .iter()
        .map(|c| CheckReport {
            check_name: c.name().to_string(),
            instances_tested: 0,
            max_violation: f64::NEG_INFINITY,
            worst_seed: (cfg.master_seed, 0),
            passed: true,
        })
        .collect();
    for (index, result) in per_instance.into_iter().enumerate() {
        let values = result?;
        for (report, v) in reports.iter_mut().zip(values) {
            report.instances_tested += 1;
            if v > report.max_violation {
                report.max_violation = v;
                report.worst_seed = (cfg.master_seed, index as u64);
            }
        }
    }
    for r in &mut reports {
        r.passed = r.max_violation <= cfg.tolerance;
    }
    Ok(reports)
}
