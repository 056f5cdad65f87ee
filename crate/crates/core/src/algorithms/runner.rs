use std::io::Write;

use serde::Serialize;

#[cfg(debug_assertions)]
use super::dot;
use super::{optstop_td_error, project_ball_in_place, td_error, StepSchedule};
use crate::error::{Error, Result};
use crate::fixed_point::{td0_system, AffineUpdate};
use crate::mrp::{check_lambda, FeatureMap, Instance, Matrix, Vector};
use crate::sampling::{Observation, ObservationModel, ObservationSource};
use crate::stopping::OptimalStoppingProblem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Variant {
    Plain,
    Projected { radius: f64 },
}

impl Variant {
    fn radius(&self) -> Option<f64> {
        match *self {
            Variant::Plain => None,
            Variant::Projected { radius } => Some(radius),
        }
    }
}

/// Which iterates to record: every `stride`-th step (0 disables), the listed
/// checkpoints, and always `t = 0` and the final step.
#[derive(Debug, Clone, Default)]
pub struct Recording {
    pub stride: usize,
    pub checkpoints: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub variant: Variant,
    pub schedule: StepSchedule,
    pub theta0: Vector,
    pub horizon: usize,
    pub recording: Recording,
}

/// `theta` is θ_t; `theta_bar` is the mean of θ₀..θ_{t-1} (θ₀ when t = 0).
#[derive(Debug, Clone, PartialEq)]
pub struct IterateState {
    pub theta: Vector,
    pub theta_bar: Vector,
    pub t: usize,
    pub z: Vector,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRecord {
    pub t: usize,
    /// `‖θ_t - θ*‖₂`.
    pub theta_norm_err: f64,
    /// `‖Φθ_t - Φθ*‖_D`.
    pub value_d_err: f64,
    /// `‖Φθ̄_t - Φθ*‖_D`.
    pub avg_value_d_err: f64,
    /// Step size `α_t` applied at step `t`.
    pub alpha_t: f64,
}

pub const CSV_HEADER: &str = "t,theta_norm_err,value_D_err,avg_value_D_err,alpha_t";

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub state: IterateState,
    pub records: Vec<StepRecord>,
}

impl RunOutput {
    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.t, r.theta_norm_err, r.value_d_err, r.avg_value_d_err, r.alpha_t
            )?;
        }
        Ok(())
    }
}

/// Per-sample update direction; the TD(λ) kernel also carries its trace.
trait Kernel {
    fn direction(&mut self, theta: &[f64], obs: &Observation, out: &mut [f64]);
    fn trace(&self, d: usize) -> Vector {
        Vector::zeros(d)
    }
}

struct Td0Kernel<'a> {
    features: &'a FeatureMap,
    gamma: f64,
    #[cfg(debug_assertions)]
    r_max: f64,
}

impl Kernel for Td0Kernel<'_> {
    #[inline]
    fn direction(&mut self, theta: &[f64], obs: &Observation, out: &mut [f64]) {
        let delta = td_error(theta, obs, self.features, self.gamma);
        for (o, f) in out.iter_mut().zip(self.features.row(obs.s)) {
            *o = delta * f;
        }
        #[cfg(debug_assertions)]
        {
            let bound = self.r_max + 2.0 * dot(theta, theta).sqrt();
            debug_assert!(dot(out, out).sqrt() <= bound + 1e-9, "pathwise gradient bound");
        }
    }
}

struct LambdaKernel<'a> {
    features: &'a FeatureMap,
    gamma: f64,
    decay: f64,
    z: Vec<f64>,
    #[cfg(debug_assertions)]
    r_max: f64,
}

impl Kernel for LambdaKernel<'_> {
    #[inline]
    fn direction(&mut self, theta: &[f64], obs: &Observation, out: &mut [f64]) {
        // δ is formed exactly as in Td0Kernel so λ = 0 reproduces it bit for bit
        let delta = td_error(theta, obs, self.features, self.gamma);
        for ((z, f), o) in self.z.iter_mut().zip(self.features.row(obs.s)).zip(out.iter_mut()) {
            *z = self.decay * *z + f;
            *o = delta * *z;
        }
        #[cfg(debug_assertions)]
        {
            let bound = (self.r_max + 2.0 * dot(theta, theta).sqrt()) / (1.0 - self.decay);
            debug_assert!(dot(out, out).sqrt() <= bound + 1e-9, "pathwise trace-update bound");
        }
    }

    fn trace(&self, _d: usize) -> Vector {
        Vector::from_column_slice(&self.z)
    }
}

struct OptStopKernel<'a> {
    problem: &'a OptimalStoppingProblem,
    features: &'a FeatureMap,
    #[cfg(debug_assertions)]
    bound: Option<f64>,
}

impl Kernel for OptStopKernel<'_> {
    #[inline]
    fn direction(&mut self, theta: &[f64], obs: &Observation, out: &mut [f64]) {
        let delta = optstop_td_error(theta, obs, self.problem, self.features);
        for (o, f) in out.iter_mut().zip(self.features.row(obs.s)) {
            *o = delta * f;
        }
        #[cfg(debug_assertions)]
        if let Some(g) = self.bound {
            debug_assert!(dot(out, out).sqrt() <= g + 1e-9, "pathwise stopping-gradient bound");
        }
    }
}

fn validate(cfg: &RunConfig, model: ObservationModel, gamma: f64, d: usize) -> Result<()> {
    cfg.schedule.validate()?;
    if cfg.horizon == 0 {
        return Err(Error::config("horizon", "must be at least 1"));
    }
    if cfg.theta0.len() != d {
        return Err(Error::config(
            "theta0",
            format!("expected {d} entries, got {}", cfg.theta0.len()),
        ));
    }
    if let Some(h) = cfg.schedule.horizon() {
        if h != cfg.horizon {
            return Err(Error::config(
                "schedule.horizon",
                format!("schedule horizon {h} differs from run horizon {}", cfg.horizon),
            ));
        }
        if model == ObservationModel::Iid {
            let need = 8.0 / (1.0 - gamma);
            if (cfg.horizon as f64).sqrt() < need {
                return Err(Error::config(
                    "horizon",
                    format!(
                        "the 1/sqrt(T) schedule needs sqrt(T) >= 8/(1-gamma) = {need}, got T = {}",
                        cfg.horizon
                    ),
                ));
            }
        }
    }
    match cfg.variant {
        Variant::Plain if model == ObservationModel::Markov => Err(Error::config(
            "algorithm",
            "the Markov observation model requires the projected variant",
        )),
        Variant::Projected { radius } => {
            if !(radius > 0.0 && radius.is_finite()) {
                return Err(Error::config("radius", format!("must be positive, got {radius}")));
            }
            let norm = cfg.theta0.norm();
            if norm > radius {
                return Err(Error::config(
                    "theta0",
                    format!("norm {norm} exceeds the projection radius {radius}"),
                ));
            }
            Ok(())
        }
        Variant::Plain => Ok(()),
    }
}

/// Precomputed pieces for the per-record distances to a reference point.
struct Diagnostics<'a> {
    theta_star: &'a Vector,
    sigma: &'a Matrix,
}

impl Diagnostics<'_> {
    fn record(&self, t: usize, theta: &[f64], theta_bar: &[f64], alpha_t: f64) -> StepRecord {
        let e = Vector::from_column_slice(theta) - self.theta_star;
        let eb = Vector::from_column_slice(theta_bar) - self.theta_star;
        let sn = |x: &Vector| x.dot(&(self.sigma * x)).max(0.0).sqrt();
        StepRecord {
            t,
            theta_norm_err: e.norm(),
            value_d_err: sn(&e),
            avg_value_d_err: sn(&eb),
            alpha_t,
        }
    }
}

fn drive<K: Kernel>(
    cfg: &RunConfig,
    sampler: &mut impl ObservationSource,
    mut kernel: K,
    diag: Option<Diagnostics<'_>>,
) -> RunOutput {
    let d = cfg.theta0.len();
    let horizon = cfg.horizon;
    let radius = cfg.variant.radius();
    let mut theta = cfg.theta0.as_slice().to_vec();
    let mut bar = theta.clone();
    let mut dir = vec![0.0; d];
    let mut records = Vec::new();
    let mut checkpoints = cfg.recording.checkpoints.clone();
    checkpoints.sort_unstable();
    checkpoints.dedup();
    let mut next_cp = 0;
    let stride = cfg.recording.stride;

    let mut wants = |t: usize| {
        while next_cp < checkpoints.len() && checkpoints[next_cp] < t {
            next_cp += 1;
        }
        t == 0
            || t == horizon
            || (stride > 0 && t % stride == 0)
            || checkpoints.get(next_cp) == Some(&t)
    };

    for t in 0..horizon {
        let alpha = cfg.schedule.alpha(t);
        if let Some(diag) = &diag {
            if wants(t) {
                records.push(diag.record(t, &theta, if t == 0 { &theta } else { &bar }, alpha));
            }
        }
        let obs = sampler.next_observation();
        kernel.direction(&theta, &obs, &mut dir);
        let w = 1.0 / (t as f64 + 1.0);
        for (b, x) in bar.iter_mut().zip(&theta) {
            *b += (x - *b) * w;
        }
        for (x, g) in theta.iter_mut().zip(&dir) {
            *x += alpha * g;
        }
        if let Some(r) = radius {
            project_ball_in_place(&mut theta, r);
        }
    }
    if let Some(diag) = &diag {
        records.push(diag.record(horizon, &theta, &bar, cfg.schedule.alpha(horizon)));
    }
    RunOutput {
        state: IterateState {
            theta: Vector::from_vec(theta),
            theta_bar: Vector::from_vec(bar),
            t: horizon,
            z: kernel.trace(d),
        },
        records,
    }
}

/// TD(0) (plain or projected) on any observation stream. Distances are
/// recorded against `reference` when supplied.
pub fn run_td0(
    cfg: &RunConfig,
    sampler: &mut impl ObservationSource,
    inst: &Instance,
    reference: Option<&Vector>,
) -> Result<RunOutput> {
    validate(cfg, sampler.model(), inst.gamma(), inst.d())?;
    let kernel = Td0Kernel {
        features: &inst.features,
        gamma: inst.gamma(),
        #[cfg(debug_assertions)]
        r_max: inst.mrp.r_max(),
    };
    let diag = reference.map(|theta_star| Diagnostics {
        theta_star,
        sigma: inst.geometry.sigma(),
    });
    Ok(drive(cfg, sampler, kernel, diag))
}

/// Projected TD(λ) with trace `z ← γλ z + φ(s_t)`, `z_{-1} = 0`.
pub fn run_td_lambda(
    cfg: &RunConfig,
    lambda: f64,
    sampler: &mut impl ObservationSource,
    inst: &Instance,
    reference: Option<&Vector>,
) -> Result<RunOutput> {
    check_lambda(lambda).map_err(|_| Error::config("lambda", format!("must lie in [0, 1], got {lambda}")))?;
    if cfg.variant == Variant::Plain {
        return Err(Error::config("algorithm", "TD(lambda) is run in projected form only"));
    }
    validate(cfg, sampler.model(), inst.gamma(), inst.d())?;
    let kernel = LambdaKernel {
        features: &inst.features,
        gamma: inst.gamma(),
        decay: inst.gamma() * lambda,
        z: vec![0.0; inst.d()],
        #[cfg(debug_assertions)]
        r_max: inst.mrp.r_max(),
    };
    let diag = reference.map(|theta_star| Diagnostics {
        theta_star,
        sigma: inst.geometry.sigma(),
    });
    Ok(drive(cfg, sampler, kernel, diag))
}

/// Q-learning for optimal stopping. `inst` must be built on
/// `problem.chain()` so that observation rewards are `u(s)`.
pub fn run_qlearn_optstop(
    cfg: &RunConfig,
    sampler: &mut impl ObservationSource,
    problem: &OptimalStoppingProblem,
    inst: &Instance,
    reference: Option<&Vector>,
) -> Result<RunOutput> {
    validate(cfg, sampler.model(), inst.gamma(), inst.d())?;
    if let Variant::Projected { radius } = cfg.variant {
        if problem.r_max() > radius {
            return Err(Error::config(
                "radius",
                format!("must be at least r_max = {} for the stopping problem", problem.r_max()),
            ));
        }
    }
    let kernel = OptStopKernel {
        problem,
        features: &inst.features,
        #[cfg(debug_assertions)]
        bound: cfg.variant.radius().map(|r| problem.r_max() + 2.0 * r),
    };
    let diag = reference.map(|theta_star| Diagnostics {
        theta_star,
        sigma: inst.geometry.sigma(),
    });
    Ok(drive(cfg, sampler, kernel, diag))
}

/// Deterministic recursion `θ_{t+1} = θ_t + α ḡ(θ_t)` with `α = (1-γ)/4`;
/// returns `θ₀..θ_T`.
pub fn mean_path_td(inst: &Instance, theta0: &Vector, horizon: usize) -> Vec<Vector> {
    mean_path(&td0_system(inst), (1.0 - inst.gamma()) / 4.0, theta0, horizon)
}

pub(crate) fn mean_path(update: &AffineUpdate, alpha: f64, theta0: &Vector, horizon: usize) -> Vec<Vector> {
    let mut path = Vec::with_capacity(horizon + 1);
    let mut theta = theta0.clone();
    path.push(theta.clone());
    for _ in 0..horizon {
        theta = &theta + update.apply(&theta) * alpha;
        path.push(theta.clone());
    }
    path
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixed_point::td0_fixed_point;
    use crate::mrp::MarkovRewardProcess;
    use crate::sampling::{trial_rng, IidSampler, MarkovSampler, Replay};

    fn d1() -> Instance {
        let mrp = MarkovRewardProcess::new(
            Matrix::from_element(2, 2, 0.5),
            Matrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 0.0]),
            0.5,
        )
        .unwrap();
        Instance::new(mrp, FeatureMap::new(Matrix::from_element(2, 1, 1.0)).unwrap()).unwrap()
    }

    fn three_state() -> Instance {
        let p = Matrix::from_row_slice(3, 3, &[0.2, 0.5, 0.3, 0.1, 0.1, 0.8, 0.6, 0.3, 0.1]);
        let r = Matrix::from_row_slice(3, 3, &[1.0, -0.5, 0.2, 0.0, 0.3, -1.0, 0.7, 0.1, 0.4]);
        let phi = Matrix::from_row_slice(3, 2, &[0.6, 0.0, 0.3, 0.7, 0.0, 0.9]);
        Instance::new(MarkovRewardProcess::new(p, r, 0.8).unwrap(), FeatureMap::new(phi).unwrap())
            .unwrap()
    }

    fn cfg(variant: Variant, schedule: StepSchedule, d: usize, horizon: usize) -> RunConfig {
        RunConfig {
            variant,
            schedule,
            theta0: Vector::zeros(d),
            horizon,
            recording: Recording { stride: 1, checkpoints: vec![] },
        }
    }

    #[test]
    fn mean_path_first_step() {
        let path = mean_path_td(&d1(), &Vector::zeros(1), 3);
        assert!((path[1][0] - 0.0625).abs() < 1e-15);
        let star = Vector::from_element(1, 1.0);
        let fixed = mean_path_td(&d1(), &star, 5);
        assert!(fixed.iter().all(|t| (t - &star).amax() < 1e-15));
    }

    #[test]
    fn single_state_run_matches_mean_path() {
        let mrp = MarkovRewardProcess::new(
            Matrix::from_element(1, 1, 1.0),
            Matrix::from_element(1, 1, 0.7),
            0.6,
        )
        .unwrap();
        let inst = Instance::new(mrp, FeatureMap::new(Matrix::from_element(1, 1, 0.9)).unwrap()).unwrap();
        let alpha = (1.0 - inst.gamma()) / 4.0;
        let c = cfg(Variant::Plain, StepSchedule::Constant { alpha0: alpha }, 1, 50);
        let mut s = IidSampler::new(&inst.mrp, inst.geometry.pi(), trial_rng(1, 0)).unwrap();
        let out = run_td0(&c, &mut s, &inst, None).unwrap();
        let path = mean_path_td(&inst, &Vector::zeros(1), 50);
        assert!((&out.state.theta - &path[50]).amax() < 1e-14);
    }

    #[test]
    fn averaged_iterate_matches_offline_mean() {
        let inst = three_state();
        let theta_star = td0_fixed_point(&inst).unwrap().theta_star;
        let mut s = IidSampler::new(&inst.mrp, inst.geometry.pi(), trial_rng(2, 0)).unwrap();
        let mut replay = Replay::record(&mut s, 200);
        let mut path = vec![Vector::zeros(2)];
        for t in 1..=200 {
            let c = cfg(Variant::Plain, StepSchedule::Constant { alpha0: 0.05 }, 2, t);
            replay.rewind();
            path.push(run_td0(&c, &mut replay, &inst, Some(&theta_star)).unwrap().state.theta);
        }
        replay.rewind();
        let c = cfg(Variant::Plain, StepSchedule::Constant { alpha0: 0.05 }, 2, 200);
        let out = run_td0(&c, &mut replay, &inst, Some(&theta_star)).unwrap();
        let mean = path[..200].iter().fold(Vector::zeros(2), |a, b| a + b) / 200.0;
        assert!((&out.state.theta_bar - mean).amax() < 1e-12);
        assert_eq!(out.state.theta, path[200]);
        assert_eq!(out.records.len(), 201);
        assert_eq!(out.records[200].t, 200);
    }

    #[test]
    fn lambda_zero_is_projected_td0() {
        let inst = three_state();
        let mut s = MarkovSampler::new(&inst.mrp, inst.geometry.pi(), trial_rng(5, 1)).unwrap();
        let mut replay = Replay::record(&mut s, 5000);
        let c = cfg(Variant::Projected { radius: 3.0 }, StepSchedule::Constant { alpha0: 0.2 }, 2, 5000);
        let a = run_td0(&c, &mut replay, &inst, None).unwrap();
        replay.rewind();
        let b = run_td_lambda(&c, 0.0, &mut replay, &inst, None).unwrap();
        assert_eq!(a.state.theta, b.state.theta);
        assert_eq!(a.state.theta_bar, b.state.theta_bar);
    }

    #[test]
    fn projection_keeps_iterates_in_ball() {
        let inst = three_state();
        let mut s = MarkovSampler::new(&inst.mrp, inst.geometry.pi(), trial_rng(5, 2)).unwrap();
        let c = cfg(Variant::Projected { radius: 0.1 }, StepSchedule::Constant { alpha0: 0.5 }, 2, 1000);
        let out = run_td_lambda(&c, 0.7, &mut s, &inst, None).unwrap();
        assert!(out.state.theta.norm() <= 0.1 + 1e-12);
    }

    #[test]
    fn configuration_errors() {
        let inst = three_state();
        let mut m = MarkovSampler::new(&inst.mrp, inst.geometry.pi(), trial_rng(0, 0)).unwrap();
        let plain = cfg(Variant::Plain, StepSchedule::Constant { alpha0: 0.1 }, 2, 10);
        assert!(run_td0(&plain, &mut m, &inst, None).unwrap_err().is_config());

        let mut bad = cfg(Variant::Projected { radius: 1.0 }, StepSchedule::Constant { alpha0: 0.1 }, 2, 10);
        bad.theta0 = Vector::from_vec(vec![2.0, 0.0]);
        assert!(run_td0(&bad, &mut m, &inst, None).is_err());

        let mut i = IidSampler::new(&inst.mrp, inst.geometry.pi(), trial_rng(0, 0)).unwrap();
        let mismatch = cfg(Variant::Plain, StepSchedule::RobustSqrt { horizon: 5000 }, 2, 4000);
        assert!(run_td0(&mismatch, &mut i, &inst, None).is_err());
        // sqrt(T) must reach 8/(1-0.8) = 40
        let short = cfg(Variant::Plain, StepSchedule::RobustSqrt { horizon: 1000 }, 2, 1000);
        assert!(run_td0(&short, &mut i, &inst, None).is_err());
        let ok = cfg(Variant::Plain, StepSchedule::RobustSqrt { horizon: 1700 }, 2, 1700);
        run_td0(&ok, &mut i, &inst, None).unwrap();
    }

    #[test]
    fn csv_layout() {
        let inst = d1();
        let mut s = IidSampler::new(&inst.mrp, inst.geometry.pi(), trial_rng(0, 0)).unwrap();
        let mut c = cfg(Variant::Plain, StepSchedule::Constant { alpha0: 0.1 }, 1, 10);
        c.recording = Recording { stride: 0, checkpoints: vec![3, 7] };
        let out = run_td0(&c, &mut s, &inst, Some(&Vector::from_element(1, 1.0))).unwrap();
        let ts: Vec<_> = out.records.iter().map(|r| r.t).collect();
        assert_eq!(ts, vec![0, 3, 7, 10]);
        let mut buf = Vec::new();
        out.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(CSV_HEADER));
        assert_eq!(text.lines().count(), 5);
        assert!(text.lines().nth(1).unwrap().starts_with("0,1,1,1,0.1"));
    }
}
