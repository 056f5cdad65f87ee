use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{Algorithm, AutoOr, ExperimentConfig, ScheduleSpec, SCHEMA_VERSION};
use crate::algorithms::{
    optstop_second_moment, run_qlearn_optstop, run_td0, run_td_lambda, Recording, RunConfig, RunOutput,
    StepSchedule, Variant,
};
use crate::bounds::{projection_radius_bound, theorem_bound, BoundConstants, BoundKind};
use crate::error::{Error, Result};
use crate::fixed_point::{kappa, optstop_fixed_point, td0_fixed_point, td_lambda_fixed_point};
use crate::io::LoadedInstance;
use crate::mrp::{Instance, Vector};
use crate::sampling::{
    mixing_profile, trial_rng, IidSampler, MarkovSampler, MixingProfile, ObservationModel, ObservationSource,
};

/// Steps of the exact TV curve computed for the mixing envelope.
pub const MIXING_HORIZON: usize = 10_000;

/// Tolerance for the optimal-stopping fixed point used as reference.
const OPTSTOP_TOL: f64 = 1e-12;

/// Which quantity a bound controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    /// `‖θ_T - θ*‖₂²`.
    ThetaSq,
    /// `‖Φθ̄_T - Φθ*‖_D²`.
    AvgValueDSq,
}

impl Statistic {
    pub fn for_bound(kind: BoundKind) -> Self {
        if kind.uses_average() {
            Statistic::AvgValueDSq
        } else {
            Statistic::ThetaSq
        }
    }

    pub fn of_record(&self, r: &crate::algorithms::StepRecord) -> f64 {
        match self {
            Statistic::ThetaSq => r.theta_norm_err * r.theta_norm_err,
            Statistic::AvgValueDSq => r.avg_value_d_err * r.avg_value_d_err,
        }
    }
}

/// Everything an experiment needs that does not depend on the trial.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub loaded: LoadedInstance,
    pub algorithm: Algorithm,
    pub model: ObservationModel,
    pub theta_star: Vector,
    pub kind: BoundKind,
    pub statistic: Statistic,
    pub spec: ScheduleSpec,
    pub alpha0: Option<f64>,
    pub radius: Option<f64>,
    pub mixing: Option<MixingProfile>,
    pub constants: BoundConstants,
    pub theta0: Vector,
    pub start: Vector,
    pub d0: f64,
}

fn bound_kind(algorithm: Algorithm, model: ObservationModel, spec: &ScheduleSpec) -> BoundKind {
    use BoundKind::*;
    let part = match spec {
        ScheduleSpec::RobustSqrt => 0,
        ScheduleSpec::Constant { .. } => 1,
        ScheduleSpec::Decay => 2,
    };
    let family = match (algorithm, model) {
        (Algorithm::TdLambda { .. }, _) => [T4a, T4b, T4c],
        (_, ObservationModel::Markov) => [T3a, T3b, T3c],
        (_, ObservationModel::Iid) => [T2a, T2b, T2c],
    };
    family[part]
}

impl Prepared {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let loaded = cfg.load_instance()?;
        let inst = loaded.instance();
        let gamma = inst.gamma();
        let omega = inst.geometry.omega();
        let lambda = cfg.algorithm.lambda();

        let theta_star = match cfg.algorithm {
            Algorithm::Td0 | Algorithm::ProjectedTd0 => td0_fixed_point(inst)?.theta_star,
            Algorithm::TdLambda { lambda } => td_lambda_fixed_point(inst, lambda)?.theta_star,
            Algorithm::QlearnOptstop => {
                let problem = loaded.stopping().expect("checked when loading");
                optstop_fixed_point(problem, inst, OPTSTOP_TOL)?.theta_star
            }
        };
        let r_max = match loaded.stopping() {
            Some(problem) if cfg.algorithm == Algorithm::QlearnOptstop => problem.r_max(),
            _ => inst.mrp.r_max(),
        };

        let kind = bound_kind(cfg.algorithm, cfg.observation_model, &cfg.schedule);
        let contraction = kappa(gamma, lambda);
        let alpha0 = match cfg.schedule {
            ScheduleSpec::Constant { alpha0: AutoOr::Value(a) } => Some(a),
            ScheduleSpec::Constant { alpha0: AutoOr::Auto(_) } => Some(omega * (1.0 - contraction) / 8.0),
            _ => None,
        };
        // The radius lemma's bound also dominates the TD(λ) and stopping fixed
        // points, whose D-norm values are at most r_max/(1-γ) and 2r_max/(1-γ).
        let radius = cfg.radius.map(|r| match r {
            AutoOr::Value(v) => v,
            AutoOr::Auto(_) => projection_radius_bound(r_max, gamma, omega),
        });
        let radius = if cfg.algorithm.is_projected() { radius } else { None };

        let theta0 = match &cfg.theta0 {
            Some(v) if v.len() != inst.d() => {
                return Err(Error::config(
                    "theta0",
                    format!("expected {} entries, got {}", inst.d(), v.len()),
                ))
            }
            Some(v) => Vector::from_column_slice(v),
            None => Vector::zeros(inst.d()),
        };
        let start = match &cfg.start_distribution {
            Some(v) if v.len() != inst.n() => {
                return Err(Error::config(
                    "start_distribution",
                    format!("expected {} entries, got {}", inst.n(), v.len()),
                ))
            }
            Some(v) => Vector::from_column_slice(v),
            None => inst.geometry.pi().clone(),
        };

        let mixing = (cfg.observation_model == ObservationModel::Markov)
            .then(|| mixing_profile(&inst.mrp, inst.geometry.pi(), MIXING_HORIZON));
        let constants = match (cfg.algorithm, loaded.stopping()) {
            (Algorithm::QlearnOptstop, Some(problem)) => BoundConstants::new(
                gamma,
                omega,
                r_max,
                optstop_second_moment(&theta_star, problem, inst),
                &theta_star,
                radius,
                0.0,
                mixing.as_ref(),
            ),
            _ => BoundConstants::for_instance(inst, &theta_star, radius, lambda, mixing.as_ref()),
        };
        let d0 = (&theta0 - &theta_star).norm_squared();
        Ok(Self {
            algorithm: cfg.algorithm,
            model: cfg.observation_model,
            statistic: Statistic::for_bound(kind),
            spec: cfg.schedule,
            loaded,
            theta_star,
            kind,
            alpha0,
            radius,
            mixing,
            constants,
            theta0,
            start,
            d0,
        })
    }

    pub fn instance(&self) -> &Instance {
        self.loaded.instance()
    }

    pub fn schedule(&self, horizon: usize) -> StepSchedule {
        let inst = self.instance();
        let omega = inst.geometry.omega();
        let gamma = inst.gamma();
        match self.spec {
            ScheduleSpec::RobustSqrt => StepSchedule::RobustSqrt { horizon },
            ScheduleSpec::Constant { .. } => StepSchedule::Constant {
                alpha0: self.alpha0.expect("set for constant schedules"),
            },
            ScheduleSpec::Decay => match self.kind {
                BoundKind::T2c => StepSchedule::decay_for(gamma, omega),
                BoundKind::T4c => StepSchedule::eigen_decay_for(kappa(gamma, self.algorithm.lambda()), omega),
                _ => StepSchedule::eigen_decay_for(gamma, omega),
            },
        }
    }

    /// The bound for horizon `T`, with all preconditions checked.
    pub fn bound(&self, horizon: usize) -> Result<f64> {
        theorem_bound(self.kind, &self.constants, self.d0, horizon, self.alpha0)
    }

    /// Runs trial `trial` to `horizon` with the given recording.
    pub fn run_trial(&self, master_seed: u64, trial: u64, horizon: usize, recording: Recording) -> Result<RunOutput> {
        let inst = self.instance();
        let rng = trial_rng(master_seed, trial);
        let cfg = RunConfig {
            variant: match self.radius {
                Some(radius) => Variant::Projected { radius },
                None => Variant::Plain,
            },
            schedule: self.schedule(horizon),
            theta0: self.theta0.clone(),
            horizon,
            recording,
        };
        match self.model {
            ObservationModel::Iid => {
                let sampler = IidSampler::new(&inst.mrp, inst.geometry.pi(), rng)?;
                self.dispatch(&cfg, sampler)
            }
            ObservationModel::Markov => {
                let sampler = MarkovSampler::new(&inst.mrp, &self.start, rng)?;
                self.dispatch(&cfg, sampler)
            }
        }
    }

    fn dispatch(&self, cfg: &RunConfig, mut sampler: impl ObservationSource) -> Result<RunOutput> {
        let inst = self.instance();
        let reference = Some(&self.theta_star);
        match self.algorithm {
            Algorithm::Td0 | Algorithm::ProjectedTd0 => run_td0(cfg, &mut sampler, inst, reference),
            Algorithm::TdLambda { lambda } => run_td_lambda(cfg, lambda, &mut sampler, inst, reference),
            Algorithm::QlearnOptstop => {
                let problem = self.loaded.stopping().expect("checked when loading");
                run_qlearn_optstop(cfg, &mut sampler, problem, inst, reference)
            }
        }
    }
}

/// Mean and normal-approximation 95% half-width (zero for one sample).
pub fn mean_ci95(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * (var / n).sqrt())
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub schema_version: u32,
    pub bound_name: String,
    pub bound_value: f64,
    pub statistic: Statistic,
    pub empirical_mean: f64,
    pub empirical_ci95: f64,
    /// `empirical_mean + empirical_ci95 ≤ bound_value`.
    pub satisfied: bool,
    pub trials: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub master_seed: u64,
    pub alpha0: Option<f64>,
    pub d0: f64,
    pub theta_star: Vec<f64>,
    pub constants: BoundConstants,
}

impl BoundReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub report: BoundReport,
    /// Per-trial value of the statistic, in trial order.
    pub per_trial: Vec<f64>,
    pub runs: Vec<RunOutput>,
}

/// Runs `trials` independent trials on the current rayon pool and compares
/// the mean statistic with the bound. Output does not depend on pool size.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let prepared = Prepared::new(cfg)?;
    run_prepared(&prepared, cfg)
}

pub fn run_prepared(prepared: &Prepared, cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let horizon = cfg.horizon;
    let bound_value = prepared.bound(horizon)?;
    let recording = Recording {
        stride: cfg.record_stride,
        checkpoints: Vec::new(),
    };
    let runs = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|trial| prepared.run_trial(cfg.master_seed, trial, horizon, recording.clone()))
        .collect::<Result<Vec<_>>>()?;
    let per_trial: Vec<f64> = runs
        .iter()
        .map(|r| prepared.statistic.of_record(r.records.last().expect("final record")))
        .collect();
    let (mean, ci) = mean_ci95(&per_trial);
    let report = BoundReport {
        schema_version: SCHEMA_VERSION,
        bound_name: prepared.kind.name().to_string(),
        bound_value,
        statistic: prepared.statistic,
        empirical_mean: mean,
        empirical_ci95: ci,
        satisfied: mean + ci <= bound_value,
        trials: cfg.trials,
        horizon,
        master_seed: cfg.master_seed,
        alpha0: prepared.alpha0,
        d0: prepared.d0,
        theta_star: prepared.theta_star.iter().copied().collect(),
        constants: prepared.constants.clone(),
    };
    Ok(ExperimentOutput {
        report,
        per_trial,
        runs,
    })
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

impl ExperimentOutput {
    /// Writes `report.json`, `trials.csv` (statistic per trial) and, when
    /// `trial_csv` is set, `trial_NNNN.csv` trajectories.
    pub fn write_artifacts(&self, dir: &Path, trial_csv: bool) -> Result<()> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let path = dir.join("report.json");
        fs::write(&path, self.report.to_json() + "\n").map_err(io_err(&path))?;

        let path = dir.join("trials.csv");
        let mut out = create(&path)?;
        (|| -> std::io::Result<()> {
            writeln!(out, "trial,statistic")?;
            for (i, v) in self.per_trial.iter().enumerate() {
                writeln!(out, "{i},{v}")?;
            }
            out.flush()
        })()
        .map_err(io_err(&path))?;

        if trial_csv {
            for (i, run) in self.runs.iter().enumerate() {
                let path = dir.join(format!("trial_{i:04}.csv"));
                let mut out = create(&path)?;
                run.write_csv(&mut out).and_then(|_| out.flush()).map_err(io_err(&path))?;
            }
        }
        Ok(())
    }
}

/// Runs `f` on a pool of `jobs` threads, or on the global pool.
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(Error::config("jobs", "must be at least 1")),
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j)
                .build()
                .map_err(|e| Error::config("jobs", e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}
