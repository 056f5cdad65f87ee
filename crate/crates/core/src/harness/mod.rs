//! Experiment configuration, parallel Monte Carlo trials, bound reports and
//! rate fits.

mod config;
mod experiment;
mod sweep;

pub use config::{
    Algorithm, AutoOr, AutoTag, ExperimentConfig, InstanceSource, OutputSpec, ScheduleSpec, SCHEMA_VERSION,
};
pub use experiment::{
    mean_ci95, run_experiment, run_prepared, with_jobs, BoundReport, ExperimentOutput, Prepared, Statistic,
    MIXING_HORIZON,
};
pub use sweep::{fit_line, geometric_grid, rate_sweep, LineFit, SweepPoint, SweepReport};

use serde::Serialize;

use crate::bounds::{projection_radius_bound, sigma_sq, BoundConstants};
use crate::error::Result;
use crate::fixed_point::{optstop_fixed_point, policy_suboptimality_bound, td0_fixed_point};
use crate::io::LoadedInstance;

#[derive(Debug, Clone, Serialize)]
pub struct StoppingSummary {
    pub q_star: Vec<f64>,
    pub theta_star: Vec<f64>,
    pub residual: f64,
    pub suboptimality_bound: f64,
}

/// Ground truth for an instance, as printed by `solve`.
#[derive(Debug, Clone, Serialize)]
pub struct SolveSummary {
    pub schema_version: u32,
    pub n: usize,
    pub d: usize,
    pub gamma: f64,
    pub theta_star: Vec<f64>,
    pub residual: f64,
    pub v_mu: Vec<f64>,
    pub pi: Vec<f64>,
    pub omega: f64,
    pub r_max: f64,
    pub sigma_sq: f64,
    pub radius_bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stopping: Option<StoppingSummary>,
}

pub fn solve_summary(loaded: &LoadedInstance) -> Result<SolveSummary> {
    let inst = loaded.instance();
    let fp = td0_fixed_point(inst)?;
    let omega = inst.geometry.omega();
    let stopping = match loaded.stopping() {
        Some(problem) => {
            let f = optstop_fixed_point(problem, inst, 1e-12)?;
            Some(StoppingSummary {
                q_star: problem.q_star()?.iter().copied().collect(),
                theta_star: f.theta_star.iter().copied().collect(),
                residual: f.residual,
                suboptimality_bound: policy_suboptimality_bound(problem, inst)?,
            })
        }
        None => None,
    };
    Ok(SolveSummary {
        schema_version: SCHEMA_VERSION,
        n: inst.n(),
        d: inst.d(),
        gamma: inst.gamma(),
        residual: fp.residual,
        v_mu: inst.mrp.true_value_function()?.iter().copied().collect(),
        pi: inst.geometry.pi().iter().copied().collect(),
        omega,
        r_max: inst.mrp.r_max(),
        sigma_sq: sigma_sq(inst, &fp.theta_star),
        radius_bound: projection_radius_bound(inst.mrp.r_max(), inst.gamma(), omega),
        theta_star: fp.theta_star.iter().copied().collect(),
        stopping,
    })
}

/// The bound a configuration would be checked against, without running it.
#[derive(Debug, Clone, Serialize)]
pub struct BoundPreview {
    pub schema_version: u32,
    pub bound_name: String,
    pub bound_value: f64,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub alpha0: Option<f64>,
    pub d0: f64,
    pub constants: BoundConstants,
}

pub fn bound_preview(cfg: &ExperimentConfig) -> Result<BoundPreview> {
    let p = Prepared::new(cfg)?;
    Ok(BoundPreview {
        schema_version: SCHEMA_VERSION,
        bound_name: p.kind.name().to_string(),
        bound_value: p.bound(cfg.horizon)?,
        horizon: cfg.horizon,
        alpha0: p.alpha0,
        d0: p.d0,
        constants: p.constants,
    })
}
