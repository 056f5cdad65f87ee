//! Temporal-difference policy evaluation and Q-learning for optimal stopping
//! with linear function approximation on finite Markov reward processes,
//! together with exact ground truth, closed-form finite-time bounds and a
//! seeded Monte Carlo harness that checks them.

pub mod algorithms;
pub mod bounds;
pub mod error;
pub mod fixed_point;
pub mod harness;
pub mod io;
pub mod mrp;
pub mod sampling;
pub mod stopping;
pub mod verify;

pub use algorithms::{
    gbar, mean_path_td, project_ball, qlearn_optstop_gradient, run_qlearn_optstop, run_td0,
    run_td_lambda, td0_gradient, xbar_lambda, zeta_diagnostic, IterateState, Recording, RunConfig,
    RunOutput, StepRecord, StepSchedule, Variant,
};
pub use bounds::{theorem_bound, BoundConstants, BoundKind};
pub use error::{Error, Result};
pub use fixed_point::{
    kappa, optstop_fixed_point, td0_fixed_point, td_lambda_fixed_point, FixedPointResult,
};
pub use io::{InstanceDoc, LoadedInstance};
pub use mrp::{
    d_norm, normalize_features, stationary_distribution, FeatureMap, Instance,
    MarkovRewardProcess, Matrix, SteadyStateGeometry, Vector,
};
pub use sampling::{
    mixing_profile, tau_mix, tau_mix_lambda, trial_rng, IidSampler, MarkovSampler, MixingProfile,
    Observation, ObservationModel, ObservationSource,
};
pub use stopping::OptimalStoppingProblem;

pub(crate) fn serialize_vector<S: serde::Serializer>(v: &Vector, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter())
}
