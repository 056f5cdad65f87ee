//! Observation streams (i.i.d. from the stationary tuple distribution, or a
//! single stationary trajectory), seeded generators and mixing-time profiles.
//!
//! Every trial owns a `ChaCha8Rng` seeded with `seed_from_u64(master_seed)`
//! and switched to stream `trial_index`, so a stream depends only on
//! `(master_seed, trial_index)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mrp::{MarkovRewardProcess, Matrix, Vector};

pub type TrialRng = ChaCha8Rng;

/// Generator for trial `trial` of an experiment seeded with `master_seed`.
pub fn trial_rng(master_seed: u64, trial: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Observation {
    pub s: usize,
    pub r: f64,
    pub s_next: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObservationModel {
    Iid,
    Markov,
}

pub trait ObservationSource {
    fn next_observation(&mut self) -> Observation;
    fn model(&self) -> ObservationModel;
}

/// Cumulative rows for inverse-CDF sampling.
#[derive(Debug, Clone)]
struct CdfTable {
    n: usize,
    cum: Vec<f64>,
}

impl CdfTable {
    fn from_rows(p: &Matrix) -> Self {
        let n = p.ncols();
        let mut cum = Vec::with_capacity(p.nrows() * n);
        for row in p.row_iter() {
            let mut acc = 0.0;
            for &x in row.iter() {
                acc += x;
                cum.push(acc);
            }
        }
        Self { n, cum }
    }

    fn from_probabilities(pi: &Vector) -> Self {
        Self::from_rows(&Matrix::from_row_slice(1, pi.len(), pi.as_slice()))
    }

    /// Smallest index whose cumulative mass exceeds `u`; ties go to the lower
    /// index and round-off past the last entry clamps to `n - 1`.
    #[inline]
    fn sample(&self, row: usize, u: f64) -> usize {
        let cum = &self.cum[row * self.n..(row + 1) * self.n];
        cum.partition_point(|&c| c <= u).min(self.n - 1)
    }
}

fn flat_rewards(mrp: &MarkovRewardProcess) -> Vec<f64> {
    mrp.reward().row_iter().flat_map(|r| r.iter().copied().collect::<Vec<_>>()).collect()
}

fn check_distribution(pi: &Vector, n: usize) -> Result<()> {
    if pi.len() != n {
        return Err(Error::invalid(
            "start_distribution",
            format!("expected {n} entries, got {}", pi.len()),
        ));
    }
    if pi.iter().any(|&x| !(x >= 0.0)) || (pi.sum() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("start_distribution", "must be a probability vector"));
    }
    Ok(())
}

/// `s ~ π`, `s' ~ P(·|s)`, independently at every step.
#[derive(Debug, Clone)]
pub struct IidSampler {
    pi: CdfTable,
    p: CdfTable,
    reward: Vec<f64>,
    n: usize,
    rng: TrialRng,
}

impl IidSampler {
    pub fn new(mrp: &MarkovRewardProcess, pi: &Vector, rng: TrialRng) -> Result<Self> {
        check_distribution(pi, mrp.n())?;
        Ok(Self {
            pi: CdfTable::from_probabilities(pi),
            p: CdfTable::from_rows(mrp.transition()),
            reward: flat_rewards(mrp),
            n: mrp.n(),
            rng,
        })
    }
}

impl ObservationSource for IidSampler {
    #[inline]
    fn next_observation(&mut self) -> Observation {
        let s = self.pi.sample(0, self.rng.random::<f64>());
        let s_next = self.p.sample(s, self.rng.random::<f64>());
        Observation {
            s,
            r: self.reward[s * self.n + s_next],
            s_next,
        }
    }

    fn model(&self) -> ObservationModel {
        ObservationModel::Iid
    }
}

/// One trajectory `s₀ ~ start`, `s_{t+1} ~ P(·|s_t)`.
#[derive(Debug, Clone)]
pub struct MarkovSampler {
    p: CdfTable,
    reward: Vec<f64>,
    n: usize,
    state: usize,
    rng: TrialRng,
}

impl MarkovSampler {
    /// Starts from `start`, which should be the stationary distribution for
    /// the Markov-model bounds to apply.
    pub fn new(mrp: &MarkovRewardProcess, start: &Vector, mut rng: TrialRng) -> Result<Self> {
        check_distribution(start, mrp.n())?;
        let state = CdfTable::from_probabilities(start).sample(0, rng.random::<f64>());
        Ok(Self {
            p: CdfTable::from_rows(mrp.transition()),
            reward: flat_rewards(mrp),
            n: mrp.n(),
            state,
            rng,
        })
    }

    pub fn state(&self) -> usize {
        self.state
    }
}

impl ObservationSource for MarkovSampler {
    #[inline]
    fn next_observation(&mut self) -> Observation {
        let s = self.state;
        let s_next = self.p.sample(s, self.rng.random::<f64>());
        self.state = s_next;
        Observation {
            s,
            r: self.reward[s * self.n + s_next],
            s_next,
        }
    }

    fn model(&self) -> ObservationModel {
        ObservationModel::Markov
    }
}

impl<S: ObservationSource + ?Sized> ObservationSource for &mut S {
    fn next_observation(&mut self) -> Observation {
        (**self).next_observation()
    }

    fn model(&self) -> ObservationModel {
        (**self).model()
    }
}

/// A replayed observation sequence (for sharing one stream between runners).
#[derive(Debug, Clone)]
pub struct Replay {
    observations: Vec<Observation>,
    next: usize,
    model: ObservationModel,
}

impl Replay {
    pub fn record(source: &mut impl ObservationSource, len: usize) -> Self {
        let model = source.model();
        let observations = (0..len).map(|_| source.next_observation()).collect();
        Self {
            observations,
            next: 0,
            model,
        }
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn rewind(&mut self) {
        self.next = 0;
    }
}

impl ObservationSource for Replay {
    fn next_observation(&mut self) -> Observation {
        let obs = self.observations[self.next];
        self.next += 1;
        obs
    }

    fn model(&self) -> ObservationModel {
        self.model
    }
}

/// Values of the TV curve below this are treated as converged and end the
/// curve; beyond it round-off dominates and would only loosen the fit.
pub const TV_FLOOR: f64 = 1e-14;
pub const RHO_MIN: f64 = 1e-9;
pub const RHO_MAX: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct MixingProfile {
    /// `tv_curve[t] = max_s ½‖P^t(s,·) - π‖₁`, ending at the horizon or at the
    /// first value below [`TV_FLOOR`].
    pub tv_curve: Vec<f64>,
    pub m: f64,
    pub rho: f64,
}

impl MixingProfile {
    /// Envelope `mρ^t`.
    pub fn envelope(&self, t: usize) -> f64 {
        self.m * self.rho.powi(t as i32)
    }

    /// Fits the tightest geometric envelope to a precomputed curve:
    /// `ρ = max_{t≥2} (tv(t)/tv(1))^{1/(t-1)}` clamped to `[RHO_MIN, RHO_MAX]`,
    /// then `m = max_t tv(t)/ρ^t`.
    pub fn fit(tv_curve: Vec<f64>) -> Self {
        let mut rho: f64 = 0.0;
        if tv_curve.len() > 1 && tv_curve[1] > 0.0 {
            rho = tv_curve[1];
            for (t, &tv) in tv_curve.iter().enumerate().skip(2) {
                let ratio = (tv / tv_curve[1]).powf(1.0 / (t as f64 - 1.0));
                rho = rho.max(ratio);
            }
        }
        let rho = rho.clamp(RHO_MIN, RHO_MAX);
        let m = tv_curve
            .iter()
            .enumerate()
            .map(|(t, &tv)| tv / rho.powi(t as i32))
            .fold(0.0_f64, f64::max);
        Self { tv_curve, m, rho }
    }
}

/// Exact worst-case total-variation curve and its envelope.
pub fn mixing_profile(mrp: &MarkovRewardProcess, pi: &Vector, horizon: usize) -> MixingProfile {
    let n = mrp.n();
    let p = mrp.transition();
    let tv = |pt: &Matrix| {
        (0..n)
            .map(|s| 0.5 * (0..n).map(|j| (pt[(s, j)] - pi[j]).abs()).sum::<f64>())
            .fold(0.0_f64, f64::max)
    };
    let mut pt = Matrix::identity(n, n);
    let mut curve = vec![tv(&pt)];
    for _ in 0..horizon {
        if *curve.last().unwrap() < TV_FLOOR {
            break;
        }
        pt = &pt * p;
        curve.push(tv(&pt));
    }
    MixingProfile::fit(curve)
}

/// `min{t ≥ 0 : mρ^t ≤ ε}`.
pub fn tau_mix(profile: &MixingProfile, eps: f64) -> usize {
    geometric_threshold(profile.m, profile.rho, eps)
}

/// `max(τ_mix(ε), min{t : (γλ)^t ≤ ε})`, the second term being 0 when γλ = 0.
pub fn tau_mix_lambda(profile: &MixingProfile, gamma: f64, lambda: f64, eps: f64) -> usize {
    let gl = gamma * lambda;
    let algo = if gl == 0.0 { 0 } else { geometric_threshold(1.0, gl, eps) };
    tau_mix(profile, eps).max(algo)
}

/// Smallest `t ≥ 0` with `m r^t ≤ eps`: closed form, then confirmed by direct
/// evaluation.
pub fn geometric_threshold(m: f64, r: f64, eps: f64) -> usize {
    assert!(eps > 0.0, "threshold must be positive");
    if m <= eps {
        return 0;
    }
    let f = |t: usize| m * r.powi(t as i32);
    let mut t = ((eps / m).ln() / r.ln()).ceil().max(0.0) as usize;
    while f(t) > eps {
        t += 1;
    }
    while t > 0 && f(t - 1) <= eps {
        t -= 1;
    }
    t
}
