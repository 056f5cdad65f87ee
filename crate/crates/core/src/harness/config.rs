use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_instance, InstanceDoc, LoadedInstance};
use crate::sampling::ObservationModel;
use crate::verify::{generate_instance, GeneratorConfig};

pub const SCHEMA_VERSION: u32 = 1;

/// Where the instance comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceSource {
    Inline(InstanceDoc),
    /// Path to an instance document, relative to the config file.
    Path(PathBuf),
    Generator {
        #[serde(default)]
        config: GeneratorConfig,
        seed: u64,
        #[serde(default)]
        index: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Algorithm {
    Td0,
    ProjectedTd0,
    TdLambda { lambda: f64 },
    QlearnOptstop,
}

impl Algorithm {
    pub fn lambda(&self) -> f64 {
        match *self {
            Algorithm::TdLambda { lambda } => lambda,
            _ => 0.0,
        }
    }

    pub fn is_projected(&self) -> bool {
        !matches!(self, Algorithm::Td0)
    }
}

/// A number or the string `"auto"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AutoOr {
    Value(f64),
    Auto(AutoTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoTag {
    Auto,
}

/// Step-size family; the `(a)`, `(b)`, `(c)` parts of each finite-time bound
/// correspond to `robust_sqrt`, `constant` and `decay`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSpec {
    /// `α = 1/√T` with `T` the run horizon.
    RobustSqrt,
    /// `"auto"` picks `ω(1-c)/8` for contraction modulus `c`.
    Constant { alpha0: AutoOr },
    /// The decaying schedule the bound for this algorithm and model assumes.
    Decay,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
    /// Write one trajectory CSV per trial.
    pub trial_csv: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub instance: InstanceSource,
    pub algorithm: Algorithm,
    pub observation_model: ObservationModel,
    pub schedule: ScheduleSpec,
    /// Projection radius; required by the projected algorithms.
    #[serde(default)]
    pub radius: Option<AutoOr>,
    pub horizon: usize,
    pub trials: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub record_stride: usize,
    /// Defaults to the zero vector.
    #[serde(default)]
    pub theta0: Option<Vec<f64>>,
    /// Initial distribution of the Markov chain; the stationary distribution
    /// when absent. The Markov-model bounds assume a stationary start.
    #[serde(default)]
    pub start_distribution: Option<Vec<f64>>,
    #[serde(default)]
    pub output: OutputSpec,
    /// Directory against which relative instance paths resolve.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut cfg = Self::from_json(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Static checks that need no instance.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, got {}", self.schema_version),
            ));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if self.horizon == 0 {
            return Err(Error::config("horizon", "must be at least 1"));
        }
        if let Algorithm::TdLambda { lambda } = self.algorithm {
            if !(0.0..=1.0).contains(&lambda) {
                return Err(Error::config("algorithm.td_lambda.lambda", format!("must lie in [0, 1], got {lambda}")));
            }
            if self.observation_model == ObservationModel::Iid {
                return Err(Error::config(
                    "observation_model",
                    "td_lambda needs trajectories; use the markov model",
                ));
            }
        }
        if self.observation_model == ObservationModel::Markov && !self.algorithm.is_projected() {
            return Err(Error::config(
                "algorithm",
                "the markov model requires a projected algorithm",
            ));
        }
        if self.algorithm.is_projected() && self.radius.is_none() {
            return Err(Error::config("radius", "projected algorithms need a radius or \"auto\""));
        }
        if self.algorithm == Algorithm::QlearnOptstop && self.observation_model == ObservationModel::Iid {
            return Err(Error::config(
                "observation_model",
                "qlearn_optstop is analysed under the markov model",
            ));
        }
        if let Some(AutoOr::Value(r)) = self.radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::config("radius", format!("must be positive, got {r}")));
            }
        }
        if let ScheduleSpec::Constant { alpha0: AutoOr::Value(a) } = self.schedule {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::config("schedule.alpha0", format!("must be positive, got {a}")));
            }
        }
        Ok(())
    }

    pub fn load_instance(&self) -> Result<LoadedInstance> {
        let loaded = match &self.instance {
            InstanceSource::Inline(doc) => doc.load()?,
            InstanceSource::Path(p) => {
                let path = match &self.base_dir {
                    Some(base) if p.is_relative() => base.join(p),
                    _ => p.clone(),
                };
                read_instance(&path)?
            }
            InstanceSource::Generator { config, seed, index } => {
                let g = generate_instance(config, *seed, *index)?;
                if self.algorithm == Algorithm::QlearnOptstop {
                    LoadedInstance::Stopping {
                        problem: g.stopping,
                        instance: g.stopping_instance,
                    }
                } else {
                    LoadedInstance::Mrp(g.instance)
                }
            }
        };
        if self.algorithm == Algorithm::QlearnOptstop && loaded.stopping().is_none() {
            return Err(Error::config("instance", "qlearn_optstop needs an instance with \"u\" and \"U\""));
        }
        Ok(loaded)
    }
}
