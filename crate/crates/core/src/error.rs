use thiserror::Error;

/// Errors raised by model construction, solvers and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A field of a model or configuration failed validation.
    #[error("invalid `{field}`: {message}")]
    Invalid { field: String, message: String },

    #[error("chain is not ergodic: {0}")]
    NotErgodic(String),

    #[error("features are degenerate under the stationary distribution (omega = {omega:e})")]
    DegenerateFeatures { omega: f64 },

    #[error("linear solve failed: {0}")]
    SolveFailure(String),

    #[error("iteration did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },

    /// Precondition violated by an experiment or bound configuration.
    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("instance generator gave up after {attempts} attempts: {reason}")]
    GenerationFailure { attempts: usize, reason: String },

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by user-supplied configuration or model data.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Invalid { .. }
                | Error::Config { .. }
                | Error::Json(_)
                | Error::NotErgodic(_)
                | Error::DegenerateFeatures { .. }
                | Error::Io { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
