use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter was outside its admissible range (e.g. an exponent p <= 1).
    #[error("invalid parameter `{name}`: {message}")]
    Parameter { name: &'static str, message: String },

    /// An iterative solver ran out of iterations. Carries the last iterate
    /// (nodal values) and the residual history so callers can inspect or
    /// restart.
    #[error("solver stalled after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        last_iterate: Vec<f64>,
        residual_history: Vec<f64>,
    },

    /// A constructed object failed its defining property (e.g. a built
    /// subsolution that is not negative, a ladder scale with no admissible
    /// height).
    #[error("construction failed: {0}")]
    Build(String),

    /// Inputs to a pipeline step were rejected before any work started.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// Failure inside a named stage of a multi-stage pipeline.
    #[error("stage `{stage}`: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    /// Config file could not be read or did not make sense.
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn parameter(name: &'static str, message: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            message: message.into(),
        }
    }

    /// Wraps an error with the pipeline stage it occurred in.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
