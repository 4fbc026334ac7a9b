use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Mesh topology problem (non-manifold edge, unknown adjacency, ...).
    #[error("structural error: {0}")]
    Structural(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("{path}:{line}: {msg}")]
    Format {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("singular evaluation: {0}")]
    Singularity(String),

    #[error("numerical degeneracy: {0}")]
    Degenerate(String),

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("preconditioner error: {0}")]
    Preconditioner(String),

    #[error("no convergence after {iterations} iterations (relative residual {residual:.3e})")]
    Convergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("matrix dimension {dim} exceeds the cap {cap}")]
    Size { dim: usize, cap: usize },

    #[error("field evaluation error: {0}")]
    Evaluation(String),

    #[error("outside the domain of the reference solution: {0}")]
    Domain(String),

    #[error("series not converged at order {order} (last term {last_term:.3e})")]
    Truncation { order: usize, last_term: f64 },

    #[error("reference field is identically zero")]
    DegenerateReference,

    #[error("invalid data: {0}")]
    Data(String),

    #[error("config error at `{key}`: {msg}")]
    Config { key: String, msg: String },

    /// An error raised while running one stage of a scenario.
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// True for errors caused by bad user input rather than numerics.
    pub fn is_config(&self) -> bool {
        if let Error::Stage { source, .. } = self {
            return source.is_config();
        }
        matches!(
            self,
            Error::Config { .. } | Error::Parameter(_) | Error::Format { .. } | Error::Io { .. }
        )
    }
}
