use thiserror::Error;

use crate::complex::CellId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("resource budget exceeded: {what} needs {requested}, budget is {budget}")]
    Budget {
        what: &'static str,
        requested: u64,
        budget: u64,
    },

    #[error("no path between vertices {from} and {to}")]
    Disconnected { from: CellId, to: CellId },

    #[error("vertex function is not 1-Lipschitz on edge {edge}: |{jump}| > {length}")]
    NotLipschitz {
        edge: CellId,
        jump: String,
        length: String,
    },

    #[error("{dim}-chain is not a boundary: {detail}")]
    NotABoundary { dim: usize, detail: String },

    #[error("solver budget exhausted after {nodes} nodes; best lower bound {best_bound}")]
    SolverBudget { nodes: usize, best_bound: f64 },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("point lies outside the covered set: {0}")]
    Uncovered(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn verification(msg: impl Into<String>) -> Self {
        Error::Verification(msg.into())
    }

    /// Wraps the error with the name of the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.in_stage(stage))
    }
}
