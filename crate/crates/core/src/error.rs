use thiserror::Error;

/// Errors raised while configuring or advancing a simulation.
#[derive(Debug, Error)]
pub enum SolverError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("non-finite state at stage {stage}, cell ({i}, {j})")]
    NonFinite { stage: usize, i: usize, j: usize },

    #[error("precondition violated at cell ({i}, {j}): {detail}")]
    Precondition { i: usize, j: usize, detail: String },

    #[error("singular state: {0}")]
    SingularState(String),

    #[error("positivity violation: {0}")]
    Positivity(String),
}

impl SolverError {
    pub fn config(msg: impl Into<String>) -> Self {
        SolverError::Config(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, SolverError>;
