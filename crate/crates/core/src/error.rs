use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid model: {0}")]
    Model(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("calibration is rank deficient (rank {rank} of {expected}); unidentified directions: {directions:?}")]
    RankDeficient {
        rank: usize,
        expected: usize,
        directions: Vec<String>,
    },

    #[error("no feasible posture found after {restarts} restarts (best penalty {best_penalty:.3e})")]
    Infeasible { restarts: usize, best_penalty: f64 },

    #[error("no placement registered for {0}")]
    Registry(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("validation error: {0}")]
    Validation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
