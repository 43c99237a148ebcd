use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("no free space in occupancy grid")]
    NoFreeSpace,

    #[error("seed not in free space: {0}")]
    SeedNotFree(String),

    #[error("start not in cover")]
    StartNotCovered,

    #[error("goal not in cover")]
    GoalNotCovered,

    #[error("cover disconnected between start and goal")]
    Disconnected,

    #[error("endpoint {which} lies outside its bubble (distance {distance:.3e})")]
    InfeasibleEndpoint { which: &'static str, distance: f64 },

    #[error("equality constraints are inconsistent (residual {0:.3e})")]
    InconsistentEqualities(f64),

    #[error("solver did not converge in {iterations} iterations (primal {primal:.3e}, dual {dual:.3e})")]
    NotConverged { iterations: usize, primal: f64, dual: f64 },

    #[error("t = {t} outside segment domain [0, {duration}]")]
    OutOfRange { t: f64, duration: f64 },

    #[error("rejection sampling saturated after {attempts} draws: {context}")]
    SamplingSaturated { attempts: usize, context: String },

    #[error("sensor pose lies inside an obstacle")]
    PoseInObstacle,

    #[error("exploration stuck: {0}")]
    ExplorationStuck(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse { path: path.into(), message: message.into() }
    }
}
