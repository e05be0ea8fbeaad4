use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("degenerate interval [{a}, {b})")]
    DegenerateInterval { a: f64, b: f64 },

    #[error("model collection is empty (maximal dimension {max_dim} < 2)")]
    EmptyCollection { max_dim: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("point {x} lies outside [0, 1)")]
    OutOfRange { x: f64 },

    #[error("bin {bin} contains no data point")]
    EmptyBin { bin: usize },

    #[error("bin {bin} has zero probability under the design")]
    ZeroMassBin { bin: usize },

    #[error("probability {0} outside (0, 1]")]
    InvalidProbability(f64),

    #[error("need at least {required} data points, got {n}")]
    TooFewPoints { n: usize, required: usize },

    #[error("fold count V = {v} outside 2..={n}")]
    InvalidFoldCount { v: usize, n: usize },

    #[error("penalty needs {0}")]
    MissingContext(&'static str),

    #[error("every model was filtered out by the minimum bin count rule")]
    NoAdmissibleModels,

    #[error("mean oracle loss is zero; accuracy index undefined")]
    ZeroOracleLoss,

    #[error("records do not come from a two-regime collection split at 1/2")]
    CollectionMismatch,

    #[error("asymptotic bias needs a uniform design (mu = 1/2), got mu = {0}")]
    NonUniformDesign(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Toml {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },
}
