use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: unknown code `{code}` for column {column}")]
    UnknownCode {
        line: usize,
        column: String,
        code: String,
    },

    #[error("input contains no records")]
    EmptyInput,

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("column `{0}` has zero variance")]
    ZeroVariance(String),

    #[error("stratum `{0}` contains no observations")]
    EmptyStratum(String),

    #[error("variable has a single observed level")]
    SingleLevel,

    #[error("unknown feature `{0}`")]
    UnknownFeature(String),

    #[error("value `{value}` is not in the domain of feature `{feature}`")]
    InvalidValue { feature: String, value: String },

    #[error("no observations with {0}")]
    MissingStratum(String),

    #[error("only one class present in the outcome")]
    SingleClass,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
