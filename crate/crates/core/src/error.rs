use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("invalid instance field `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("infeasible encoding on machine {machine}, batch {batch}: {reason}")]
    InfeasibleEncoding {
        machine: usize,
        batch: usize,
        reason: String,
    },

    #[error("instance has {operations} operations; exhaustive enumeration allows at most {limit}")]
    OracleTooLarge { operations: usize, limit: usize },

    #[error("disjunctive graph contains a cycle")]
    CyclicGraph,

    #[error("metric error: {0}")]
    Metric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
