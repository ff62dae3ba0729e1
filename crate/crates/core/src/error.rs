use thiserror::Error;

/// Errors raised while loading systems or evaluating queries against them.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("unknown condition `{0}`")]
    UnknownCondition(String),
    #[error("unknown name `{0}`")]
    UnknownName(String),
    #[error("unknown automorphism `{0}`")]
    UnknownAutomorphism(String),
    #[error("validation failed: {check}: {detail}")]
    Validation { check: String, detail: String },
    #[error("resource limit exceeded: {what} (limit {limit})")]
    Resource { what: String, limit: usize },
    #[error("name `{0}` is not hereditarily symmetric")]
    NotHereditarilySymmetric(String),
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("scope error: {0}")]
    Scope(String),
    #[error("family error: {0}")]
    Family(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn validation(check: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Validation {
            check: check.into(),
            detail: detail.into(),
        }
    }

    pub(crate) fn resource(what: impl Into<String>, limit: usize) -> Self {
        Error::Resource {
            what: what.into(),
            limit,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
