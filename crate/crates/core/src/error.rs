use thiserror::Error;

/// Errors raised by parsing, construction and the decision procedures.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("syntax error at line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("constant `{0}` is not supported in queries; model it with a unary relation")]
    ConstantNotSupported(String),

    #[error("answer variable `{0}` does not occur in the body")]
    SafetyViolation(String),

    #[error("unknown relation `{0}`")]
    UnknownRelation(String),

    #[error("arity mismatch: {0}")]
    ArityMismatch(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("relations of arity 0 are not supported (`{0}`)")]
    NullaryRelation(String),

    #[error("empty list of examples")]
    EmptyList,

    #[error("empty schema")]
    EmptySchema,

    #[error("at least one positive example is required")]
    EmptyPositives,

    #[error("query has repeated answer variables; normalize the head first")]
    RepeatedHeadVariables,

    #[error("no fitting query exists for the given examples and mode")]
    NoFittingExists,

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("deadline exceeded")]
    Timeout,

    #[error("{0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn syntax(line: usize, message: impl Into<String>) -> Self {
        Error::Syntax {
            line,
            message: message.into(),
        }
    }
}
