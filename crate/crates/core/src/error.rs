use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Source position (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl std::fmt::Display for Pos {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{origin}:{pos}: syntax error: {msg}")]
    Syntax { origin: String, pos: Pos, msg: String },
    #[error("{origin}:{pos}: weight error: {msg}")]
    Weight { origin: String, pos: Pos, msg: String },
    #[error("{origin}:{pos}: unsupported: {msg}")]
    Unsupported { origin: String, pos: Pos, msg: String },
    #[error("unknown atom `{0}`")]
    UnknownAtom(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{what} exceeds the limit of {limit} (got {actual})")]
    Resource { what: &'static str, limit: usize, actual: usize },
    #[error("aggregate is not convex: {0}")]
    NotConvex(String),
    #[error("formula set is not closed: {0}")]
    Undeclared(String),
    #[error("level variable {0} has no scope bounds")]
    Unbounded(String),
    #[error("solver response line {line}: {msg}: `{text}`")]
    SolverResponse { line: usize, text: String, msg: String },
    #[error("solver invocation failed: {0}")]
    Solver(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
