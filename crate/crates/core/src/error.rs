use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{line}:{column}: {inner}")]
    Located {
        line: usize,
        column: usize,
        inner: Box<Error>,
    },
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("unknown coordinate `{0}`")]
    UnknownCoordinate(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("numeric overflow during evaluation")]
    Overflow,
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("coordinate systems do not match")]
    CoordinateMismatch,
    #[error("type error: {0}")]
    Type(String),
    #[error("degree error: {0}")]
    Degree(String),
    #[error("invalid coordinates: {0}")]
    InvalidCoordinates(String),
    #[error("degenerate frame: {0}")]
    DegenerateFrame(String),
    #[error("adapted frame violated: {0}")]
    FrameViolated(String),
    #[error("form is not closed off the polar locus")]
    NotClosed,
    #[error("invalid pole order: {0}")]
    PoleOrder(String),
    #[error("divisors are not in normal crossing: {0}")]
    NotTransversal(String),
    #[error("invalid tube: {0}")]
    Tube(String),
    #[error("singular evaluation on a cell: {0}")]
    SingularIntegrand(String),
    #[error("chart is not certified compact")]
    NotCompact,
    #[error("undecidable: {0}")]
    Undecidable(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    /// The underlying error with any position wrappers removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Located { inner, .. } => inner.root(),
            other => other,
        }
    }
}
