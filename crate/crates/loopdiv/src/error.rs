use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("undeclared generator '{0}'")]
    UndeclaredGenerator(char),
    #[error("word uses generators outside the oracle alphabet")]
    AlphabetMismatch,
    #[error("word problem undecided: {0}")]
    Undecided(String),
    #[error("unsupported backend for this operation: {0}")]
    UnsupportedBackend(String),
    #[error("metric condition C'({lambda}) violated: piece of length {piece_len} in relator of length {relator_len}")]
    MetricCondition {
        lambda: String,
        piece_len: usize,
        relator_len: usize,
    },
    #[error("word is not trivial in the group")]
    NotTrivial,
    #[error("no Greendlinger subword found on a nonempty word (C'(1/6) precondition violated)")]
    NoGreendlingerSubword,
    #[error("vertex {0} out of range")]
    VertexOutOfRange(usize),
    #[error("size budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("path exits the ball")]
    PathExitsBall,
    #[error("ball-limited distance between vertices {0} and {1}")]
    BallLimited(usize, usize),
    #[error("invalid partition witness: {0}")]
    InvalidWitness(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("splitter failed on piece {piece}: {source}")]
    SplitterFailed {
        piece: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("hypothesis failure: {0}")]
    HypothesisFailure(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
