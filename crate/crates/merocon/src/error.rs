use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("root finder did not converge: {0}")]
    NonConvergence(String),
    #[error("field is dicritical")]
    Dicritical,
    #[error("series precondition violated: {0}")]
    Series(String),
    #[error("not a germ of the geodesic field: {0}")]
    NotAGerm(String),
    #[error("truncation order {given} below resonance degree; need N >= {required}")]
    TruncationTooSmall { given: usize, required: usize },
    #[error("singular time t = {0}")]
    SingularTime(f64),
    #[error("points do not coincide: chordal distance {0:e}")]
    NotALoop(f64),
    #[error("classification failed: {0}")]
    ClassificationFailed(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}
