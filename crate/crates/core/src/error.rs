use thiserror::Error;

pub type Result<T> = std::result::Result<T, GeomError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),

    #[error("arity mismatch: expected {expected} coordinates, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("domain violation: {op} at argument {arg}")]
    Domain { op: &'static str, arg: f64 },

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("finite-difference stencil leaves the domain: {0}")]
    MarginViolation(String),

    #[error("empty sampling box on coordinate {0}")]
    EmptyBox(usize),

    #[error("chart dimension {0} is outside the supported range 1..={max}", max = crate::jet::MAX_DIM)]
    Dimension(usize),

    #[error("singular metric (|det| = {det:e})")]
    SingularMetric { det: f64 },

    #[error("metric signature {found:?} differs from the box-centre signature {expected:?}")]
    Signature {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("degenerate plane: |g(v,v)g(w,w) - g(v,w)^2| = {0:e}")]
    DegeneratePlane(f64),

    #[error("no nondegenerate coordinate plane found")]
    NoNondegeneratePlane,

    #[error("degenerate fiber metric (|det| = {det:e})")]
    DegenerateFiber { det: f64 },

    #[error("ill-conditioned horizontal solve (condition number {0:e})")]
    IllConditioned(f64),

    #[error("invalid product structure: {0}")]
    InvalidStructure(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid submersion: {0}")]
    InvalidSubmersion(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for GeomError {
    fn from(e: std::io::Error) -> Self {
        GeomError::Io(e.to_string())
    }
}
