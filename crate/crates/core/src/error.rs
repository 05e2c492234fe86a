use thiserror::Error;

/// Errors raised by scenario construction, structure handling and the solvers.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("posteriors must satisfy p1 < 1/2 < p2 (got p1={p1}, p2={p2})")]
    OrderingViolation { p1: String, p2: String },
    #[error("prior must satisfy p1 < mu < p2 (got mu={mu})")]
    PriorOutOfRange { mu: String },
    #[error("degenerate scenario: {0}")]
    DegenerateScenario(String),
    #[error("agent count must be at least 1")]
    InvalidAgentCount,
    #[error("posterior marginal has no mass on one side of 1/2")]
    OneSidedMarginal,
    #[error("mean of the posterior marginal is {mean}, prior is {mu}")]
    PriorMismatch { mean: String, mu: String },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid aggregation rule: {0}")]
    InvalidRule(String),
    #[error("utility sign condition violated: {0}")]
    SignViolation(String),
    #[error("prior is not a mixture of the low and high posteriors: {0}")]
    MixtureViolation(String),
    #[error("zero denominator in state {0}")]
    ZeroDenominator(usize),
    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("mean {0} lies outside [0, 1]")]
    MeanOutOfRange(String),
    #[error("construction infeasible: {0}")]
    InfeasibleConstruction(String),
    #[error("state {0} carries zero total mass")]
    EmptyState(u8),
    #[error("point {x} outside the domain [{lo}, {hi}]")]
    OutOfDomain { x: String, lo: String, hi: String },
    #[error("malformed linear program: {0}")]
    MalformedProgram(String),
    #[error("reduced structure could not be lifted into the full polytope")]
    LiftFailure,
    #[error("agent count {n} exceeds the cap {cap} for this computation")]
    SizeCap { n: usize, cap: usize },
    #[error("bad sweep configuration: {0}")]
    BadConfig(String),
    #[error("no closed-form region applies to a={a}, b={b}")]
    NoRegion { a: String, b: String },
    #[error("cannot parse rational from {0:?}")]
    Parse(String),
    #[error("internal solver error: {0}")]
    Internal(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
