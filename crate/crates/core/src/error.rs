use thiserror::Error;

use crate::combable::SynthesisFailure;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vertex {vertex} has two outgoing edges labeled {letter:?}")]
    NondeterministicLabel { vertex: usize, letter: String },
    #[error("vertex {0} is not reachable from the initial vertex")]
    UnreachableVertex(usize),
    #[error("the initial vertex has an incoming edge")]
    IncomingEdgeToInitial,
    #[error("vertex index {index} out of range (vertex count {count})")]
    VertexOutOfRange { index: usize, count: usize },
    #[error("a digraph needs at least one vertex")]
    EmptyDigraph,
    #[error("unknown letter {0:?}")]
    UnknownLetter(String),
    #[error("duplicate letter {0:?} in alphabet")]
    DuplicateLetter(String),
    #[error("radius {requested} exceeds the configured maximum {max}")]
    RadiusExceeded { requested: usize, max: usize },
    #[error("ball of radius {radius} would exceed the element budget {budget}")]
    BallTooLarge { radius: usize, budget: usize },
    #[error("element is not within the ball of radius {0}")]
    OutsideBall(usize),
    #[error("unknown fixture {0:?}")]
    UnknownFixture(String),
    #[error("unknown generating set {0:?}")]
    UnknownGenset(String),
    #[error("wrong group kind: {0}")]
    WrongKind(String),
    #[error("invalid group description: {0}")]
    InvalidGroup(String),
    #[error("no cone depth up to {cap} produced a valid combing: {reason}")]
    ConeDepthExceeded { cap: usize, reason: String },
    #[error("combing radius {available} is smaller than the requested radius {requested}")]
    OutsideVerifiedRadius { requested: usize, available: usize },
    #[error("not weakly combable at refinement depth {}", .0.depth)]
    NotWeaklyCombableAtDepth(Box<SynthesisFailure>),
    #[error("word {word:?} rejected at index {index}")]
    NotAccepted { word: String, index: usize },
    #[error("search budget of {0} paths exceeded")]
    SearchBudgetExceeded(usize),
    #[error("pattern must have length at least 2")]
    PatternTooShort,
    #[error("power iteration did not converge after {0} iterations")]
    NotConverged(usize),
    #[error("degenerate eigenstructure at lambda: {0}")]
    DegenerateEigenstructure(String),
    #[error("language is finite or grows subexponentially (lambda = {0})")]
    InsufficientGrowth(f64),
    #[error("Poisson equation is singular on component {0}")]
    SingularPoisson(usize),
    #[error("function digraph does not match the spectral digraph")]
    MismatchedDigraph,
    #[error("sampler reached vertex {0} with no admissible continuation")]
    DeadEnd(usize),
    #[error("word of length {len} is too short for n + m = {needed}")]
    TooShort { len: usize, needed: usize },
    #[error("variance is negative beyond round-off: {0}")]
    NegativeVariance(f64),
    #[error("{0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
