use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at byte {offset}: expected {}", expected.join(" | "))]
    Syntax { offset: usize, expected: Vec<String> },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("unknown builtin potential `{0}` (known: paper, zero)")]
    UnknownName(String),

    #[error("pole in potential at x = {x}")]
    Pole { x: f64 },

    #[error("integration step failure at x = {x}: {reason}")]
    StepFailure { x: f64, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("root refinement from k0 = {k0} did not converge in {iterations} iterations")]
    NoConvergence { k0: f64, iterations: usize },

    #[error("root refinement left the window at k = {k}")]
    DivergedOutOfWindow { k: f64 },

    #[error("root at k = {k} has order greater than {max_order}")]
    OrderTooHigh { k: f64, max_order: usize },

    #[error("grid mismatch: {left} vs {right} nodes")]
    GridMismatch { left: usize, right: usize },

    #[error("function vanishes identically")]
    ZeroFunction,

    #[error("k = {k} is not a root (relative endpoint residual {residual:e})")]
    NotARoot { k: f64, residual: f64 },

    #[error("k = {k} is not a double root")]
    NotDoubleRoot { k: f64 },

    #[error("degenerate root-subspace Gram data: {0}")]
    DegenerateGram(String),

    #[error("simple root at k = {k} has a vanishing bilinear norm but no associated function")]
    ZeroNormWithoutChain { k: f64 },
}
