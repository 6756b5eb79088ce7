//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Density evaluated outside its domain (t ≤ 0 or t below the floor).
    #[error("domain error: {0}")]
    Domain(String),

    /// An improper integral was detected (or is known analytically) to diverge.
    #[error("divergent integral: {0}")]
    Divergence(String),

    /// An operation requires verdicts or constants that are not available.
    #[error("prerequisite not met: {0}")]
    Prereq(String),

    /// Mesh/node budget exceeded or degenerate build parameters.
    #[error("resource error: {0}")]
    Resource(String),

    /// Shortest-path query on a disconnected graph.
    #[error("unreachable: {0}")]
    Unreachable(String),

    /// Degenerate geometric input (e.g. coincident curve endpoints).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Malformed configuration or import data.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
