use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("self-loop on node {node}")]
    SelfLoop { node: usize },

    #[error("edge ({u}, {v}) has non-positive or non-finite weight {weight}")]
    Weight { u: usize, v: usize, weight: f64 },

    #[error("node id {node} out of range for graph with {n} nodes")]
    Index { node: usize, n: usize },

    #[error("node {node} is {state}")]
    NodeState { node: usize, state: &'static str },

    #[error("node {node} appears more than once in the elimination list")]
    DuplicateNode { node: usize },

    #[error("eliminated block is singular after removing isolated nodes")]
    SingularBlock,

    #[error("dimension {n} exceeds the dense cap of {cap}")]
    Size { n: usize, cap: usize },

    #[error("active node {node} has zero degree; D^-1 is undefined")]
    SingularDegree { node: usize },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must lie in [0, 1], got {p}")))
    }
}
