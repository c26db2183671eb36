//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by any engine module.
#[derive(Debug, Error)]
pub enum CoreError {
    /// Matrix/tensor dimension mismatch.
    #[error("shape error: {0}")]
    Shape(String),
    /// Invalid configuration value.
    #[error("config error: {0}")]
    Config(String),
    /// Invalid runtime input (empty cloud, bad frame range, ...).
    #[error("input error: {0}")]
    Input(String),
    /// Degenerate or invalid geometric data.
    #[error("geometry error: {0}")]
    Geometry(String),
    /// Chunk alignment could not produce a transform.
    #[error("alignment error: {0}")]
    Alignment(String),
    /// Pose graph is malformed (disconnected, bad gauge).
    #[error("pose graph error: {0}")]
    Graph(String),
    /// Synchronization protocol violation between simulated workers.
    #[error("protocol error: {0}")]
    Protocol(String),
    /// Malformed file content; `line` is 1-based.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;

impl CoreError {
    pub fn shape(msg: impl Into<String>) -> Self {
        CoreError::Shape(msg.into())
    }
    pub fn config(msg: impl Into<String>) -> Self {
        CoreError::Config(msg.into())
    }
    pub fn input(msg: impl Into<String>) -> Self {
        CoreError::Input(msg.into())
    }
    pub fn geometry(msg: impl Into<String>) -> Self {
        CoreError::Geometry(msg.into())
    }
    pub fn alignment(msg: impl Into<String>) -> Self {
        CoreError::Alignment(msg.into())
    }
    pub fn graph(msg: impl Into<String>) -> Self {
        CoreError::Graph(msg.into())
    }
    pub fn protocol(msg: impl Into<String>) -> Self {
        CoreError::Protocol(msg.into())
    }
    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        CoreError::Parse { line, msg: msg.into() }
    }
}
