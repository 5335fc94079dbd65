use alloc::string::String;

use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid time grid: {0}")]
    Grid(String),

    #[error("invalid history: {0}")]
    History(String),

    #[error("trajectory forward part must start at z (forward[0] = {found:?}, z = {expected:?})")]
    StartMismatch { expected: alloc::vec::Vec<f64>, found: alloc::vec::Vec<f64> },

    #[error("time {time} is not a grid node in [{lo}, {hi}]")]
    NotANode { time: f64, lo: f64, hi: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid problem: {0}")]
    Problem(String),

    #[error("state became non-finite at t = {time} (node {node})")]
    NonFinite { time: f64, node: usize },

    #[error("search budget {0} is too small to evaluate a single control")]
    Budget(u64),

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("partition requires a step below the grid step; increase m ({0})")]
    PartitionTooFine(String),
}
