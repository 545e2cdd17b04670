use thiserror::Error;

use crate::scaling::{FeasibilityClass, ScalingDiagnostics};

#[derive(Debug, Error)]
pub enum Error {
    #[error("table total is zero")]
    EmptyTable,

    #[error("{axis} {index} has zero total mass")]
    ZeroMargin { axis: Axis, index: usize },

    #[error("table must be at least 2x2, got {rows}x{cols}")]
    TooSmall { rows: usize, cols: usize },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("no table with this support attains the requested margins (class C)")]
    Infeasible(Box<FeasibilityClass>),

    #[error("iterated proportional fitting did not converge after {} sweeps (margin error {:.3e})", .0.iterations, .0.margin_error)]
    NonConvergence(Box<ScalingDiagnostics>),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("shape mismatch: {left:?} vs {right:?}")]
    DimensionMismatch { left: (usize, usize), right: (usize, usize) },

    #[error("odds-ratio entry ({row}, {col}) is undefined (0/0)")]
    UndefinedEntry { row: usize, col: usize },

    #[error("table is not a copula pmf: margins deviate from uniform by {deviation:.3e}")]
    NotACopula { deviation: f64 },

    #[error("invalid copula parameter: {0}")]
    Param(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Row,
    Column,
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Axis::Row => f.write_str("row"),
            Axis::Column => f.write_str("column"),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
