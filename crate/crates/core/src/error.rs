use crate::exprjet::{EvalError, ParseError};
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("chart mismatch: {0}")]
    ChartMismatch(String),
    #[error("operation needs dimension {expected}, got {found}")]
    Dimension { expected: String, found: usize },
    #[error("{what} is singular at {point:?}")]
    Singular { what: String, point: Vec<f64> },
    #[error("{what} is not symmetric at {point:?} (defect {defect:e})")]
    Asymmetric { what: String, point: Vec<f64>, defect: f64 },
    #[error("expected {expected}, got {found}")]
    Valence { expected: String, found: String },
    #[error("{what} violated at {point:?}")]
    Positivity { what: String, point: Vec<f64> },
    #[error("point {point:?} lies outside the chart domain")]
    OutsideDomain { point: Vec<f64> },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("collocation system has {rows} equations for {cols} unknowns")]
    GridTooSmall { rows: usize, cols: usize },
    #[error("fit residual {residual:e} exceeds {tolerance:e}: map is not projective for this class")]
    NotProjective { residual: f64, tolerance: f64 },
    #[error("not a solution: residual {residual:e} exceeds {tolerance:e}")]
    NotASolution { residual: f64, tolerance: f64 },
    #[error("slope blew up at x = {x}")]
    BlowUp { x: f64 },
    #[error("{0}")]
    Invalid(String),
}
