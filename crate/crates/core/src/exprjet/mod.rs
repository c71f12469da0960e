//! Expression language and jet evaluation.
//!
//! Fields are written in a small infix language over the chart coordinates
//! and evaluated with exact partial derivatives (to order 4) through
//! truncated Taylor arithmetic.

mod expr;
mod field;
mod jet;
mod parse;

pub use expr::{BinOp, Constant, Expr, ExprDisplay, Func};
pub use field::{DomainFault, EvalError, ScalarField};
pub use jet::{coefficient_count, jet_sum, Jet, MAX_ORDER, MAX_VARS};
pub use parse::{parse_expression, parse_with_params, ParseError};
