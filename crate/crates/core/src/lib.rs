//! Computational metric projective geometry.
//!
//! Connections and metrics are given by closed-form component expressions
//! over a coordinate chart and evaluated with exact derivatives through
//! truncated Taylor jets. On top of that sit projectively weighted tensor
//! calculus, projective invariants (K-coefficients, Weyl and Liouville
//! tensors), a numerical solver for the metrisability equation, and
//! geodesic integration with first-integral tracking.

pub mod constructions;
pub mod error;
pub mod mobility;
pub mod sampling;
pub mod exprjet;
pub mod flows;
pub mod projinv;
pub mod tensor;

pub use error::{Error, Result};
