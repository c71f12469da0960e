//! Charts, metrics, connections, curvature and weighted tensor fields.

mod chart;
mod chartmap;
mod components;
mod curvature;
mod fields;
mod point;
mod weighted;

pub use chart::Chart;
pub use chartmap::ChartMap;
pub use components::{jet_det, jet_inverse, jet_matmul, Components, JetFn};
pub use curvature::{curvature_jets, curvature_tensor, lowered_curvature, ricci_jets, ricci_tensor, sectional_curvature};
pub use fields::{christoffel, projective_shift, ConnectionField, MetricField, OneForm};
pub use point::{IndexIter, PointTensor};
pub use weighted::{pullback_weighted, volume_weight_field, weighted_covariant_derivative, WeightedTensorField};
