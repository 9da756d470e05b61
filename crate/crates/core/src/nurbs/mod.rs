//! Exact NURBS geometry: the single interface description shared by the fluid
//! mesh and the structural model.
//!
//! Only clamped knot vectors are supported. Closed curves are clamped curves
//! whose first and last control points coincide; the seam sits at the ends of
//! the parameter range.

mod curve;
pub mod io;
mod knots;
pub mod shapes;
mod surface;

pub use curve::{CurveBasis, NurbsCurve};
pub use knots::KnotVector;
pub use surface::{NurbsSurface, SurfaceBasis, SurfaceEdge};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NurbsError {
    #[error("parameter {value} outside knot range [{lo}, {hi}]")]
    Domain { value: f64, lo: f64, hi: f64 },
    #[error("invalid knot vector: {0}")]
    InvalidKnots(String),
    #[error("inconsistent spline data: {0}")]
    Inconsistent(String),
    #[error("derivative order {0} is not supported (max 2)")]
    UnsupportedOrder(usize),
    #[error("point projection did not converge from any of {seeds} seeds")]
    ProjectionFailed { seeds: usize },
    #[error("ambiguous projection: parameters {theta_a} and {theta_b} are equally close")]
    AmbiguousProjection { theta_a: f64, theta_b: f64 },
}
