//! Steady partitioned fluid-structure interaction with a shared NURBS interface.
//!
//! The fluid is a stabilized P1P1 Navier-Stokes solver whose boundary elements
//! follow the exact spline geometry; the structure is an isogeometric
//! St. Venant-Kirchhoff solid in plane strain. Geometry kernels are generic over
//! [`Scalar`]; the aliases below fix them to `f64`.

pub mod bench;
pub mod fluid;
pub mod geom;
pub mod coupling;
pub mod linalg;
pub mod mesh;
pub mod mesh_motion;
pub mod nefem;
pub mod nurbs;
pub mod structure;
mod scalar;

pub use scalar::Scalar;

pub type Vec2 = geom::Vec2<f64>;
pub type Mat2 = geom::Mat2<f64>;
pub type SymTensor2 = geom::SymTensor2<f64>;
pub type KnotVector = nurbs::KnotVector<f64>;
pub type NurbsCurve = nurbs::NurbsCurve<f64>;
pub type NurbsSurface = nurbs::NurbsSurface<f64>;
pub type CurvedTriangle<'a> = nefem::CurvedTriangle<'a, f64>;
pub type QuadratureRule = nefem::QuadratureRule<f64>;
