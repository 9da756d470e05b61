//! Steady incompressible Navier–Stokes on a NEFEM mesh: equal-order linear
//! velocity and pressure with Galerkin/least-squares stabilization, solved by
//! Newton's method.

mod post;
mod solver;

pub use post::{boundary_integral, edge_quadrature, edge_quadrature_split, field_force, force_coefficients, interface_force};
pub use solver::{FluidSolver, NewtonReport, SolveOptions};

use std::fmt;
use std::sync::Arc;

use crate::geom::{SymTensor2, Vec2};
use crate::linalg::LinalgError;
use crate::mesh::MeshError;
use crate::nefem::NefemError;

#[derive(Debug, thiserror::Error)]
pub enum FluidError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("element {tri}: {source}")]
    Element { tri: usize, source: NefemError },
    #[error("boundary edge ({a}, {b}): {source}")]
    Edge { a: usize, b: usize, source: NefemError },
    #[error(transparent)]
    Linear(#[from] LinalgError),
    #[error("Newton did not converge in {} iterations (residual history {residuals:?})", residuals.len())]
    NonConvergence { residuals: Vec<f64> },
    #[error("no boundary nodes carry marker `{0}`")]
    UnknownMarker(String),
    #[error("invalid fluid setup: {0}")]
    Config(String),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluidParams {
    pub density: f64,
    pub viscosity: f64,
    /// Body force per unit mass.
    pub body_force: Vec2<f64>,
}

impl FluidParams {
    pub fn new(density: f64, viscosity: f64) -> Result<Self, FluidError> {
        if !(density > 0.0 && viscosity > 0.0) {
            return Err(FluidError::Config(format!(
                "density and viscosity must be positive (got {density}, {viscosity})"
            )));
        }
        Ok(Self { density, viscosity, body_force: Vec2::zero() })
    }

    pub fn kinematic_viscosity(&self) -> f64 {
        self.viscosity / self.density
    }
}

/// Prescribed value of one velocity component along a boundary group.
#[derive(Clone)]
pub enum Profile {
    Zero,
    Uniform(f64),
    /// `4 U (y - y0)(y0 + H - y) / H²`.
    Parabolic { peak: f64, y0: f64, height: f64 },
    Custom(Arc<dyn Fn(Vec2<f64>) -> f64 + Send + Sync>),
}

impl Profile {
    pub fn custom(f: impl Fn(Vec2<f64>) -> f64 + Send + Sync + 'static) -> Self {
        Self::Custom(Arc::new(f))
    }

    pub fn eval(&self, x: Vec2<f64>) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Uniform(v) => *v,
            Self::Parabolic { peak, y0, height } => {
                let y = x.y - y0;
                4.0 * peak * y * (height - y) / (height * height)
            }
            Self::Custom(f) => f(x),
        }
    }
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "Zero"),
            Self::Uniform(v) => write!(f, "Uniform({v})"),
            Self::Parabolic { peak, y0, height } => {
                write!(f, "Parabolic {{ peak: {peak}, y0: {y0}, height: {height} }}")
            }
            Self::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// Dirichlet velocity on the nodes of one marker; `None` leaves a component free.
#[derive(Clone, Debug)]
pub struct VelocityBc {
    pub marker: String,
    pub x: Option<Profile>,
    pub y: Option<Profile>,
}

impl VelocityBc {
    pub fn no_slip(marker: &str) -> Self {
        Self { marker: marker.into(), x: Some(Profile::Zero), y: Some(Profile::Zero) }
    }

    /// Zero normal velocity on a wall aligned with the x axis.
    pub fn slip_horizontal(marker: &str) -> Self {
        Self { marker: marker.into(), x: None, y: Some(Profile::Zero) }
    }

    pub fn new(marker: &str, x: Option<Profile>, y: Option<Profile>) -> Self {
        Self { marker: marker.into(), x, y }
    }
}

/// Constant traction `σ·n` prescribed on a marker.
#[derive(Clone, Debug, PartialEq)]
pub struct TractionBc {
    pub marker: String,
    pub traction: Vec2<f64>,
}

/// Boundary conditions. Later Dirichlet entries override earlier ones on shared
/// nodes; unlisted boundary parts are traction free.
#[derive(Clone, Debug, Default)]
pub struct FluidBc {
    pub dirichlet: Vec<VelocityBc>,
    pub neumann: Vec<TractionBc>,
    /// Node whose pressure is fixed, for fully enclosed flows.
    pub pressure_pin: Option<(usize, f64)>,
}

impl FluidBc {
    pub fn validate(&self) -> Result<(), FluidError> {
        for n in &self.neumann {
            if self.dirichlet.iter().any(|d| d.marker == n.marker) {
                return Err(FluidError::Config(format!(
                    "marker `{}` has both Dirichlet and Neumann conditions",
                    n.marker
                )));
            }
        }
        Ok(())
    }
}

/// Whether spline-bound elements use the exact NURBS edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Discretization {
    #[default]
    Nefem,
    /// All elements straight sided; bindings ignored.
    Fem,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Taus {
    pub mom: f64,
    pub cont: f64,
}

/// Element stabilization parameters from an element size `h` and a
/// characteristic speed.
pub fn stabilization_taus(h: f64, speed: f64, params: &FluidParams) -> Taus {
    let nu = params.kinematic_viscosity();
    let adv = 2.0 * speed / h;
    let diff = 4.0 * nu / (h * h);
    let mom = 1.0 / (adv * adv + diff * diff).sqrt();
    let re_h = speed * h / (2.0 * nu);
    let cont = 0.5 * speed * h * (re_h / 3.0).min(1.0);
    Taus { mom, cont }
}

/// Nodal velocity and pressure, with recovered nodal stress once available.
#[derive(Clone, Debug, PartialEq)]
pub struct FluidState {
    pub velocity: Vec<Vec2<f64>>,
    pub pressure: Vec<f64>,
    pub stress: Option<Vec<SymTensor2<f64>>>,
}

impl FluidState {
    pub fn zeros(n: usize) -> Self {
        Self { velocity: vec![Vec2::zero(); n], pressure: vec![0.0; n], stress: None }
    }

    /// Unpack an interleaved `[u, v, p]` per-node vector.
    pub fn from_dofs(q: &[f64]) -> Self {
        let n = q.len() / 3;
        Self {
            velocity: (0..n).map(|i| Vec2::new(q[3 * i], q[3 * i + 1])).collect(),
            pressure: (0..n).map(|i| q[3 * i + 2]).collect(),
            stress: None,
        }
    }

    pub fn to_dofs(&self) -> Vec<f64> {
        let mut q = Vec::with_capacity(3 * self.pressure.len());
        for (u, p) in self.velocity.iter().zip(&self.pressure) {
            q.extend_from_slice(&[u.x, u.y, *p]);
        }
        q
    }

    pub fn num_nodes(&self) -> usize {
        self.pressure.len()
    }
}

/// Upstream velocity profile `4 U y (H - y) / H²` of a channel of height `H`.
pub fn parabolic_inflow(peak: f64, height: f64, y: f64) -> Result<Vec2<f64>, FluidError> {
    if !(0.0..=height).contains(&y) {
        return Err(FluidError::Config(format!("y = {y} outside channel [0, {height}]")));
    }
    Ok(Vec2::new(4.0 * peak * y * (height - y) / (height * height), 0.0))
}

pub fn reynolds(params: &FluidParams, u_mean: f64, d: f64) -> f64 {
    params.density * u_mean * d / params.viscosity
}
