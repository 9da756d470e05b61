//! Isogeometric plane-strain St. Venant–Kirchhoff solid.

mod dynamics;
mod solver;

use crate::geom::{Mat2, SymTensor2, Vec2};
use crate::linalg::LinalgError;
use crate::nurbs::NurbsError;
use crate::Scalar;

pub use dynamics::{generalized_alpha_step, AlphaParams, DynamicState, SecondOrderSystem};
pub use solver::{edge_traction_loads, QuadPoint, StructureOptions, StructureReport, StructureSolver};

#[derive(Debug, thiserror::Error)]
pub enum StructureError {
    #[error("invalid material parameters: {0}")]
    Params(String),
    #[error("element inverted at x = ({:.6e}, {:.6e}): det F = {det:e}", .x.x, .x.y)]
    Inverted { x: Vec2<f64>, det: f64 },
    #[error("reference geometry degenerate at x = ({:.6e}, {:.6e}): det J = {det:e}", .x.x, .x.y)]
    Geometry { x: Vec2<f64>, det: f64 },
    #[error("Newton did not converge (residual history {residuals:?})")]
    NonConvergence { residuals: Vec<f64> },
    #[error("boundary conditions: {0}")]
    Bc(String),
    #[error(transparent)]
    Linear(#[from] LinalgError),
    #[error(transparent)]
    Spline(#[from] NurbsError),
}

/// Lamé parameters from Young's modulus and Poisson's ratio.
pub fn lame_from_young(young: f64, poisson: f64) -> Result<(f64, f64), StructureError> {
    if !(young > 0.0) || !young.is_finite() {
        return Err(StructureError::Params(format!("Young's modulus must be positive, got {young}")));
    }
    if poisson == 0.5 {
        return Err(StructureError::Params("nu = 0.5 is the incompressible limit (lambda is infinite)".into()));
    }
    if !(poisson > -1.0 && poisson < 0.5) {
        return Err(StructureError::Params(format!("Poisson ratio must lie in (-1, 0.5), got {poisson}")));
    }
    let lambda = poisson * young / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
    let mu = young / (2.0 * (1.0 + poisson));
    Ok((lambda, mu))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StructureParams {
    pub young: f64,
    pub poisson: f64,
    pub density: f64,
    pub lambda: f64,
    pub mu: f64,
}

impl StructureParams {
    pub fn new(young: f64, poisson: f64, density: f64) -> Result<Self, StructureError> {
        let (lambda, mu) = lame_from_young(young, poisson)?;
        if !(density >= 0.0) || !density.is_finite() {
            return Err(StructureError::Params(format!("density must be nonnegative, got {density}")));
        }
        Ok(Self { young, poisson, density, lambda, mu })
    }
}

/// Deformation gradient `F = I + ∇₀d` and Green–Lagrange strain `E = ½(FᵀF − I)`.
///
/// `grad` holds `∂d_i/∂X_J` at `grad.m[i][J]`.
pub fn kinematics<T: Scalar>(grad: &Mat2<T>) -> Result<(Mat2<T>, SymTensor2<T>), T> {
    let f = Mat2::identity().add(grad);
    let det = f.det();
    if !(det > T::zero()) {
        return Err(det);
    }
    let hh = grad.transpose().mul_mat(grad);
    let h = &grad.m;
    let half = T::lit(0.5);
    let e = SymTensor2::new(
        h[0][0] + hh.m[0][0] * half,
        h[1][1] + hh.m[1][1] * half,
        (h[0][1] + h[1][0] + hh.m[0][1]) * half,
    );
    Ok((f, e))
}

/// Second Piola–Kirchhoff stress `S = λ tr(E) I + 2μ E`.
pub fn pk2_stress<T: Scalar>(e: &SymTensor2<T>, lambda: T, mu: T) -> SymTensor2<T> {
    let two = T::lit(2.0);
    let tr = e.xx + e.yy;
    SymTensor2::new(lambda * tr + two * mu * e.xx, lambda * tr + two * mu * e.yy, two * mu * e.xy)
}

/// One prescribed control-point constraint; `None` leaves a component free.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub point: usize,
    pub x: Option<f64>,
    pub y: Option<f64>,
}

impl Constraint {
    pub fn fixed(point: usize) -> Self {
        Self { point, x: Some(0.0), y: Some(0.0) }
    }

    pub fn fix_x(point: usize) -> Self {
        Self { point, x: Some(0.0), y: None }
    }

    pub fn fix_y(point: usize) -> Self {
        Self { point, x: None, y: Some(0.0) }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StructureBc {
    pub constraints: Vec<Constraint>,
}

impl StructureBc {
    pub fn new(constraints: Vec<Constraint>) -> Self {
        Self { constraints }
    }

    pub fn validate(&self, num_points: usize) -> Result<(), StructureError> {
        if self.constraints.iter().all(|c| c.x.is_none() && c.y.is_none()) {
            return Err(StructureError::Bc("no constrained components; rigid modes are free".into()));
        }
        if let Some(c) = self.constraints.iter().find(|c| c.point >= num_points) {
            return Err(StructureError::Bc(format!("control point {} out of range ({num_points})", c.point)));
        }
        Ok(())
    }
}

/// Control-point displacement field, plus velocity and acceleration for dynamics.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureState {
    pub displacement: Vec<Vec2<f64>>,
    pub velocity: Option<Vec<Vec2<f64>>>,
    pub acceleration: Option<Vec<Vec2<f64>>>,
}

impl StructureState {
    pub fn zeros(num_points: usize) -> Self {
        Self { displacement: vec![Vec2::zero(); num_points], velocity: None, acceleration: None }
    }

    pub fn from_dofs(d: &[f64]) -> Self {
        Self { displacement: unflatten(d), velocity: None, acceleration: None }
    }

    pub fn to_dofs(&self) -> Vec<f64> {
        flatten(&self.displacement)
    }
}

pub(crate) fn flatten(v: &[Vec2<f64>]) -> Vec<f64> {
    v.iter().flat_map(|p| [p.x, p.y]).collect()
}

pub(crate) fn unflatten(d: &[f64]) -> Vec<Vec2<f64>> {
    d.chunks_exact(2).map(|c| Vec2::new(c[0], c[1])).collect()
}
