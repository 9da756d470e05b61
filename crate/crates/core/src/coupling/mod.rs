//! Interface transfer through the shared spline and the partitioned driver.

mod strong;

use serde::{Deserialize, Serialize};

use crate::fluid::{edge_quadrature, edge_quadrature_split, Discretization, FluidError, FluidState};
use crate::geom::Vec2;
use crate::mesh::{MeshError, NefemMesh};
use crate::mesh_motion::MeshMotionError;
use crate::nurbs::{NurbsCurve, NurbsError, NurbsSurface, SurfaceEdge};
use crate::structure::{StructureError, StructureState};

pub use strong::{strong_coupling_solve, write_iteration_log, FluidSetup, FsiSolution, IterationRecord};

/// Sampled distance above which two interface descriptions count as different.
pub const MATCH_TOL: f64 = 1e-10;

const TRANSFER_GP: usize = 6;

#[derive(Debug, thiserror::Error)]
pub enum CouplingError {
    #[error("fluid patch `{patch}` and structural interface differ by {dist:e} at theta = {theta}")]
    Mismatch { patch: String, theta: f64, dist: f64 },
    #[error("interface patch `{0}` has no bound fluid nodes")]
    EmptyInterface(String),
    #[error("{0}")]
    Unsupported(String),
    #[error("invalid coupling configuration: {0}")]
    Config(String),
    #[error("coupling did not converge in {} iterations; |dd| history {history:?}", .history.len())]
    NonConvergence { history: Vec<f64> },
    #[error("fluid solve in coupling iteration {iter}: {source}")]
    Fluid { iter: usize, source: FluidError },
    #[error("structure solve in coupling iteration {iter}: {source}")]
    Structure { iter: usize, source: StructureError },
    #[error("mesh motion in coupling iteration {iter}: {source}")]
    Motion { iter: usize, source: MeshMotionError },
    #[error(transparent)]
    FluidSetup(#[from] FluidError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Spline(#[from] NurbsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransferMethod {
    #[default]
    Fim,
    Direct,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Relaxation {
    Constant { omega: f64 },
    Aitken { omega0: f64 },
}

impl Default for Relaxation {
    fn default() -> Self {
        Relaxation::Aitken { omega0: 0.5 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CouplingConfig {
    pub method: TransferMethod,
    /// Stop when the max-norm interface displacement increment drops below this (m).
    pub tolerance: f64,
    pub max_iterations: usize,
    pub relaxation: Relaxation,
}

impl Default for CouplingConfig {
    fn default() -> Self {
        Self { method: TransferMethod::Fim, tolerance: 1e-10, max_iterations: 100, relaxation: Relaxation::default() }
    }
}

impl CouplingConfig {
    /// Defaults with the tolerance set to `1e-8 · diameter`.
    pub fn for_diameter(diameter: f64) -> Self {
        Self { tolerance: 1e-8 * diameter, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), CouplingError> {
        if !(self.tolerance > 0.0) {
            return Err(CouplingError::Config(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.max_iterations == 0 {
            return Err(CouplingError::Config("max_iterations must be at least 1".into()));
        }
        let w = match self.relaxation {
            Relaxation::Constant { omega } => omega,
            Relaxation::Aitken { omega0 } => omega0,
        };
        if !(w > 0.0 && w <= 1.0) {
            return Err(CouplingError::Config(format!("relaxation factor must lie in (0, 1], got {w}")));
        }
        Ok(())
    }
}

/// Fluid interface nodes with their spline parameters and cached structural basis rows.
#[derive(Clone, Debug)]
pub struct CouplingMap {
    pub patch: String,
    pub edge: SurfaceEdge,
    pub nodes: Vec<usize>,
    pub thetas: Vec<f64>,
    /// Nonzero `(structural control point, R_i(Θ_j))` per interface node.
    pub basis: Vec<Vec<(usize, f64)>>,
    /// Structural control points on the wetted edge, in curve order.
    pub interface_points: Vec<usize>,
    wetted: NurbsCurve<f64>,
    num_points: usize,
}

fn basis_row(curve: &NurbsCurve<f64>, points: &[usize], theta: f64) -> Result<Vec<(usize, f64)>, NurbsError> {
    let b = curve.rational_basis(theta)?;
    Ok(b.indices().zip(&b.values).map(|(i, &r)| (points[i], r)).collect())
}

/// Maximum distance between `a(θ)` and `b(θ)` over a uniform sample of the common domain.
pub fn curve_distance(a: &NurbsCurve<f64>, b: &NurbsCurve<f64>, samples: usize) -> Result<(f64, f64), NurbsError> {
    let (lo, hi) = a.domain();
    let (blo, bhi) = b.domain();
    if (lo - blo).abs() > MATCH_TOL || (hi - bhi).abs() > MATCH_TOL {
        return Ok((lo, f64::INFINITY));
    }
    let mut worst = (lo, 0.0);
    for k in 0..=samples {
        let t = lo + (hi - lo) * k as f64 / samples as f64;
        let d = (a.eval(t)? - b.eval(t)?).norm();
        if d > worst.1 {
            worst = (t, d);
        }
    }
    Ok(worst)
}

impl CouplingMap {
    pub fn build(mesh: &NefemMesh, patch: &str, surface: &NurbsSurface<f64>, edge: SurfaceEdge) -> Result<Self, CouplingError> {
        let fluid_curve = mesh.patch(patch)?;
        let wetted = surface.boundary_curve(edge)?;
        let (theta, dist) = curve_distance(fluid_curve, &wetted, 1000)?;
        if !(dist <= MATCH_TOL) {
            return Err(CouplingError::Mismatch { patch: patch.into(), theta, dist });
        }
        let interface_points = surface.edge_indices(edge);
        let mut nodes = Vec::new();
        let mut thetas = Vec::new();
        let mut basis = Vec::new();
        for (&node, b) in mesh.bindings() {
            if b.patch == patch {
                nodes.push(node);
                thetas.push(b.theta);
                basis.push(basis_row(&wetted, &interface_points, b.theta)?);
            }
        }
        if nodes.is_empty() {
            return Err(CouplingError::EmptyInterface(patch.into()));
        }
        Ok(Self {
            patch: patch.into(),
            edge,
            nodes,
            thetas,
            basis,
            interface_points,
            wetted,
            num_points: surface.control_points().len(),
        })
    }

    /// Wetted boundary curve of the undeformed structure.
    pub fn wetted_curve(&self) -> &NurbsCurve<f64> {
        &self.wetted
    }

    pub fn num_structure_points(&self) -> usize {
        self.num_points
    }

    /// Wetted curve of the deformed structure.
    pub fn deformed_curve(&self, state: &StructureState) -> Result<NurbsCurve<f64>, NurbsError> {
        let disp: Vec<Vec2<f64>> = self.interface_points.iter().map(|&i| state.displacement[i]).collect();
        self.wetted.displaced(&disp)
    }
}

/// Consistent nodal forces `F_i = −∫ L_i σ_h·n` on the edges carrying `marker`,
/// indexed by mesh node. `n` points out of the fluid, so the forces act on the body.
pub fn fim_nodal_forces(
    mesh: &NefemMesh,
    state: &FluidState,
    marker: &str,
    disc: Discretization,
) -> Result<Vec<Vec2<f64>>, FluidError> {
    let stress = state
        .stress
        .as_ref()
        .ok_or_else(|| FluidError::Config("stress has not been recovered".into()))?;
    let mut out = vec![Vec2::zero(); mesh.num_nodes()];
    let mut found = false;
    for e in mesh.boundary_edges().iter().filter(|e| e.marker == marker) {
        found = true;
        let [a, b] = e.nodes;
        for bp in edge_quadrature(mesh, e, disc, TRANSFER_GP)? {
            let s = stress[a].scale(bp.n[0]).add(&stress[b].scale(bp.n[1]));
            let t = -s.dot(bp.normal) * bp.weight;
            out[a] += t * bp.n[0];
            out[b] += t * bp.n[1];
        }
    }
    if !found {
        return Err(FluidError::UnknownMarker(marker.into()));
    }
    Ok(out)
}

/// Structural control-point forces `F_i^s = Σ_j R_i(Θ_j) F_j^f`.
pub fn fim_transfer_forces(nodal: &[Vec2<f64>], map: &CouplingMap) -> Vec<Vec2<f64>> {
    let mut out = vec![Vec2::zero(); map.num_points];
    for (&node, row) in map.nodes.iter().zip(&map.basis) {
        let f = nodal[node];
        for &(i, r) in row {
            out[i] += f * r;
        }
    }
    out
}

/// Control-point forces by integrating the fluid traction against the
/// structural test functions on every interface face. Needs spline-exact faces.
pub fn direct_transfer_forces(
    mesh: &NefemMesh,
    state: &FluidState,
    map: &CouplingMap,
    marker: &str,
    disc: Discretization,
) -> Result<Vec<Vec2<f64>>, CouplingError> {
    direct_transfer_with(mesh, state, map, marker, disc, TRANSFER_GP)
}

pub(crate) fn direct_transfer_with(
    mesh: &NefemMesh,
    state: &FluidState,
    map: &CouplingMap,
    marker: &str,
    disc: Discretization,
    n_gp: usize,
) -> Result<Vec<Vec2<f64>>, CouplingError> {
    if disc != Discretization::Nefem {
        return Err(CouplingError::Unsupported(
            "direct transfer integrates on the spline faces and needs nefem mode; use fim with fem".into(),
        ));
    }
    let stress = state
        .stress
        .as_ref()
        .ok_or_else(|| FluidError::Config("stress has not been recovered".into()))?;
    let curve = mesh.patch(&map.patch)?;
    let mut out = vec![Vec2::zero(); map.num_points];
    let mut found = false;
    for e in mesh.boundary_edges().iter().filter(|e| e.marker == marker) {
        if e.patch.as_deref() != Some(map.patch.as_str()) {
            return Err(CouplingError::Unsupported(format!(
                "edge ({}, {}) on `{marker}` is not bound to patch `{}`",
                e.nodes[0], e.nodes[1], map.patch
            )));
        }
        found = true;
        let [a, b] = e.nodes;
        for bp in edge_quadrature_split(mesh, e, disc, n_gp, Some(map.wetted.knots()))? {
            let s = stress[a].scale(bp.n[0]).add(&stress[b].scale(bp.n[1]));
            let t = -s.dot(bp.normal) * bp.weight;
            let theta = wrap_theta(curve, bp.theta);
            for (i, r) in basis_row(&map.wetted, &map.interface_points, theta)? {
                out[i] += t * r;
            }
        }
    }
    if !found {
        return Err(FluidError::UnknownMarker(marker.into()).into());
    }
    Ok(out)
}

fn wrap_theta(curve: &NurbsCurve<f64>, theta: f64) -> f64 {
    let (lo, hi) = curve.domain();
    if theta > hi {
        theta - (hi - lo)
    } else if theta < lo {
        theta + (hi - lo)
    } else {
        theta
    }
}

/// Fluid interface node displacements `d_i = Σ_j R_j(Θ_i) d_j^s`, in map order.
pub fn transfer_displacements(state: &StructureState, map: &CouplingMap) -> Vec<Vec2<f64>> {
    map.basis
        .iter()
        .map(|row| row.iter().fold(Vec2::zero(), |acc, &(i, r)| acc + state.displacement[i] * r))
        .collect()
}
