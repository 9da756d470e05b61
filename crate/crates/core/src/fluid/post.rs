use super::{Discretization, FluidError, FluidState};
use crate::geom::{SymTensor2, Vec2};
use crate::mesh::{BoundaryEdge, NefemMesh};
use crate::nurbs::KnotVector;
use crate::nefem::{straight_boundary_quadrature, BoundaryPoint, CurvedTriangle};

const FORCE_GP: usize = 6;

/// Boundary quadrature on one mesh edge; spline-exact on bound edges in NEFEM
/// mode. Normals point out of the fluid.
pub fn edge_quadrature(
    mesh: &NefemMesh,
    edge: &BoundaryEdge,
    disc: Discretization,
    n_gp: usize,
) -> Result<Vec<BoundaryPoint<f64>>, FluidError> {
    edge_quadrature_split(mesh, edge, disc, n_gp, None)
}

/// [`edge_quadrature`] with curved edges also split at the breakpoints of `extra`.
pub fn edge_quadrature_split(
    mesh: &NefemMesh,
    edge: &BoundaryEdge,
    disc: Discretization,
    n_gp: usize,
    extra: Option<&KnotVector<f64>>,
) -> Result<Vec<BoundaryPoint<f64>>, FluidError> {
    let [a, b] = edge.nodes;
    let xa = mesh.nodes()[a];
    if disc == Discretization::Nefem {
        if let Some((ta, tb)) = mesh.edge_thetas(edge)? {
            let curve = mesh.patch(edge.patch.as_deref().expect("bound edge has a patch"))?;
            let wrap = |source| FluidError::Edge { a, b, source };
            let ct = CurvedTriangle::new(xa, curve, ta, tb).map_err(wrap)?;
            return ct.boundary_quadrature_split(n_gp, extra).map_err(wrap);
        }
    }
    Ok(straight_boundary_quadrature(xa, mesh.nodes()[b], n_gp))
}

/// `Σ_edges Σ_points w f(point, edge nodes)` over the edges carrying `marker`.
pub fn boundary_integral(
    mesh: &NefemMesh,
    marker: &str,
    disc: Discretization,
    n_gp: usize,
    mut f: impl FnMut(&BoundaryPoint<f64>, [usize; 2]) -> Vec2<f64>,
) -> Result<Vec2<f64>, FluidError> {
    let mut total = Vec2::zero();
    let mut found = false;
    for e in mesh.boundary_edges().iter().filter(|e| e.marker == marker) {
        found = true;
        for bp in edge_quadrature(mesh, e, disc, n_gp)? {
            total += f(&bp, e.nodes) * bp.weight;
        }
    }
    if !found {
        return Err(FluidError::UnknownMarker(marker.into()));
    }
    Ok(total)
}

/// Force exerted by the fluid on the body bounded by `marker`, from the
/// recovered nodal stresses.
pub fn interface_force(
    mesh: &NefemMesh,
    state: &FluidState,
    marker: &str,
    disc: Discretization,
) -> Result<Vec2<f64>, FluidError> {
    let stress = state
        .stress
        .as_ref()
        .ok_or_else(|| FluidError::Config("stress has not been recovered".into()))?;
    boundary_integral(mesh, marker, disc, FORCE_GP, |bp, [a, b]| {
        let s = stress[a].scale(bp.n[0]).add(&stress[b].scale(bp.n[1]));
        -s.dot(bp.normal)
    })
}

/// Force on the body for a stress field given pointwise.
pub fn field_force(
    mesh: &NefemMesh,
    marker: &str,
    disc: Discretization,
    sigma: impl Fn(Vec2<f64>) -> SymTensor2<f64>,
) -> Result<Vec2<f64>, FluidError> {
    boundary_integral(mesh, marker, disc, FORCE_GP, |bp, _| -sigma(bp.x).dot(bp.normal))
}

/// `(c_d, c_l) = 2 F / (ρ Ū² D)`.
pub fn force_coefficients(force: Vec2<f64>, density: f64, u_mean: f64, d: f64) -> (f64, f64) {
    let q = 0.5 * density * u_mean * u_mean * d;
    (force.x / q, force.y / q)
}
