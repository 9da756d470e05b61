//! Elastic mesh update: interior nodes follow the boundary as a pseudo-solid.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::geom::Vec2;
use crate::linalg::{CscMatrix, LinalgError, LuFactors, SparseLu, SparsePattern};
use crate::mesh::{signed_area, MeshError, NefemMesh};
use crate::nurbs::NurbsCurve;

#[derive(Debug, thiserror::Error)]
pub enum MeshMotionError {
    #[error("moved mesh is tangled: triangle {tri} has signed area {area:e}")]
    Tangled { tri: usize, area: f64 },
    #[error("node {0} is not on the mesh boundary and cannot be prescribed")]
    Interior(usize),
    #[error("invalid mesh motion parameters: {0}")]
    Params(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Linear(#[from] LinalgError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshMotionParams {
    /// Element stiffness scales like `1 / area^stiffening`.
    pub stiffening: f64,
    pub young: f64,
    pub poisson: f64,
}

impl Default for MeshMotionParams {
    fn default() -> Self {
        Self { stiffening: 1.0, young: 1.0, poisson: 0.3 }
    }
}

impl MeshMotionParams {
    pub fn validate(&self) -> Result<(), MeshMotionError> {
        if !(self.stiffening >= 0.0) {
            return Err(MeshMotionError::Params(format!("stiffening exponent must be >= 0, got {}", self.stiffening)));
        }
        if !(self.young > 0.0) || !(self.poisson > -1.0 && self.poisson < 0.5) {
            return Err(MeshMotionError::Params("pseudo-material needs E > 0 and -1 < nu < 0.5".into()));
        }
        Ok(())
    }
}

/// Pseudo-elastic operator on a fixed reference mesh. Every boundary node is
/// constrained; nodes that are not prescribed stay where they are.
pub struct MeshMotion<'m> {
    reference: &'m NefemMesh,
    boundary: Vec<bool>,
    factors: LuFactors,
}

impl<'m> MeshMotion<'m> {
    pub fn new(reference: &'m NefemMesh, params: MeshMotionParams) -> Result<Self, MeshMotionError> {
        params.validate()?;
        let n = reference.num_nodes();
        let mut boundary = vec![false; n];
        for node in reference.boundary_nodes() {
            boundary[node] = true;
        }
        let blocks: Vec<[usize; 6]> = reference
            .triangles()
            .iter()
            .map(|t| [2 * t[0], 2 * t[0] + 1, 2 * t[1], 2 * t[1] + 1, 2 * t[2], 2 * t[2] + 1])
            .collect();
        let pattern = Arc::new(SparsePattern::from_blocks(2 * n, blocks.iter().map(|b| b.as_slice())));
        let mut k = CscMatrix::zeros(pattern.clone());

        let (e, nu) = (params.young, params.poisson);
        let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
        let mu = e / (2.0 * (1.0 + nu));
        let mean_area = reference.polygonal_area() / reference.num_triangles().max(1) as f64;
        for (tri, dofs) in reference.triangles().iter().zip(&blocks) {
            let p = tri.map(|i| reference.nodes()[i]);
            let area = signed_area(p[0], p[1], p[2]);
            let scale = (mean_area / area).powf(params.stiffening);
            let inv = 1.0 / (2.0 * area);
            let grads = [
                Vec2::new(p[1].y - p[2].y, p[2].x - p[1].x) * inv,
                Vec2::new(p[2].y - p[0].y, p[0].x - p[2].x) * inv,
                Vec2::new(p[0].y - p[1].y, p[1].x - p[0].x) * inv,
            ];
            let mut block = [0.0; 36];
            for a in 0..3 {
                for b in 0..3 {
                    let (ga, gb) = (grads[a], grads[b]);
                    let m = [
                        [(lambda + 2.0 * mu) * ga.x * gb.x + mu * ga.y * gb.y, lambda * ga.x * gb.y + mu * ga.y * gb.x],
                        [lambda * ga.y * gb.x + mu * ga.x * gb.y, (lambda + 2.0 * mu) * ga.y * gb.y + mu * ga.x * gb.x],
                    ];
                    for i in 0..2 {
                        for j in 0..2 {
                            block[(2 * a + i) * 6 + 2 * b + j] = scale * area * m[i][j];
                        }
                    }
                }
            }
            k.add_block(dofs, &block);
        }
        let mask: Vec<bool> = boundary.iter().flat_map(|&b| [b, b]).collect();
        k.set_identity_rows(&mask);
        let factors = SparseLu::new(pattern)?.factor(&k)?;
        Ok(Self { reference, boundary, factors })
    }

    pub fn reference(&self) -> &NefemMesh {
        self.reference
    }

    /// Nodal displacements for prescribed boundary displacements.
    pub fn displacements(&self, prescribed: &[(usize, Vec2<f64>)]) -> Result<Vec<Vec2<f64>>, MeshMotionError> {
        let n = self.reference.num_nodes();
        let mut rhs = vec![0.0; 2 * n];
        for &(node, d) in prescribed {
            if node >= n || !self.boundary[node] {
                return Err(MeshMotionError::Interior(node));
            }
            rhs[2 * node] = d.x;
            rhs[2 * node + 1] = d.y;
        }
        if rhs.iter().all(|&v| v == 0.0) {
            return Ok(vec![Vec2::zero(); n]);
        }
        let x = self.factors.solve(&rhs)?;
        let mut out: Vec<Vec2<f64>> = x.chunks_exact(2).map(|c| Vec2::new(c[0], c[1])).collect();
        // boundary values are imposed exactly, not up to solver roundoff
        for (i, o) in out.iter_mut().enumerate() {
            if self.boundary[i] {
                *o = Vec2::new(rhs[2 * i], rhs[2 * i + 1]);
            }
        }
        Ok(out)
    }

    /// Reference mesh deformed by the prescribed boundary displacements, with
    /// the given spline patches replacing their reference geometry.
    pub fn move_mesh(
        &self,
        prescribed: &[(usize, Vec2<f64>)],
        patches: BTreeMap<String, NurbsCurve<f64>>,
    ) -> Result<NefemMesh, MeshMotionError> {
        let disp = self.displacements(prescribed)?;
        let nodes: Vec<Vec2<f64>> = self.reference.nodes().iter().zip(&disp).map(|(&x, &d)| x + d).collect();
        match self.reference.moved(nodes, patches) {
            Err(MeshError::Inverted { tri, area }) => Err(MeshMotionError::Tangled { tri, area }),
            other => Ok(other?),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fluid::tests::small_cylinder_mesh;
    use proptest::prelude::*;

    fn translated_patch(mesh: &NefemMesh, t: Vec2<f64>) -> BTreeMap<String, NurbsCurve<f64>> {
        let c = mesh.patch("cyl").unwrap();
        BTreeMap::from([("cyl".to_string(), c.displaced(&vec![t; c.control_points().len()]).unwrap())])
    }

    fn cylinder_nodes(mesh: &NefemMesh) -> Vec<usize> {
        mesh.bindings().iter().filter(|(_, b)| b.patch == "cyl").map(|(&n, _)| n).collect()
    }

    #[test]
    fn zero_motion_is_identity() {
        let mesh = small_cylinder_mesh();
        let motion = MeshMotion::new(&mesh, MeshMotionParams::default()).unwrap();
        let moved = motion.move_mesh(&[], BTreeMap::new()).unwrap();
        assert_eq!(moved.nodes(), mesh.nodes());
        let zeros: Vec<_> = mesh.boundary_nodes().into_iter().map(|n| (n, Vec2::zero())).collect();
        assert!(motion.displacements(&zeros).unwrap().iter().all(|d| *d == Vec2::zero()));
    }

    #[test]
    fn rigid_translation_of_the_boundary_moves_every_node() {
        let mesh = small_cylinder_mesh();
        let motion = MeshMotion::new(&mesh, MeshMotionParams::default()).unwrap();
        let t = Vec2::new(0.031, -0.017);
        let prescribed: Vec<_> = mesh.boundary_nodes().into_iter().map(|n| (n, t)).collect();
        let moved = motion.move_mesh(&prescribed, translated_patch(&mesh, t)).unwrap();
        for (a, b) in moved.nodes().iter().zip(mesh.nodes()) {
            assert!((*a - *b - t).max_abs() < 1e-12);
        }
        assert_eq!(moved.bindings(), mesh.bindings());
    }

    #[test]
    fn infinitesimal_rotation_is_reproduced() {
        let mesh = small_cylinder_mesh();
        let motion = MeshMotion::new(&mesh, MeshMotionParams { stiffening: 1.5, ..Default::default() }).unwrap();
        let w = 1e-3;
        let rot = |x: Vec2<f64>| Vec2::new(-w * x.y, w * x.x);
        let prescribed: Vec<_> = mesh.boundary_nodes().into_iter().map(|n| (n, rot(mesh.nodes()[n]))).collect();
        for (d, x) in motion.displacements(&prescribed).unwrap().iter().zip(mesh.nodes()) {
            assert!((*d - rot(*x)).max_abs() < 1e-14);
        }
    }

    #[test]
    fn unprescribed_boundary_nodes_stay() {
        let mesh = small_cylinder_mesh();
        let motion = MeshMotion::new(&mesh, MeshMotionParams::default()).unwrap();
        let cyl = cylinder_nodes(&mesh);
        let t = Vec2::new(0.01, 0.0);
        let d = motion.displacements(&cyl.iter().map(|&n| (n, t)).collect::<Vec<_>>()).unwrap();
        for n in mesh.boundary_nodes() {
            let expect = if cyl.contains(&n) { t } else { Vec2::zero() };
            assert_eq!(d[n], expect);
        }
        let interior = (0..mesh.num_nodes()).filter(|&n| d[n] != Vec2::zero() && !cyl.contains(&n)).count();
        assert!(interior > 0);
    }

    #[test]
    fn interior_node_cannot_be_prescribed() {
        let mesh = small_cylinder_mesh();
        let motion = MeshMotion::new(&mesh, MeshMotionParams::default()).unwrap();
        let boundary = mesh.boundary_nodes();
        let inner = (0..mesh.num_nodes()).find(|n| !boundary.contains(n)).unwrap();
        assert!(matches!(motion.displacements(&[(inner, Vec2::new(1e-3, 0.0))]), Err(MeshMotionError::Interior(n)) if n == inner));
        assert!(matches!(motion.displacements(&[(mesh.num_nodes(), Vec2::zero())]), Err(MeshMotionError::Interior(_))));
    }

    #[test]
    fn large_motion_is_reported_as_tangled() {
        let mesh = small_cylinder_mesh();
        let motion = MeshMotion::new(&mesh, MeshMotionParams::default()).unwrap();
        let t = Vec2::new(0.65, 0.0);
        let prescribed: Vec<_> = cylinder_nodes(&mesh).into_iter().map(|n| (n, t)).collect();
        match motion.move_mesh(&prescribed, translated_patch(&mesh, t)) {
            Err(MeshMotionError::Tangled { area, .. }) => assert!(area <= 0.0),
            other => panic!("expected tangling, got {:?}", other.map(|m| m.num_nodes())),
        }
    }

    #[test]
    fn params_validation_and_defaults() {
        assert!(MeshMotionParams::default().validate().is_ok());
        for bad in [
            MeshMotionParams { stiffening: -1.0, ..Default::default() },
            MeshMotionParams { young: 0.0, ..Default::default() },
            MeshMotionParams { poisson: 0.5, ..Default::default() },
            MeshMotionParams { stiffening: f64::NAN, ..Default::default() },
        ] {
            assert!(matches!(bad.validate(), Err(MeshMotionError::Params(_))));
        }
        let p: MeshMotionParams = toml::from_str("stiffening = 2.0").unwrap();
        assert_eq!(p, MeshMotionParams { stiffening: 2.0, ..Default::default() });
        assert!(toml::from_str::<MeshMotionParams>("chi = 2.0").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn displacements_are_linear(a in prop::collection::vec(-1e-3f64..1e-3, 32), alpha in -3.0f64..3.0) {
            let mesh = small_cylinder_mesh();
            let motion = MeshMotion::new(&mesh, MeshMotionParams::default()).unwrap();
            let cyl = cylinder_nodes(&mesh);
            let p1: Vec<_> = cyl.iter().enumerate().map(|(k, &n)| (n, Vec2::new(a[2 * k % 32], a[(2 * k + 1) % 32]))).collect();
            let p2: Vec<_> = cyl.iter().map(|&n| (n, Vec2::new(1e-4, -2e-4))).collect();
            let combo: Vec<_> = p1.iter().zip(&p2).map(|(x, y)| (x.0, x.1 * alpha + y.1)).collect();
            let (d1, d2, dc) = (
                motion.displacements(&p1).unwrap(),
                motion.displacements(&p2).unwrap(),
                motion.displacements(&combo).unwrap(),
            );
            for i in 0..dc.len() {
                prop_assert!((dc[i] - (d1[i] * alpha + d2[i])).max_abs() < 1e-14);
            }
        }
    }
}
