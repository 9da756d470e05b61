//! Linear-triangle fluid meshes whose boundary nodes may be bound to NURBS
//! patches through a spline coordinate Θ.

mod generate;
mod io;
mod structured;

pub use io::{format_mesh, parse_mesh, read_mesh, write_mesh};
pub use generate::{box_uniform_thetas, geometric_fractions, graded, ChannelWithHole};
pub use structured::structured_rectangle;

use std::collections::{BTreeMap, HashMap};

use crate::geom::Vec2;
use crate::nurbs::{NurbsCurve, NurbsError};

/// Distance below which a bound node counts as lying on its spline.
pub const BINDING_TOL: f64 = 1e-10;

#[derive(Debug, thiserror::Error)]
pub enum MeshError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("node index {0} out of range")]
    UnknownNode(usize),
    #[error("unknown spline patch `{0}`")]
    UnknownPatch(String),
    #[error("triangle {tri} has nonpositive signed area {area:e}")]
    Inverted { tri: usize, area: f64 },
    #[error("boundary edge ({a}, {b}) belongs to {count} triangles, expected exactly one")]
    BoundaryEdge { a: usize, b: usize, count: usize },
    #[error("node {node} is {dist:e} away from patch `{patch}` at theta = {theta}")]
    OffSpline { node: usize, patch: String, theta: f64, dist: f64 },
    #[error("edge ({a}, {b}) on patch `{patch}` has an endpoint not bound to that patch")]
    UnboundEdge { a: usize, b: usize, patch: String },
    #[error("edge ({a}, {b}) crosses the seam of closed patch `{patch}` without a node on it")]
    SeamCrossing { a: usize, b: usize, patch: String },
    #[error("triangle {0} has more than one spline-bound edge")]
    TwoCurvedEdges(usize),
    #[error("mesh generation: {0}")]
    Generate(String),
    #[error(transparent)]
    Spline(#[from] NurbsError),
}

/// Boundary edge oriented counterclockwise with respect to its triangle, so the
/// fluid lies on the left when walking from `nodes[0]` to `nodes[1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub patch: Option<String>,
    pub marker: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplineBinding {
    pub patch: String,
    pub theta: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ElementClass {
    Standard,
    /// Local edge `edge` runs from vertex `edge` to vertex `(edge + 1) % 3`.
    CurvedBoundary { edge: usize, patch: String, theta_start: f64, theta_end: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshQuality {
    pub min_area: f64,
    /// Smallest interior angle in degrees.
    pub min_angle: f64,
}

#[derive(Clone, Debug)]
pub struct NefemMesh {
    nodes: Vec<Vec2<f64>>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
    bindings: BTreeMap<usize, SplineBinding>,
    patches: BTreeMap<String, NurbsCurve<f64>>,
    node_markers: BTreeMap<usize, Vec<String>>,
    edge_owner: HashMap<(usize, usize), (usize, usize)>,
}

pub(crate) fn signed_area(a: Vec2<f64>, b: Vec2<f64>, c: Vec2<f64>) -> f64 {
    0.5 * (b - a).cross(c - a)
}

fn key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Smallest signed area and smallest interior angle over straight triangles.
pub fn mesh_quality(nodes: &[Vec2<f64>], triangles: &[[usize; 3]]) -> MeshQuality {
    let mut min_area = f64::INFINITY;
    let mut min_angle = f64::INFINITY;
    for tri in triangles {
        let p = tri.map(|i| nodes[i]);
        min_area = min_area.min(signed_area(p[0], p[1], p[2]));
        for k in 0..3 {
            let u = p[(k + 1) % 3] - p[k];
            let v = p[(k + 2) % 3] - p[k];
            let ang = u.cross(v).abs().atan2(u.dot(v)).to_degrees();
            min_angle = min_angle.min(ang);
        }
    }
    MeshQuality { min_area, min_angle }
}

/// Θ values of an edge's endpoints with the seam of a closed curve unwrapped, so
/// that the interval between them is the short way along the curve.
pub fn unwrap_edge_thetas(
    curve: &NurbsCurve<f64>,
    ta: f64,
    tb: f64,
) -> Option<(f64, f64)> {
    if !curve.is_closed() {
        return Some((ta, tb));
    }
    let (lo, hi) = curve.domain();
    let range = hi - lo;
    if (tb - ta).abs() <= 0.5 * range {
        return Some((ta, tb));
    }
    if ta < tb {
        if ta == lo {
            Some((hi, tb))
        } else if tb == hi {
            Some((ta, lo))
        } else {
            None
        }
    } else if tb == lo {
        Some((ta, hi))
    } else if ta == hi {
        Some((lo, tb))
    } else {
        None
    }
}

impl NefemMesh {
    /// Build and validate a mesh. Boundary edges are re-oriented to follow their
    /// owning triangle.
    pub fn new(
        nodes: Vec<Vec2<f64>>,
        triangles: Vec<[usize; 3]>,
        boundary_edges: Vec<BoundaryEdge>,
        bindings: BTreeMap<usize, SplineBinding>,
        patches: BTreeMap<String, NurbsCurve<f64>>,
    ) -> Result<Self, MeshError> {
        let n = nodes.len();
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edge_owner = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= n {
                    return Err(MeshError::UnknownNode(v));
                }
            }
            let area = signed_area(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
            if !(area > 0.0) {
                return Err(MeshError::Inverted { tri: t, area });
            }
            for k in 0..3 {
                let e = key(tri[k], tri[(k + 1) % 3]);
                *count.entry(e).or_insert(0) += 1;
                edge_owner.insert(e, (t, k));
            }
        }
        let mut edges = Vec::with_capacity(boundary_edges.len());
        for mut e in boundary_edges {
            let [a, b] = e.nodes;
            let c = count.get(&key(a, b)).copied().unwrap_or(0);
            if c != 1 {
                return Err(MeshError::BoundaryEdge { a, b, count: c });
            }
            let (t, k) = edge_owner[&key(a, b)];
            let tri = triangles[t];
            e.nodes = [tri[k], tri[(k + 1) % 3]];
            if let Some(p) = &e.patch {
                if !patches.contains_key(p) {
                    return Err(MeshError::UnknownPatch(p.clone()));
                }
            }
            edges.push(e);
        }
        let mut node_markers: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        for e in &edges {
            for &v in &e.nodes {
                let list = node_markers.entry(v).or_default();
                if !list.contains(&e.marker) {
                    list.push(e.marker.clone());
                }
            }
        }
        edge_owner.retain(|k, _| count[k] == 1);
        let mesh = Self { nodes, triangles, boundary_edges: edges, bindings, patches, node_markers, edge_owner };
        mesh.check_bindings()?;
        mesh.classify()?;
        Ok(mesh)
    }

    fn check_bindings(&self) -> Result<(), MeshError> {
        for (&node, b) in &self.bindings {
            if node >= self.nodes.len() {
                return Err(MeshError::UnknownNode(node));
            }
            let curve = self.patch(&b.patch)?;
            let dist = (curve.eval(b.theta)? - self.nodes[node]).norm();
            if !(dist < BINDING_TOL) {
                return Err(MeshError::OffSpline { node, patch: b.patch.clone(), theta: b.theta, dist });
            }
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[Vec2<f64>] {
        &self.nodes
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn bindings(&self) -> &BTreeMap<usize, SplineBinding> {
        &self.bindings
    }

    pub fn patches(&self) -> &BTreeMap<String, NurbsCurve<f64>> {
        &self.patches
    }

    pub fn patch(&self, tag: &str) -> Result<&NurbsCurve<f64>, MeshError> {
        self.patches.get(tag).ok_or_else(|| MeshError::UnknownPatch(tag.to_string()))
    }

    /// Boundary-condition markers attached to a node (empty for interior nodes).
    pub fn node_markers(&self, node: usize) -> &[String] {
        self.node_markers.get(&node).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn markers(&self) -> Vec<String> {
        let mut m: Vec<String> = self.boundary_edges.iter().map(|e| e.marker.clone()).collect();
        m.sort();
        m.dedup();
        m
    }

    /// Sorted, deduplicated nodes of all edges carrying `marker`.
    pub fn marker_nodes(&self, marker: &str) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .boundary_edges
            .iter()
            .filter(|e| e.marker == marker)
            .flat_map(|e| e.nodes)
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        self.node_markers.keys().copied().collect()
    }

    /// Triangle and local edge index owning a boundary edge.
    pub fn edge_owner(&self, a: usize, b: usize) -> Option<(usize, usize)> {
        self.edge_owner.get(&key(a, b)).copied()
    }

    /// Straight-sided area of triangle `t`.
    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area(self.nodes[a], self.nodes[b], self.nodes[c])
    }

    pub fn polygonal_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Θ interval of a spline-bound edge, seam unwrapped, in edge direction.
    pub fn edge_thetas(&self, e: &BoundaryEdge) -> Result<Option<(f64, f64)>, MeshError> {
        let Some(tag) = &e.patch else { return Ok(None) };
        let [a, b] = e.nodes;
        let unbound = || MeshError::UnboundEdge { a, b, patch: tag.clone() };
        let ba = self.bindings.get(&a).filter(|x| &x.patch == tag).ok_or_else(unbound)?;
        let bb = self.bindings.get(&b).filter(|x| &x.patch == tag).ok_or_else(unbound)?;
        let curve = self.patch(tag)?;
        unwrap_edge_thetas(curve, ba.theta, bb.theta)
            .map(Some)
            .ok_or_else(|| MeshError::SeamCrossing { a, b, patch: tag.clone() })
    }

    /// NEFEM element classes in triangle order.
    pub fn classify(&self) -> Result<Vec<ElementClass>, MeshError> {
        let mut classes = vec![ElementClass::Standard; self.triangles.len()];
        for e in &self.boundary_edges {
            let Some((t0, t1)) = self.edge_thetas(e)? else { continue };
            let (t, k) = self.edge_owner(e.nodes[0], e.nodes[1]).expect("validated boundary edge");
            if classes[t] != ElementClass::Standard {
                return Err(MeshError::TwoCurvedEdges(t));
            }
            classes[t] = ElementClass::CurvedBoundary {
                edge: k,
                patch: e.patch.clone().expect("bound edge"),
                theta_start: t0,
                theta_end: t1,
            };
        }
        Ok(classes)
    }

    pub fn quality(&self) -> MeshQuality {
        mesh_quality(&self.nodes, &self.triangles)
    }

    /// Uniform quadrisection. Midpoints of spline-bound edges are placed on the
    /// spline at the mean of the end parameters and bound there.
    pub fn h_refine(&self) -> Result<Self, MeshError> {
        let mut nodes = self.nodes.clone();
        let mut bindings = self.bindings.clone();
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut curved: HashMap<(usize, usize), (String, f64, f64)> = HashMap::new();
        for e in &self.boundary_edges {
            if let Some((t0, t1)) = self.edge_thetas(e)? {
                curved.insert(key(e.nodes[0], e.nodes[1]), (e.patch.clone().unwrap(), t0, t1));
            }
        }
        let mut midpoint = |a: usize, b: usize, nodes: &mut Vec<Vec2<f64>>| -> Result<usize, MeshError> {
            let k = key(a, b);
            if let Some(&m) = mid.get(&k) {
                return Ok(m);
            }
            let id = nodes.len();
            match curved.get(&k) {
                Some((tag, t0, t1)) => {
                    let theta = 0.5 * (t0 + t1);
                    let x = self.patch(tag)?.eval(theta)?;
                    nodes.push(x);
                    bindings.insert(id, SplineBinding { patch: tag.clone(), theta });
                }
                None => nodes.push((nodes[a] + nodes[b]) * 0.5),
            }
            mid.insert(k, id);
            Ok(id)
        };
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for &[a, b, c] in &self.triangles {
            let ab = midpoint(a, b, &mut nodes)?;
            let bc = midpoint(b, c, &mut nodes)?;
            let ca = midpoint(c, a, &mut nodes)?;
            triangles.extend_from_slice(&[[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        let mut edges = Vec::with_capacity(2 * self.boundary_edges.len());
        for e in &self.boundary_edges {
            let m = mid[&key(e.nodes[0], e.nodes[1])];
            for nodes in [[e.nodes[0], m], [m, e.nodes[1]]] {
                edges.push(BoundaryEdge { nodes, patch: e.patch.clone(), marker: e.marker.clone() });
            }
        }
        Self::new(nodes, triangles, edges, bindings, self.patches.clone())
    }

    /// Same connectivity and bindings with new node positions and, optionally,
    /// replaced patch geometry. Validity is re-checked.
    pub fn moved(
        &self,
        nodes: Vec<Vec2<f64>>,
        patches: BTreeMap<String, NurbsCurve<f64>>,
    ) -> Result<Self, MeshError> {
        if nodes.len() != self.nodes.len() {
            return Err(MeshError::UnknownNode(nodes.len()));
        }
        let mut all = self.patches.clone();
        for (k, v) in patches {
            if !all.contains_key(&k) {
                return Err(MeshError::UnknownPatch(k));
            }
            all.insert(k, v);
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            let area = signed_area(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
            if !(area > 0.0) {
                return Err(MeshError::Inverted { tri: t, area });
            }
        }
        let out = Self {
            nodes,
            triangles: self.triangles.clone(),
            boundary_edges: self.boundary_edges.clone(),
            bindings: self.bindings.clone(),
            patches: all,
            node_markers: self.node_markers.clone(),
            edge_owner: self.edge_owner.clone(),
        };
        out.check_bindings()?;
        Ok(out)
    }

    /// Number of spline-bound boundary edges carrying `marker`.
    pub fn count_bound_edges(&self, marker: &str) -> usize {
        self.boundary_edges.iter().filter(|e| e.marker == marker && e.patch.is_some()).count()
    }
}

#[cfg(test)]
mod tests;
