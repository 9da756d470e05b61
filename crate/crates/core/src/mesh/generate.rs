//! Block-structured triangulation of a rectangular channel around one closed
//! spline hole: an O-grid ring from the hole to a square box, and a graded
//! tensor-product grid for the rest of the channel.

use std::collections::BTreeMap;

use crate::geom::Vec2;
use crate::mesh::{signed_area, BoundaryEdge, MeshError, NefemMesh, SplineBinding};
use crate::nurbs::NurbsCurve;

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelWithHole {
    pub length: f64,
    pub height: f64,
    /// Centre of the hole and of the square box around it.
    pub center: Vec2<f64>,
    pub box_half: f64,
    /// Spline parameters of the hole nodes, increasing, starting at the seam.
    pub thetas: Vec<f64>,
    pub ring_layers: usize,
    /// Thickness of the first ring layer as a fraction of the ray length.
    pub first_layer: f64,
    /// Geometric growth of cells away from the box, capped at `max_h`.
    pub growth: f64,
    pub max_h: f64,
    pub patch: String,
    /// Markers of the inflow (x = 0), outflow (x = length), walls and hole.
    pub markers: [String; 4],
}

/// Offsets `0 = s_0 < ... < s_n = len` starting with spacing `h0` and growing by
/// `growth` up to `hmax`, rescaled to end exactly at `len`.
pub fn graded(len: f64, h0: f64, growth: f64, hmax: f64) -> Vec<f64> {
    let mut s = vec![0.0];
    let mut h = h0;
    let mut x = 0.0;
    while x + 0.5 * h < len {
        x += h;
        s.push(x);
        h = (h * growth).min(hmax);
    }
    if s.len() < 2 {
        s.push(len);
    }
    let last = *s.last().unwrap();
    s.iter().map(|v| v * len / last).collect()
}

/// Fractions `0 = f_0 < ... < f_n = 1` with geometric growth and first step `f1`.
pub fn geometric_fractions(n: usize, f1: f64) -> Vec<f64> {
    let mut q = 1.0;
    if (f1 * n as f64) < 1.0 {
        let sum = |q: f64| (q.powi(n as i32) - 1.0) / (q - 1.0) * f1;
        let (mut lo, mut hi) = (1.0 + 1e-12, 2.0);
        while sum(hi) < 1.0 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if sum(mid) < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        q = 0.5 * (lo + hi);
    }
    let mut out = vec![0.0];
    let mut h = 1.0;
    for _ in 0..n {
        let last = *out.last().unwrap();
        out.push(last + h);
        h *= q;
    }
    let total = *out.last().unwrap();
    out.iter().map(|v| v / total).collect()
}

/// Parameters of hole nodes placed at uniform angles on each side of the box,
/// seam first. `per_side` counts segments on the right, bottom, left and top
/// sides (the right count must be even so the seam is a node).
pub fn box_uniform_thetas(
    curve: &NurbsCurve<f64>,
    center: Vec2<f64>,
    per_side: [usize; 4],
) -> Result<Vec<f64>, MeshError> {
    use std::f64::consts::FRAC_PI_2;
    let [nr, nb, nl, nt] = per_side;
    assert!(nr % 2 == 0, "right-side segment count must be even");
    let (lo, hi) = curve.domain();
    let start = curve.eval(lo)? - center;
    let r = start.norm();
    let mut angles = Vec::new();
    // walk clockwise from angle 0
    for k in 0..nr / 2 {
        angles.push(-(FRAC_PI_2 / 2.0) * k as f64 / (nr / 2) as f64);
    }
    for (side, n) in [nb, nl, nt].into_iter().enumerate() {
        let a0 = -FRAC_PI_2 / 2.0 - FRAC_PI_2 * side as f64;
        for k in 0..n {
            angles.push(a0 - FRAC_PI_2 * k as f64 / n as f64);
        }
    }
    let a0 = -FRAC_PI_2 / 2.0 - 3.0 * FRAC_PI_2;
    for k in 0..nr / 2 {
        angles.push(a0 - (FRAC_PI_2 / 2.0) * k as f64 / (nr / 2) as f64);
    }
    // follow the spline's orientation
    let probe = curve.eval(lo + 1e-3 * (hi - lo))? - center;
    let sign = if start.cross(probe) < 0.0 { 1.0 } else { -1.0 };
    let phi0 = start.y.atan2(start.x);
    let mut thetas = vec![lo];
    for &a in &angles[1..] {
        let phi = phi0 + sign * a;
        let x = center + Vec2::new(phi.cos(), phi.sin()) * r;
        thetas.push(curve.project_point(x, curve.default_seeds())?);
    }
    Ok(thetas)
}

impl ChannelWithHole {
    pub fn build(&self, curve: &NurbsCurve<f64>) -> Result<NefemMesh, MeshError> {
        let c = self.center;
        let b = self.box_half;
        let m = self.thetas.len();
        let hole: Vec<Vec2<f64>> = self.thetas.iter().map(|&t| curve.eval(t)).collect::<Result<_, _>>()?;
        let square: Vec<Vec2<f64>> = hole
            .iter()
            .map(|&p| {
                let d = p - c;
                c + d * (b / d.x.abs().max(d.y.abs()))
            })
            .collect();

        let tol = 1e-12 * b;
        let side = |pick: &dyn Fn(Vec2<f64>) -> bool, coord: &dyn Fn(Vec2<f64>) -> f64| {
            let mut v: Vec<f64> = square.iter().filter(|p| pick(**p)).map(|p| coord(*p)).collect();
            v.sort_by(f64::total_cmp);
            v.dedup_by(|a, b| (*a - *b).abs() < tol);
            v
        };
        let top = side(&|p| (p.y - (c.y + b)).abs() < tol, &|p| p.x);
        let bottom = side(&|p| (p.y - (c.y - b)).abs() < tol, &|p| p.x);
        let right = side(&|p| (p.x - (c.x + b)).abs() < tol, &|p| p.y);
        let left = side(&|p| (p.x - (c.x - b)).abs() < tol, &|p| p.y);
        let same = |a: &[f64], b: &[f64]| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-9);
        if !same(&top, &bottom) || !same(&left, &right) || top.len() < 2 || left.len() < 2 {
            return Err(MeshError::Generate("hole nodes are not symmetric about the box axes".into()));
        }

        let corners = (top[0] - (c.x - b)).abs() < 1e-9
            && (top[top.len() - 1] - (c.x + b)).abs() < 1e-9
            && (left[0] - (c.y - b)).abs() < 1e-9
            && (left[left.len() - 1] - (c.y + b)).abs() < 1e-9;
        if !corners {
            return Err(MeshError::Generate("box corners must be hole-node directions".into()));
        }
        if c.x - b <= 0.0 || c.y - b <= 0.0 || c.x + b >= self.length || c.y + b >= self.height {
            return Err(MeshError::Generate("box does not fit in the channel".into()));
        }
        let h_box_x = 2.0 * b / (top.len() - 1) as f64;
        let h_box_y = 2.0 * b / (left.len() - 1) as f64;
        let mut xs: Vec<f64> = graded(c.x - b, h_box_x, self.growth, self.max_h)
            .into_iter()
            .rev()
            .map(|s| c.x - b - s)
            .collect();
        xs.pop();
        xs.extend_from_slice(&top);
        xs.extend(graded(self.length - c.x - b, h_box_x, self.growth, self.max_h).into_iter().skip(1).map(|s| c.x + b + s));
        let mut ys: Vec<f64> = graded(c.y - b, h_box_y, self.growth, self.max_h)
            .into_iter()
            .rev()
            .map(|s| c.y - b - s)
            .collect();
        ys.pop();
        ys.extend_from_slice(&left);
        ys.extend(graded(self.height - c.y - b, h_box_y, self.growth, self.max_h).into_iter().skip(1).map(|s| c.y + b + s));
        xs[0] = 0.0;
        *xs.last_mut().unwrap() = self.length;
        ys[0] = 0.0;
        *ys.last_mut().unwrap() = self.height;

        let find = |v: &[f64], x: f64| v.iter().position(|&t| (t - x).abs() < 1e-9).expect("box line in grid");
        let (i0, i1) = (find(&xs, c.x - b), find(&xs, c.x + b));
        let (j0, j1) = (find(&ys, c.y - b), find(&ys, c.y + b));
        let inside = |i: usize, j: usize| i > i0 && i < i1 && j > j0 && j < j1;

        let mut nodes = Vec::new();
        let mut grid_id = vec![usize::MAX; xs.len() * ys.len()];
        let gid = |i: usize, j: usize| i + xs.len() * j;
        for (j, &y) in ys.iter().enumerate() {
            for (i, &x) in xs.iter().enumerate() {
                if !inside(i, j) {
                    grid_id[gid(i, j)] = nodes.len();
                    nodes.push(Vec2::new(x, y));
                }
            }
        }
        let mut triangles = Vec::new();
        let push_quad = |q: [usize; 4], alt: bool, nodes: &[Vec2<f64>], tris: &mut Vec<[usize; 3]>| {
            let [a, b2, cc, d] = q;
            let (t1, t2) = if alt { ([a, b2, cc], [a, cc, d]) } else { ([a, b2, d], [b2, cc, d]) };
            for t in [t1, t2] {
                if signed_area(nodes[t[0]], nodes[t[1]], nodes[t[2]]) > 0.0 {
                    tris.push(t);
                } else {
                    tris.push([t[0], t[2], t[1]]);
                }
            }
        };
        let cx_mid = 0.5 * (i0 + i1) as f64;
        let cy_mid = 0.5 * (j0 + j1) as f64;
        for j in 0..ys.len() - 1 {
            for i in 0..xs.len() - 1 {
                if i >= i0 && i < i1 && j >= j0 && j < j1 {
                    continue;
                }
                let q = [gid(i, j), gid(i + 1, j), gid(i + 1, j + 1), gid(i, j + 1)].map(|k| grid_id[k]);
                // diagonals mirrored about the box axes
                let alt = ((i as f64 + 0.5) < cx_mid) == ((j as f64 + 0.5) < cy_mid);
                push_quad(q, alt, &nodes, &mut triangles);
            }
        }

        let fr = geometric_fractions(self.ring_layers, self.first_layer);
        let mut ring = vec![vec![0usize; self.ring_layers + 1]; m];
        let mut bindings = BTreeMap::new();
        for k in 0..m {
            let sq = square[k];
            ring[k][self.ring_layers] = grid_id[gid(find(&xs, sq.x), find(&ys, sq.y))];
            ring[k][0] = nodes.len();
            nodes.push(hole[k]);
            bindings.insert(ring[k][0], SplineBinding { patch: self.patch.clone(), theta: self.thetas[k] });
            for (l, &f) in fr.iter().enumerate().take(self.ring_layers).skip(1) {
                ring[k][l] = nodes.len();
                nodes.push(hole[k] + (sq - hole[k]) * f);
            }
        }
        for k in 0..m {
            let k1 = (k + 1) % m;
            for l in 0..self.ring_layers {
                let q = [ring[k][l], ring[k1][l], ring[k1][l + 1], ring[k][l + 1]];
                let d1 = (nodes[q[0]] - nodes[q[2]]).norm();
                let d2 = (nodes[q[1]] - nodes[q[3]]).norm();
                push_quad(q, d1 <= d2, &nodes, &mut triangles);
            }
        }

        let [inflow, outflow, wall, hole_marker] = &self.markers;
        let mut edges = Vec::new();
        let plain = |a: usize, b: usize, marker: &str| BoundaryEdge { nodes: [a, b], patch: None, marker: marker.into() };
        let (nx, ny) = (xs.len(), ys.len());
        for i in 0..nx - 1 {
            edges.push(plain(grid_id[gid(i, 0)], grid_id[gid(i + 1, 0)], wall));
            edges.push(plain(grid_id[gid(i, ny - 1)], grid_id[gid(i + 1, ny - 1)], wall));
        }
        for j in 0..ny - 1 {
            edges.push(plain(grid_id[gid(0, j)], grid_id[gid(0, j + 1)], inflow));
            edges.push(plain(grid_id[gid(nx - 1, j)], grid_id[gid(nx - 1, j + 1)], outflow));
        }
        for k in 0..m {
            edges.push(BoundaryEdge {
                nodes: [ring[k][0], ring[(k + 1) % m][0]],
                patch: Some(self.patch.clone()),
                marker: hole_marker.clone(),
            });
        }
        let mut patches = BTreeMap::new();
        patches.insert(self.patch.clone(), curve.clone());
        NefemMesh::new(nodes, triangles, edges, bindings, patches)
    }
}
