use std::collections::BTreeMap;

use crate::geom::Vec2;
use crate::mesh::{BoundaryEdge, MeshError, NefemMesh};

/// Uniform `nx x ny` rectangle split into triangles with alternating diagonals.
/// `markers` name the bottom, right, top and left sides.
pub fn structured_rectangle(
    lower: Vec2<f64>,
    upper: Vec2<f64>,
    nx: usize,
    ny: usize,
    markers: [&str; 4],
) -> Result<NefemMesh, MeshError> {
    let id = |i: usize, j: usize| i + (nx + 1) * j;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push(Vec2::new(
                lower.x + (upper.x - lower.x) * i as f64 / nx as f64,
                lower.y + (upper.y - lower.y) * j as f64 / ny as f64,
            ));
        }
    }
    let mut tris = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if (i + j) % 2 == 0 {
                tris.push([a, b, c]);
                tris.push([a, c, d]);
            } else {
                tris.push([a, b, d]);
                tris.push([b, c, d]);
            }
        }
    }
    let mut edges = Vec::new();
    let mut push = |a: usize, b: usize, m: &str| {
        edges.push(BoundaryEdge { nodes: [a, b], patch: None, marker: m.to_string() })
    };
    for i in 0..nx {
        push(id(i, 0), id(i + 1, 0), markers[0]);
    }
    for j in 0..ny {
        push(id(nx, j), id(nx, j + 1), markers[1]);
    }
    for i in (0..nx).rev() {
        push(id(i + 1, ny), id(i, ny), markers[2]);
    }
    for j in (0..ny).rev() {
        push(id(0, j + 1), id(0, j), markers[3]);
    }
    NefemMesh::new(nodes, tris, edges, BTreeMap::new(), BTreeMap::new())
}
