//! Text mesh files.
//!
//! ```text
//! $Nodes n
//! id x y
//! $Triangles m
//! id n1 n2 n3
//! $BoundaryEdges k
//! id n1 n2 patch_tag marker      # patch_tag `-` for plain edges
//! $SplineBinding b
//! node_id patch_tag theta
//! ```
//!
//! Node ids are arbitrary unique integers; they are renumbered in file order.
//! Blank lines and `#` comments are ignored.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use crate::geom::Vec2;
use crate::mesh::{BoundaryEdge, MeshError, NefemMesh, SplineBinding};
use crate::nurbs::NurbsCurve;

fn perr(line: usize, msg: impl Into<String>) -> MeshError {
    MeshError::Parse { line, msg: msg.into() }
}

fn num<T: std::str::FromStr>(line: usize, tok: &str) -> Result<T, MeshError> {
    tok.parse().map_err(|_| perr(line, format!("invalid number `{tok}`")))
}

type Rows<'a> = Vec<(usize, Vec<&'a str>)>;

fn section<'a>(
    lines: &[(usize, &'a str)],
    pos: &mut usize,
    name: &str,
    fields: usize,
) -> Result<Rows<'a>, MeshError> {
    let last = lines.last().map(|l| l.0).unwrap_or(0);
    let &(ln, head) = lines.get(*pos).ok_or_else(|| perr(last + 1, format!("missing section {name}")))?;
    *pos += 1;
    let toks: Vec<&str> = head.split_whitespace().collect();
    if toks.len() != 2 || toks[0] != name {
        return Err(perr(ln, format!("expected `{name} <count>`, found `{head}`")));
    }
    let count: usize = num(ln, toks[1])?;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let &(n, l) = lines
            .get(*pos)
            .ok_or_else(|| perr(last + 1, format!("{name}: expected {count} entries, file ended")))?;
        *pos += 1;
        let t: Vec<&str> = l.split_whitespace().collect();
        if t.len() != fields {
            return Err(perr(n, format!("{name}: expected {fields} fields, found {}", t.len())));
        }
        out.push((n, t));
    }
    Ok(out)
}

pub fn parse_mesh(
    text: &str,
    patches: BTreeMap<String, NurbsCurve<f64>>,
) -> Result<NefemMesh, MeshError> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect();
    let mut pos = 0;
    let node_rows = section(&lines, &mut pos, "$Nodes", 3)?;
    let tri_rows = section(&lines, &mut pos, "$Triangles", 4)?;
    let edge_rows = section(&lines, &mut pos, "$BoundaryEdges", 5)?;
    let bind_rows =
        if pos < lines.len() { section(&lines, &mut pos, "$SplineBinding", 3)? } else { Vec::new() };
    if let Some((n, l)) = lines.get(pos) {
        return Err(perr(*n, format!("trailing content `{l}`")));
    }

    let mut ids: HashMap<i64, usize> = HashMap::new();
    let mut nodes = Vec::with_capacity(node_rows.len());
    for (n, t) in &node_rows {
        let id: i64 = num(*n, t[0])?;
        if ids.insert(id, nodes.len()).is_some() {
            return Err(perr(*n, format!("duplicate node id {id}")));
        }
        nodes.push(Vec2::new(num(*n, t[1])?, num(*n, t[2])?));
    }
    let node = |n: usize, tok: &str| -> Result<usize, MeshError> {
        let id: i64 = num(n, tok)?;
        ids.get(&id).copied().ok_or_else(|| perr(n, format!("unknown node id {id}")))
    };
    let mut triangles = Vec::with_capacity(tri_rows.len());
    for (n, t) in &tri_rows {
        triangles.push([node(*n, t[1])?, node(*n, t[2])?, node(*n, t[3])?]);
    }
    let mut edges = Vec::with_capacity(edge_rows.len());
    for (n, t) in &edge_rows {
        let patch = if t[3] == "-" { None } else { Some(t[3].to_string()) };
        edges.push(BoundaryEdge { nodes: [node(*n, t[1])?, node(*n, t[2])?], patch, marker: t[4].to_string() });
    }
    let mut bindings = BTreeMap::new();
    for (n, t) in &bind_rows {
        let v = node(*n, t[0])?;
        bindings.insert(v, SplineBinding { patch: t[1].to_string(), theta: num(*n, t[2])? });
    }
    NefemMesh::new(nodes, triangles, edges, bindings, patches)
}

pub fn read_mesh(
    path: impl AsRef<Path>,
    patches: BTreeMap<String, NurbsCurve<f64>>,
) -> Result<NefemMesh, MeshError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| MeshError::Io { path: path.display().to_string(), source })?;
    parse_mesh(&text, patches)
}

pub fn format_mesh(mesh: &NefemMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "$Nodes {}", mesh.num_nodes());
    for (i, p) in mesh.nodes().iter().enumerate() {
        let _ = writeln!(s, "{i} {:?} {:?}", p.x, p.y);
    }
    let _ = writeln!(s, "$Triangles {}", mesh.num_triangles());
    for (i, t) in mesh.triangles().iter().enumerate() {
        let _ = writeln!(s, "{i} {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "$BoundaryEdges {}", mesh.boundary_edges().len());
    for (i, e) in mesh.boundary_edges().iter().enumerate() {
        let _ = writeln!(
            s,
            "{i} {} {} {} {}",
            e.nodes[0],
            e.nodes[1],
            e.patch.as_deref().unwrap_or("-"),
            e.marker
        );
    }
    let _ = writeln!(s, "$SplineBinding {}", mesh.bindings().len());
    for (v, b) in mesh.bindings() {
        let _ = writeln!(s, "{v} {} {:?}", b.patch, b.theta);
    }
    s
}

pub fn write_mesh(path: impl AsRef<Path>, mesh: &NefemMesh) -> Result<(), MeshError> {
    let path = path.as_ref();
    std::fs::write(path, format_mesh(mesh))
        .map_err(|source| MeshError::Io { path: path.display().to_string(), source })
}
