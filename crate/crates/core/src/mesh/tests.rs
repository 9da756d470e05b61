use std::collections::BTreeMap;
use std::f64::consts::PI;

use proptest::prelude::*;

use super::*;
use crate::nurbs::shapes;

fn circle_patch(clockwise: bool) -> BTreeMap<String, NurbsCurve<f64>> {
    let mut m = BTreeMap::new();
    m.insert("c".to_string(), shapes::circle(Vec2::new(0.0, 0.0), 1.0, clockwise));
    m
}

/// Fan-triangulated unit disc with `n` boundary nodes bound to a CCW circle at
/// uniform parameter spacing.
fn disc(n: usize) -> NefemMesh {
    let patches = circle_patch(false);
    let c = &patches["c"];
    let mut nodes = vec![Vec2::new(0.0, 0.0)];
    let mut bindings = BTreeMap::new();
    for i in 0..n {
        let theta = i as f64 / n as f64;
        nodes.push(c.eval(theta).unwrap());
        bindings.insert(i + 1, SplineBinding { patch: "c".into(), theta });
    }
    let mut tris = Vec::new();
    let mut edges = Vec::new();
    for i in 0..n {
        let a = 1 + i;
        let b = 1 + (i + 1) % n;
        tris.push([0, a, b]);
        edges.push(BoundaryEdge { nodes: [a, b], patch: Some("c".into()), marker: "interface".into() });
    }
    NefemMesh::new(nodes, tris, edges, bindings, patches).unwrap()
}

fn single_curved() -> NefemMesh {
    // fluid outside a clockwise unit circle
    let patches = circle_patch(true);
    let c = &patches["c"];
    let (ta, tb) = (0.30, 0.34);
    let a = c.eval(ta).unwrap();
    let b = c.eval(tb).unwrap();
    let mid = (a + b) * 0.5;
    let out = mid * (1.3 / mid.norm());
    let mut bindings = BTreeMap::new();
    bindings.insert(0, SplineBinding { patch: "c".into(), theta: ta });
    bindings.insert(1, SplineBinding { patch: "c".into(), theta: tb });
    let edges = vec![
        BoundaryEdge { nodes: [0, 1], patch: Some("c".into()), marker: "interface".into() },
        BoundaryEdge { nodes: [1, 2], patch: None, marker: "wall".into() },
        BoundaryEdge { nodes: [2, 0], patch: None, marker: "wall".into() },
    ];
    NefemMesh::new(vec![a, b, out], vec![[0, 1, 2]], edges, bindings, patches).unwrap()
}

#[test]
fn unbound_mesh_is_all_standard() {
    let m = structured_rectangle(Vec2::new(0.0, 0.0), Vec2::new(2.0, 1.0), 4, 3, ["b", "r", "t", "l"]).unwrap();
    assert!(m.classify().unwrap().iter().all(|c| *c == ElementClass::Standard));
    assert_eq!(m.num_triangles(), 24);
    assert!((m.polygonal_area() - 2.0).abs() < 1e-14);
}

#[test]
fn one_bound_edge_gives_one_curved_element() {
    let m = single_curved();
    let cls = m.classify().unwrap();
    assert_eq!(
        cls,
        vec![ElementClass::CurvedBoundary { edge: 0, patch: "c".into(), theta_start: 0.30, theta_end: 0.34 }]
    );
    assert_eq!(m.node_markers(2), &["wall".to_string()]);
    assert_eq!(m.marker_nodes("interface"), vec![0, 1]);
}

#[test]
fn two_bound_edges_rejected() {
    let patches = circle_patch(false);
    let c = &patches["c"];
    let t = [0.0, 0.1, 0.2];
    let nodes: Vec<_> = t.iter().map(|&x| c.eval(x).unwrap()).collect();
    let bindings: BTreeMap<_, _> =
        t.iter().enumerate().map(|(i, &x)| (i, SplineBinding { patch: "c".into(), theta: x })).collect();
    let edges = vec![
        BoundaryEdge { nodes: [0, 1], patch: Some("c".into()), marker: "i".into() },
        BoundaryEdge { nodes: [1, 2], patch: Some("c".into()), marker: "i".into() },
        BoundaryEdge { nodes: [2, 0], patch: None, marker: "w".into() },
    ];
    let r = NefemMesh::new(nodes, vec![[0, 1, 2]], edges, bindings, patches);
    assert!(matches!(r, Err(MeshError::TwoCurvedEdges(0))));
}

#[test]
fn invalid_meshes_rejected() {
    let nodes = vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
    let cw = NefemMesh::new(nodes.clone(), vec![[0, 2, 1]], vec![], BTreeMap::new(), BTreeMap::new());
    assert!(matches!(cw, Err(MeshError::Inverted { .. })));

    let interior_edge = vec![BoundaryEdge { nodes: [1, 2], patch: None, marker: "w".into() }];
    let two = NefemMesh::new(
        vec![nodes[0], nodes[1], nodes[2], Vec2::new(1.0, 1.0)],
        vec![[0, 1, 2], [1, 3, 2]],
        interior_edge,
        BTreeMap::new(),
        BTreeMap::new(),
    );
    assert!(matches!(two, Err(MeshError::BoundaryEdge { count: 2, .. })));

    let patches = circle_patch(false);
    let mut bind = BTreeMap::new();
    bind.insert(1, SplineBinding { patch: "c".into(), theta: 0.1 });
    let off = NefemMesh::new(nodes, vec![[0, 1, 2]], vec![], bind, patches);
    assert!(matches!(off, Err(MeshError::OffSpline { node: 1, .. })));
}

#[test]
fn boundary_edges_follow_triangle_orientation() {
    let nodes = vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
    let e = vec![BoundaryEdge { nodes: [1, 0], patch: None, marker: "w".into() }];
    let m = NefemMesh::new(nodes, vec![[0, 1, 2]], e, BTreeMap::new(), BTreeMap::new()).unwrap();
    assert_eq!(m.boundary_edges()[0].nodes, [0, 1]);
}

#[test]
fn seam_unwrapping() {
    let c = shapes::circle(Vec2::new(0.0, 0.0), 1.0, true);
    assert_eq!(unwrap_edge_thetas(&c, 0.975, 0.0), Some((0.975, 1.0)));
    assert_eq!(unwrap_edge_thetas(&c, 0.0, 0.975), Some((1.0, 0.975)));
    assert_eq!(unwrap_edge_thetas(&c, 0.2, 0.25), Some((0.2, 0.25)));
    assert_eq!(unwrap_edge_thetas(&c, 0.9, 0.05), None);
    let open = shapes::line(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0));
    assert_eq!(unwrap_edge_thetas(&open, 0.9, 0.05), Some((0.9, 0.05)));
}

#[test]
fn disc_classification_counts_bound_edges() {
    let m = disc(50);
    let curved = m.classify().unwrap().iter().filter(|c| **c != ElementClass::Standard).count();
    assert_eq!(curved, 50);
    let r = m.h_refine().unwrap();
    let curved = r.classify().unwrap().iter().filter(|c| **c != ElementClass::Standard).count();
    assert_eq!(curved, 100);
    assert_eq!(r.num_triangles(), 200);
}

#[test]
fn refined_circle_midpoints_on_spline() {
    let r = disc(12).h_refine().unwrap().h_refine().unwrap();
    for &v in &r.marker_nodes("interface") {
        assert!((r.nodes()[v].norm() - 1.0).abs() < 1e-10);
    }
    for (v, b) in r.bindings() {
        let p = r.patch("c").unwrap().eval(b.theta).unwrap();
        assert!((p - r.nodes()[*v]).norm() < 1e-12);
    }
    // seam edge: the last edge ends at theta 0 == 1
    assert!(r.bindings().values().any(|b| (b.theta - 47.0 / 48.0).abs() < 1e-15));
}

#[test]
fn polygonal_area_converges_quadratically_to_disc() {
    let mut m = disc(16);
    let mut errs = Vec::new();
    for _ in 0..4 {
        errs.push(PI - m.polygonal_area());
        m = m.h_refine().unwrap();
    }
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    }
}

#[test]
fn equilateral_quadrisection() {
    let nodes = vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.5, 3f64.sqrt() / 2.0)];
    let m = NefemMesh::new(nodes, vec![[0, 1, 2]], vec![], BTreeMap::new(), BTreeMap::new()).unwrap();
    let r = m.h_refine().unwrap();
    assert_eq!(r.num_triangles(), 4);
    let a0 = m.triangle_area(0) / 4.0;
    for t in 0..4 {
        assert!((r.triangle_area(t) - a0).abs() < 1e-15);
    }
    assert!((r.quality().min_angle - 60.0).abs() < 1e-12);
}

#[test]
fn quality_reports() {
    let q = mesh_quality(
        &[Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)],
        &[[0, 1, 2]],
    );
    assert_eq!(q.min_area, 0.5);
    assert!((q.min_angle - 45.0).abs() < 1e-12);
    let q = mesh_quality(
        &[Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(2.0, 0.0)],
        &[[0, 1, 2]],
    );
    assert_eq!(q.min_area, 0.0);
}

#[test]
fn mesh_file_round_trip() {
    let m = disc(10).h_refine().unwrap();
    let text = format_mesh(&m);
    let back = parse_mesh(&text, circle_patch(false)).unwrap();
    assert_eq!(back.nodes(), m.nodes());
    assert_eq!(back.triangles(), m.triangles());
    assert_eq!(back.boundary_edges(), m.boundary_edges());
    assert_eq!(back.bindings(), m.bindings());
    assert_eq!(format_mesh(&back), text);
}

#[test]
fn mesh_parse_errors_name_lines() {
    let text = "$Nodes 1\n0 0.0 zero\n$Triangles 0\n$BoundaryEdges 0\n";
    match parse_mesh(text, BTreeMap::new()) {
        Err(MeshError::Parse { line, .. }) => assert_eq!(line, 2),
        other => panic!("{other:?}"),
    }
    let text = "$Nodes 3\n0 0 0\n1 1 0\n2 0 1\n$Triangles 1\n0 0 1 2\n$BoundaryEdges 1\n0 0 1 nope wall\n";
    assert!(matches!(parse_mesh(text, BTreeMap::new()), Err(MeshError::UnknownPatch(_))));
}

proptest! {
    #[test]
    fn refinement_does_not_reduce_min_angle(
        nx in 1usize..5, ny in 1usize..5, w in 0.2f64..3.0, h in 0.2f64..3.0,
        jit in proptest::collection::vec((-0.2f64..0.2, -0.2f64..0.2), 36),
    ) {
        let base = structured_rectangle(Vec2::new(0.0, 0.0), Vec2::new(w, h), nx, ny, ["b", "r", "t", "l"]).unwrap();
        // jiggle interior nodes only
        let mut nodes = base.nodes().to_vec();
        for j in 1..ny {
            for i in 1..nx {
                let k = i + (nx + 1) * j;
                let (dx, dy) = jit[k % jit.len()];
                nodes[k] += Vec2::new(dx * w / nx as f64, dy * h / ny as f64);
            }
        }
        let m = base.moved(nodes, BTreeMap::new()).unwrap();
        let r = m.h_refine().unwrap();
        prop_assert!(r.quality().min_angle >= m.quality().min_angle - 1e-12);
        prop_assert!((r.polygonal_area() - m.polygonal_area()).abs() < 1e-12 * w * h);
        prop_assert_eq!(r.num_triangles(), 4 * m.num_triangles());
    }
}
