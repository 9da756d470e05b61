use super::*;
use crate::nurbs::shapes::{annulus, circle};
use proptest::prelude::*;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn fixture(rel: &str) -> CaseConfig {
    CaseConfig::load(fixtures().join(rel)).unwrap()
}

fn invalid_msg(r: Result<(), BenchError>) -> String {
    match r {
        Err(BenchError::Invalid(m)) => m,
        other => panic!("expected Invalid, got {other:?}"),
    }
}

#[test]
fn fixtures_round_trip_through_toml() {
    for rel in ["dfg/dfg.toml", "flexible/flexible.toml", "fsi2/fsi2.toml"] {
        let c = fixture(rel);
        let again = CaseConfig::parse(&c.to_toml(), c.base_dir.clone()).unwrap();
        assert_eq!(c, again, "{rel}");
        c.validate().unwrap();
    }
}

#[test]
fn fixture_reynolds_numbers() {
    assert!((fixture("dfg/dfg.toml").reynolds() - 20.0).abs() < 1e-12);
    assert!((fixture("flexible/flexible.toml").reynolds() - 40.0).abs() < 5e-3);
    assert!((fixture("fsi2/fsi2.toml").reynolds() - 100.0).abs() < 1e-12);
}

#[test]
fn parse_errors_name_the_problem() {
    let text = std::fs::read_to_string(fixtures().join("dfg/dfg.toml")).unwrap();
    let bad = text.replace("density = 1.0", "density = \"one\"");
    match CaseConfig::parse(&bad, ".") {
        Err(BenchError::Parse(m)) => assert!(m.contains("density"), "{m}"),
        other => panic!("{other:?}"),
    }
    let bad = text.replace("diameter = 0.1", "diameter = 0.1\ncolour = \"red\"");
    match CaseConfig::parse(&bad, ".") {
        Err(BenchError::Parse(m)) => assert!(m.contains("colour"), "{m}"),
        other => panic!("{other:?}"),
    }
    let bad = text.replace("\"no_slip\", marker = \"wall\"", "\"sticky\", marker = \"wall\"");
    assert!(matches!(CaseConfig::parse(&bad, "."), Err(BenchError::Parse(_))));
    match CaseConfig::load(fixtures().join("dfg/missing.toml")) {
        Err(BenchError::Io { path, .. }) => assert!(path.ends_with("missing.toml")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn validation_rejects_bad_cases() {
    let base = fixture("flexible/flexible.toml");

    let mut c = base.clone();
    c.case.mesh = Some("nowhere.txt".into());
    assert!(invalid_msg(c.validate()).contains("nowhere.txt"));

    let mut c = base.clone();
    c.fluid.viscosity = -1.0;
    assert!(c.validate().is_err());

    let mut c = base.clone();
    c.case.diameter = 0.0;
    assert!(invalid_msg(c.validate()).contains("diameter"));

    let mut c = base.clone();
    c.structure = None;
    assert!(invalid_msg(c.validate()).contains("[structure]"));

    let mut c = base.clone();
    c.structure.as_mut().unwrap().supports = vec![Support { theta: 0.0, x: false, y: false }];
    assert!(invalid_msg(c.validate()).contains("supports"));

    let mut c = base.clone();
    c.fluid.bc.retain(|b| b.marker() != "cylinder");
    assert!(invalid_msg(c.validate()).contains("cylinder"));

    let mut c = base.clone();
    c.coupling.method = crate::coupling::TransferMethod::Direct;
    c.case.mode = Discretization::Fem;
    assert!(invalid_msg(c.validate()).contains("direct"));
    c.case.mode = Discretization::Nefem;
    c.validate().unwrap();

    let mut c = base.clone();
    c.case.kind = CaseKind::Transient;
    assert!(invalid_msg(c.validate()).contains("[transient]"));

    let mut c = fixture("fsi2/fsi2.toml");
    c.transient.as_mut().unwrap().time_step = 0.0;
    assert!(invalid_msg(c.validate()).contains("time_step"));

    let mut c = fixture("dfg/dfg.toml");
    c.case.mesh = None;
    assert!(invalid_msg(c.validate()).contains("mesh"));
}

#[test]
fn transient_case_is_rejected_with_diagnostic() {
    let c = fixture("fsi2/fsi2.toml");
    c.validate().unwrap();
    let dir = tempfile::tempdir().unwrap();
    match run_case(&c, Some(dir.path())) {
        Err(BenchError::Unsupported(m)) => assert_eq!(m, TRANSIENT_UNSUPPORTED),
        other => panic!("{other:?}"),
    }
    assert!(matches!(convergence_study(&c, 2, Discretization::Nefem, None), Err(BenchError::Unsupported(_))));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn fit_slope_recovers_power_laws() {
    let be = [10, 20, 40, 80];
    let e: Vec<f64> = be.iter().map(|&n| 3.0 * (n as f64).powf(-1.5)).collect();
    assert!((fit_slope(&be, &e).unwrap() - 1.5).abs() < 1e-12);
    // zeros are skipped
    let mut z = e.clone();
    z[3] = 0.0;
    assert!((fit_slope(&be, &z).unwrap() - 1.5).abs() < 1e-12);
    assert_eq!(fit_slope(&be[..1], &e[..1]), None);
    assert_eq!(fit_slope(&[10, 20], &[0.1, 0.0]), None);
    assert_eq!(fit_slope(&[10, 10], &[0.1, 0.2]), None);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn fit_slope_is_exact_for_any_power_law(s in -1.0f64..4.0, c in 1e-6f64..10.0, n0 in 4usize..100) {
        let be: Vec<usize> = (0..4).map(|k| n0 << k).collect();
        let e: Vec<f64> = be.iter().map(|&n| c * (n as f64).powf(-s)).collect();
        prop_assert!((fit_slope(&be, &e).unwrap() - s).abs() < 1e-9);
    }
}

#[test]
fn supports_hold_whole_fibres() {
    let ring = annulus(Vec2::new(0.0, 0.0), 0.8, 1.0, true).unwrap().refine(&[], &[0.5]).unwrap();
    let (nu, nv) = ring.net_size();
    let seam = support_constraints(&ring, SurfaceEdge::VMax, &[Support { theta: 0.0, x: true, y: true }]).unwrap();
    assert_eq!(seam.len(), 2 * nv);
    let pts: Vec<usize> = seam.iter().map(|c| c.point).collect();
    for j in 0..nv {
        assert!(pts.contains(&ring.index(0, j)) && pts.contains(&ring.index(nu - 1, j)));
    }
    assert!(seam.iter().all(|c| c.x == Some(0.0) && c.y == Some(0.0)));

    let half = support_constraints(&ring, SurfaceEdge::VMax, &[Support { theta: 0.5, x: false, y: true }]).unwrap();
    assert_eq!(half.len(), nv);
    assert!(half.iter().all(|c| c.x.is_none() && c.y == Some(0.0)));

    let between = support_constraints(&ring, SurfaceEdge::VMax, &[Support { theta: 0.1, x: true, y: true }]);
    assert!(matches!(between, Err(BenchError::Invalid(_))));
}

#[test]
fn leftmost_point_of_circles() {
    let c = circle(Vec2::new(0.3, -0.2), 0.7, true);
    let t = leftmost_theta(&c).unwrap();
    assert!((t - 0.5).abs() < 1e-6, "{t}");
    assert!((c.eval(t).unwrap().x - (0.3 - 0.7)).abs() < 1e-13);
    let ring = fixture("flexible/flexible.toml");
    let wetted = load_patches(&ring).unwrap().remove("cylinder").unwrap();
    assert!((leftmost_theta(&wetted).unwrap() - 0.5).abs() < 1e-6);
}

#[test]
fn vtk_layout() {
    let points = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(0.0, 1.0)];
    let cells = vec![vec![0, 1, 2], vec![0, 1, 2, 3]];
    let p = [1.0, 2.0, 3.0, 4.0];
    let mut buf = Vec::new();
    write_vtk(&mut buf, &Grid { title: "t\nignored", points: &points, cells: &cells }, &[("p", PointField::Scalar(&p))])
        .unwrap();
    let s = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(&lines[..5], ["# vtk DataFile Version 3.0", "t", "ASCII", "DATASET UNSTRUCTURED_GRID", "POINTS 4 double"]);
    assert!(s.contains("CELLS 2 9\n3 0 1 2\n4 0 1 2 3\nCELL_TYPES 2\n5\n9\nPOINT_DATA 4\nSCALARS p double 1\nLOOKUP_TABLE default\n"));
    assert_eq!(lines.len(), 5 + 4 + 1 + 2 + 1 + 2 + 1 + 2 + 4);

    let bad_cell = vec![vec![0, 1, 7]];
    assert!(write_vtk(Vec::new(), &Grid { title: "", points: &points, cells: &bad_cell }, &[]).is_err());
    let short = [1.0];
    assert!(write_vtk(Vec::new(), &Grid { title: "", points: &points, cells: &cells }, &[("p", PointField::Scalar(&short))])
        .is_err());
}

#[test]
fn report_errors_and_references() {
    let cfg = fixture("dfg/dfg.toml");
    let mk = |level, be, c_d| CaseResult {
        name: "x".into(),
        kind: CaseKind::Rigid,
        mode: Discretization::Nefem,
        level,
        boundary_elements: be,
        nodes: 0,
        triangles: 0,
        reynolds: 20.0,
        force: Vec2::new(0.0, 0.0),
        c_d,
        c_l: 0.0,
        probe: None,
        coupling_iterations: None,
        seconds: 0.0,
    };
    let results = [mk(0, 50, 5.5), mk(1, 100, 5.6), mk(2, 200, 5.58)];
    let r = report_from_results(&cfg, Discretization::Nefem, &results, None).unwrap();
    assert_eq!(r.source, ReferenceSource::Configured);
    assert_eq!(r.reference, vec![5.579535]);
    for row in &r.rows {
        assert!(row.errors[0] >= 0.0);
        assert!((row.errors[0] - ((row.values[0] - 5.579535) / 5.579535).abs()).abs() < 1e-15);
    }
    let r = report_from_results(&cfg, Discretization::Nefem, &results, Some(&[5.6])).unwrap();
    assert_eq!(r.source, ReferenceSource::External);
    assert_eq!(r.rows[1].errors[0], 0.0);
    assert!(report_from_results(&cfg, Discretization::Nefem, &results, Some(&[1.0, 2.0])).is_err());
    let mut c = cfg.clone();
    c.case.reference = None;
    let r = report_from_results(&c, Discretization::Nefem, &results, None).unwrap();
    assert_eq!(r.source, ReferenceSource::FinestGrid);
    assert_eq!(r.rows[2].errors[0], 0.0);
    assert_eq!(r.slopes.len(), 1);

    let mut csv = Vec::new();
    r.write_csv(&mut csv).unwrap();
    let csv = String::from_utf8(csv).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "level,boundary_elements,c_d,c_d_rel_error");
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn flexible_runs_are_deterministic() {
    let mut cfg = fixture("flexible/flexible.toml");
    cfg.case.refine = 0;
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = run_case(&cfg, Some(a.path())).unwrap();
    let rb = run_case(&cfg, Some(b.path())).unwrap();
    assert_eq!(ra.csv_row(), rb.csv_row());
    for f in ["summary.csv", "coupling.csv", "interface.csv", "fluid.vtk", "structure.vtk"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert!(!x.is_empty() && x == y, "{f} differs");
    }
    let (theta, d) = ra.probe.unwrap();
    assert_eq!(theta, 0.5);
    assert!(d.x > 0.0, "the upstream point is pushed downstream");
    assert!(ra.force.x > 0.0);
    assert!(ra.coupling_iterations.unwrap() <= cfg.coupling.max_iterations);
    let log = std::fs::read_to_string(a.path().join("coupling.csv")).unwrap();
    assert_eq!(log.lines().count(), ra.coupling_iterations.unwrap() + 1);
}

#[test]
fn flexible_deformed_mesh_stays_valid_on_grid_two() {
    let cfg = fixture("flexible/flexible.toml");
    let s = solve_level(&cfg, 1, Discretization::Nefem).unwrap();
    assert_eq!(s.result.boundary_elements, 80);
    let q = s.mesh.quality();
    assert!(q.min_area > 0.0 && q.min_angle > 5.0, "{q:?}");
    let f = s.flexible.as_ref().unwrap();
    assert!(f.log.last().unwrap().norm_dd < cfg.coupling.tolerance);
    let moved: f64 = s.mesh.nodes().iter().zip(load_mesh(&cfg, 1).unwrap().nodes()).map(|(a, b)| (*a - *b).norm()).fold(0.0, f64::max);
    assert!(moved > 0.0);
}
