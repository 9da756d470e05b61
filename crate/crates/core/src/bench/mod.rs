//! Benchmark cases: loading case files, running one grid, and h-refinement studies.

mod config;
pub mod vtk;

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

pub use config::{BcSpec, CaseConfig, CaseKind, CaseSection, EdgeName, FluidSection, StructureSection, Support, TransientSection};

use crate::coupling::{strong_coupling_solve, write_iteration_log, CouplingError, CouplingMap, FluidSetup};
use crate::fluid::{force_coefficients, interface_force, Discretization, FluidError, FluidSolver, FluidState};
use crate::geom::Vec2;
use crate::mesh::{read_mesh, MeshError, NefemMesh};
use crate::mesh_motion::{MeshMotion, MeshMotionError};
use crate::nurbs::io::{read_spline, SplineEntity, SplineFileError};
use crate::nurbs::{NurbsCurve, NurbsError, NurbsSurface, SurfaceEdge};
use crate::structure::{Constraint, StructureBc, StructureError, StructureSolver, StructureState};
use vtk::{write_vtk, Grid, PointField};

/// Diagnostic returned by [`run_case`] for transient cases.
pub const TRANSIENT_UNSUPPORTED: &str = "transient FSI is not supported: only steady fluid and quasi-static \
structure solvers are implemented; the case file was parsed and validated but cannot be run";

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("case file parse error: {0}")]
    Parse(String),
    #[error("invalid case: {0}")]
    Invalid(String),
    #[error("{0}")]
    Unsupported(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("spline file {path}: {source}")]
    SplineFile { path: PathBuf, source: SplineFileError },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Spline(#[from] NurbsError),
    #[error(transparent)]
    Fluid(#[from] FluidError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Coupling(#[from] CouplingError),
    #[error(transparent)]
    Motion(#[from] MeshMotionError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BenchError + '_ {
    move |source| BenchError::Io { path: path.into(), source }
}

fn read_entity(cfg: &CaseConfig, p: &Path) -> Result<SplineEntity, BenchError> {
    let full = cfg.resolve(p);
    read_spline(&full).map_err(|source| BenchError::SplineFile { path: full, source })
}

/// Spline curves of the case keyed by patch tag.
pub fn load_patches(cfg: &CaseConfig) -> Result<BTreeMap<String, NurbsCurve<f64>>, BenchError> {
    let mut out = BTreeMap::new();
    for (tag, p) in &cfg.case.splines {
        match read_entity(cfg, p)? {
            SplineEntity::Curve(c) => {
                out.insert(tag.clone(), c);
            }
            SplineEntity::Surface(_) => {
                return Err(BenchError::Invalid(format!("spline `{tag}` is a surface; patches must be curves")));
            }
        }
    }
    Ok(out)
}

/// The case mesh after `level` uniform refinements.
pub fn load_mesh(cfg: &CaseConfig, level: usize) -> Result<NefemMesh, BenchError> {
    let p = cfg.case.mesh.as_ref().ok_or_else(|| BenchError::Invalid("[case] mesh is required".into()))?;
    let mut mesh = read_mesh(cfg.resolve(p), load_patches(cfg)?)?;
    for _ in 0..level {
        mesh = mesh.h_refine()?;
    }
    Ok(mesh)
}

pub fn load_surface(cfg: &CaseConfig) -> Result<NurbsSurface<f64>, BenchError> {
    let s = cfg.structure.as_ref().ok_or_else(|| BenchError::Invalid("[structure] section is missing".into()))?;
    match read_entity(cfg, &s.spline)? {
        SplineEntity::Surface(sf) => Ok(sf),
        SplineEntity::Curve(_) => Err(BenchError::Invalid("[structure] spline must be a surface".into())),
    }
}

/// Control-point constraints for the supports. Each support holds the net
/// fibre through the control point that interpolates the wetted curve at its
/// parameter; on a closed wetted curve the seam fibres at both ends are held.
pub fn support_constraints(
    surface: &NurbsSurface<f64>,
    edge: SurfaceEdge,
    supports: &[Support],
) -> Result<Vec<Constraint>, BenchError> {
    let curve = surface.boundary_curve(edge)?;
    let (nu, nv) = surface.net_size();
    let along_u = matches!(edge, SurfaceEdge::VMin | SurfaceEdge::VMax);
    let mut out = Vec::new();
    for s in supports {
        let b = curve.rational_basis(s.theta)?;
        let k = b
            .indices()
            .zip(&b.values)
            .find(|(_, &r)| (r - 1.0).abs() < 1e-12)
            .map(|(k, _)| k)
            .ok_or_else(|| {
                BenchError::Invalid(format!("no control point interpolates the wetted curve at theta = {}", s.theta))
            })?;
        let mut fibres = vec![k];
        let last = curve.num_control_points() - 1;
        if curve.is_closed() && (k == 0 || k == last) {
            fibres.push(if k == 0 { last } else { 0 });
        }
        for f in fibres {
            let points: Vec<usize> =
                if along_u { (0..nv).map(|j| surface.index(f, j)).collect() } else { (0..nu).map(|i| surface.index(i, f)).collect() };
            for p in points {
                out.push(Constraint {
                    point: p,
                    x: if s.x { Some(0.0) } else { None },
                    y: if s.y { Some(0.0) } else { None },
                });
            }
        }
    }
    Ok(out)
}

/// Parameter of the leftmost point of a curve.
pub fn leftmost_theta(curve: &NurbsCurve<f64>) -> Result<f64, NurbsError> {
    let (lo, hi) = curve.domain();
    let n = 4000;
    let at = |k: usize| lo + (hi - lo) * k as f64 / n as f64;
    let mut best = (0, f64::INFINITY);
    for k in 0..=n {
        let x = curve.eval(at(k))?.x;
        if x < best.1 {
            best = (k, x);
        }
    }
    let (mut a, mut b) = (at(best.0.saturating_sub(1)), at((best.0 + 1).min(n)));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if curve.eval(c)?.x <= curve.eval(d)?.x {
            b = d;
        } else {
            a = c;
        }
    }
    let t = 0.5 * (a + b);
    Ok(if curve.eval(at(best.0))?.x <= curve.eval(t)?.x { at(best.0) } else { t })
}

/// Outcome of one grid.
#[derive(Clone, Debug)]
pub struct CaseResult {
    pub name: String,
    pub kind: CaseKind,
    pub mode: Discretization,
    pub level: usize,
    /// Mesh edges on the interface marker.
    pub boundary_elements: usize,
    pub nodes: usize,
    pub triangles: usize,
    pub reynolds: f64,
    pub force: Vec2<f64>,
    pub c_d: f64,
    pub c_l: f64,
    /// Wetted-curve parameter and displacement of the probe point (flexible cases).
    pub probe: Option<(f64, Vec2<f64>)>,
    pub coupling_iterations: Option<usize>,
    pub seconds: f64,
}

impl CaseResult {
    /// Study quantities: `c_d` for rigid cases, drag and probe x-displacement for flexible ones.
    pub fn quantities(&self) -> Vec<(&'static str, f64)> {
        match self.probe {
            Some((_, d)) => vec![("drag", self.force.x), ("probe_dx", d.x)],
            None => vec![("c_d", self.c_d)],
        }
    }

    pub const CSV_HEADER: &'static str =
        "case,mode,level,boundary_elements,nodes,triangles,reynolds,force_x,force_y,c_d,c_l,probe_theta,probe_dx,probe_dy,coupling_iterations";

    pub fn csv_row(&self) -> String {
        let (pt, pd) = match self.probe {
            Some((t, d)) => (format!("{t:.12e}"), [format!("{:.12e}", d.x), format!("{:.12e}", d.y)]),
            None => (String::new(), [String::new(), String::new()]),
        };
        format!(
            "{},{},{},{},{},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{},{},{},{}",
            self.name,
            mode_name(self.mode),
            self.level,
            self.boundary_elements,
            self.nodes,
            self.triangles,
            self.reynolds,
            self.force.x,
            self.force.y,
            self.c_d,
            self.c_l,
            pt,
            pd[0],
            pd[1],
            self.coupling_iterations.map(|n| n.to_string()).unwrap_or_default()
        )
    }
}

impl fmt::Display for CaseResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "case       {} ({:?}, {})", self.name, self.kind, mode_name(self.mode))?;
        writeln!(f, "grid       level {}: {} interface edges, {} nodes, {} triangles", self.level, self.boundary_elements, self.nodes, self.triangles)?;
        writeln!(f, "Re         {:.4}", self.reynolds)?;
        writeln!(f, "force      ({:.10e}, {:.10e}) N/m", self.force.x, self.force.y)?;
        writeln!(f, "c_d, c_l   {:.6}, {:.6}", self.c_d, self.c_l)?;
        if let Some((t, d)) = self.probe {
            writeln!(f, "probe      theta {t:.6}: displacement ({:.10e}, {:.10e}) m", d.x, d.y)?;
        }
        if let Some(n) = self.coupling_iterations {
            writeln!(f, "coupling   {n} iterations")?;
        }
        write!(f, "time       {:.2} s", self.seconds)
    }
}

pub fn mode_name(m: Discretization) -> &'static str {
    match m {
        Discretization::Nefem => "nefem",
        Discretization::Fem => "fem",
    }
}

struct Solved {
    result: CaseResult,
    mesh: NefemMesh,
    fluid: FluidState,
    flexible: Option<FlexibleParts>,
}

struct FlexibleParts {
    solver: StructureSolver,
    state: StructureState,
    map: CouplingMap,
    log: Vec<crate::coupling::IterationRecord>,
}

fn solve_level(cfg: &CaseConfig, level: usize, mode: Discretization) -> Result<Solved, BenchError> {
    let start = Instant::now();
    let mesh = load_mesh(cfg, level)?;
    let params = cfg.fluid.params()?;
    let bc = cfg.fluid.bc();
    let marker = cfg.case.interface.as_str();
    let boundary_elements = mesh.boundary_edges().iter().filter(|e| e.marker == marker).count();
    let (mesh, fluid, force, flexible) = match cfg.case.kind {
        CaseKind::Transient => return Err(BenchError::Unsupported(TRANSIENT_UNSUPPORTED.into())),
        CaseKind::Rigid => {
            let solver = FluidSolver::new(&mesh, params, &bc, mode)?;
            let (state, _) = solver.solve_with_stress(None)?;
            let force = interface_force(&mesh, &state, marker, mode)?;
            drop(solver);
            (mesh, state, force, None)
        }
        CaseKind::Flexible => {
            let s = cfg.structure.as_ref().ok_or_else(|| BenchError::Invalid("[structure] section is missing".into()))?;
            let surface = load_surface(cfg)?;
            let edge = SurfaceEdge::from(s.wetted_edge);
            let constraints = support_constraints(&surface, edge, &s.supports)?;
            let solver = StructureSolver::new(surface.clone(), s.params()?, &StructureBc::new(constraints))?;
            let map = CouplingMap::build(&mesh, marker, &surface, edge)?;
            let motion = MeshMotion::new(&mesh, cfg.mesh_motion)?;
            let setup = FluidSetup { params, bc, disc: mode, marker: marker.into() };
            let sol = strong_coupling_solve(&setup, &solver, &map, &motion, &cfg.coupling)?;
            drop(motion);
            let parts = FlexibleParts { solver, state: sol.structure, map, log: sol.log };
            (sol.mesh, sol.fluid, sol.force, Some(parts))
        }
    };
    let (c_d, c_l) = force_coefficients(force, cfg.fluid.density, cfg.fluid.mean_velocity, cfg.case.diameter);
    let probe = match &flexible {
        Some(p) => {
            let wetted = p.map.wetted_curve();
            let theta = match cfg.structure.as_ref().and_then(|s| s.probe_theta) {
                Some(t) => t,
                None => leftmost_theta(wetted)?,
            };
            let d = p.map.deformed_curve(&p.state)?.eval(theta)? - wetted.eval(theta)?;
            Some((theta, d))
        }
        None => None,
    };
    let result = CaseResult {
        name: cfg.case.name.clone(),
        kind: cfg.case.kind,
        mode,
        level,
        boundary_elements,
        nodes: mesh.num_nodes(),
        triangles: mesh.num_triangles(),
        reynolds: cfg.reynolds(),
        force,
        c_d,
        c_l,
        probe,
        coupling_iterations: flexible.as_ref().map(|p| p.log.len()),
        seconds: start.elapsed().as_secs_f64(),
    };
    Ok(Solved { result, mesh, fluid, flexible })
}

/// Solves one grid (`level` refinements of the case mesh) without writing files.
pub fn run_level(cfg: &CaseConfig, level: usize, mode: Discretization) -> Result<CaseResult, BenchError> {
    Ok(solve_level(cfg, level, mode)?.result)
}

/// Validates and runs the case at its configured refinement, writing
/// `summary.csv`, `fluid.vtk` and, for flexible cases, `coupling.csv`,
/// `interface.csv` and `structure.vtk` into `out` (default: the case output directory).
pub fn run_case(cfg: &CaseConfig, out: Option<&Path>) -> Result<CaseResult, BenchError> {
    cfg.validate()?;
    if cfg.case.kind == CaseKind::Transient {
        return Err(BenchError::Unsupported(TRANSIENT_UNSUPPORTED.into()));
    }
    let solved = solve_level(cfg, cfg.case.refine, cfg.case.mode)?;
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.output_dir());
    std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    write_outputs(&dir, &solved)?;
    Ok(solved.result)
}

fn create(dir: &Path, name: &str) -> Result<(std::io::BufWriter<std::fs::File>, PathBuf), BenchError> {
    let p = dir.join(name);
    let f = std::fs::File::create(&p).map_err(io_err(&p))?;
    Ok((std::io::BufWriter::new(f), p))
}

fn write_outputs(dir: &Path, s: &Solved) -> Result<(), BenchError> {
    let (mut w, p) = create(dir, "summary.csv")?;
    writeln!(w, "{}\n{}", CaseResult::CSV_HEADER, s.result.csv_row()).and_then(|_| w.flush()).map_err(io_err(&p))?;

    let cells: Vec<Vec<usize>> = s.mesh.triangles().iter().map(|t| t.to_vec()).collect();
    let stress = s.fluid.stress.clone().unwrap_or_default();
    let mut fields = vec![("velocity", PointField::Vector(&s.fluid.velocity)), ("pressure", PointField::Scalar(&s.fluid.pressure))];
    if !stress.is_empty() {
        fields.push(("stress", PointField::Tensor(&stress)));
    }
    let (mut w, p) = create(dir, "fluid.vtk")?;
    write_vtk(&mut w, &Grid { title: &s.result.name, points: s.mesh.nodes(), cells: &cells }, &fields)
        .and_then(|_| w.flush())
        .map_err(io_err(&p))?;

    if let Some(f) = &s.flexible {
        let (mut w, p) = create(dir, "coupling.csv")?;
        write_iteration_log(&mut w, &f.log).and_then(|_| w.flush()).map_err(io_err(&p))?;

        let (mut w, p) = create(dir, "interface.csv")?;
        let disp = crate::coupling::transfer_displacements(&f.state, &f.map);
        let mut text = String::from("node,theta,x,y,dx,dy\n");
        for ((&node, &theta), d) in f.map.nodes.iter().zip(&f.map.thetas).zip(&disp) {
            let x = s.mesh.nodes()[node];
            text += &format!("{node},{theta:.12e},{:.12e},{:.12e},{:.12e},{:.12e}\n", x.x, x.y, d.x, d.y);
        }
        w.write_all(text.as_bytes()).and_then(|_| w.flush()).map_err(io_err(&p))?;

        let (points, cells, disp) = sample_structure(&f.solver, &f.state, 4)?;
        let (mut w, p) = create(dir, "structure.vtk")?;
        write_vtk(
            &mut w,
            &Grid { title: &format!("{} structure", s.result.name), points: &points, cells: &cells },
            &[("displacement", PointField::Vector(&disp))],
        )
        .and_then(|_| w.flush())
        .map_err(io_err(&p))?;
    }
    Ok(())
}

/// Reference-configuration samples of the structure, `per_span` quads per knot
/// span in each direction, with the displacement at every sample.
fn sample_structure(
    solver: &StructureSolver,
    state: &StructureState,
    per_span: usize,
) -> Result<(Vec<Vec2<f64>>, Vec<Vec<usize>>, Vec<Vec2<f64>>), BenchError> {
    let sf = solver.surface();
    let params = |spans: Vec<(f64, f64)>| {
        let mut t = vec![spans[0].0];
        for (a, b) in spans {
            for k in 1..=per_span {
                t.push(a + (b - a) * k as f64 / per_span as f64);
            }
        }
        t
    };
    let us = params(sf.knots_u().spans());
    let vs = params(sf.knots_v().spans());
    let mut points = Vec::with_capacity(us.len() * vs.len());
    let mut disp = Vec::with_capacity(points.capacity());
    for &v in &vs {
        for &u in &us {
            points.push(sf.eval(u, v)?);
            disp.push(solver.displacement_at(state, u, v)?);
        }
    }
    let nu = us.len();
    let mut cells = Vec::new();
    for j in 0..vs.len() - 1 {
        for i in 0..nu - 1 {
            let a = j * nu + i;
            cells.push(vec![a, a + 1, a + nu + 1, a + nu]);
        }
    }
    Ok((points, cells, disp))
}

/// Per-grid row of a study.
#[derive(Clone, Debug, PartialEq)]
pub struct StudyRow {
    pub level: usize,
    pub boundary_elements: usize,
    pub values: Vec<f64>,
    /// `|value - reference| / |reference|` per quantity.
    pub errors: Vec<f64>,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ReferenceSource {
    /// `[case] reference`.
    Configured,
    /// The finest grid of the study itself.
    FinestGrid,
    /// Values supplied by the caller.
    External,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub case: String,
    pub mode: Discretization,
    pub quantities: Vec<String>,
    pub reference: Vec<f64>,
    pub source: ReferenceSource,
    /// Ordered from coarse to fine.
    pub rows: Vec<StudyRow>,
    /// Fitted order `s` in `error ~ h^s` per quantity; `None` with fewer than two nonzero errors.
    pub slopes: Vec<Option<f64>>,
}

/// Least-squares slope of `log error` against `log h`, with `h ∝ 1 / boundary elements`.
/// Zero errors are skipped; `None` when fewer than two points remain.
pub fn fit_slope(boundary_elements: &[usize], errors: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = boundary_elements
        .iter()
        .zip(errors)
        .filter(|(_, &e)| e > 0.0 && e.is_finite())
        .map(|(&n, &e)| (-(n as f64).ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
    let (mx, my) = (sx / m, sy / m);
    let (num, den) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + (p.0 - mx) * (p.1 - my), b + (p.0 - mx) * (p.0 - mx)));
    (den > 0.0).then(|| num / den)
}

/// Runs `levels` grids (0 ..= levels-1 refinements) and measures errors against
/// `reference`, or `[case] reference` for rigid cases, or the finest grid.
pub fn convergence_study(
    cfg: &CaseConfig,
    levels: usize,
    mode: Discretization,
    reference: Option<&[f64]>,
) -> Result<ConvergenceReport, BenchError> {
    cfg.validate()?;
    if cfg.case.kind == CaseKind::Transient {
        return Err(BenchError::Unsupported(TRANSIENT_UNSUPPORTED.into()));
    }
    if levels < 2 {
        return Err(BenchError::Invalid(format!("a convergence study needs at least 2 levels, got {levels}")));
    }
    let results: Vec<CaseResult> =
        (0..levels).into_par_iter().map(|l| run_level(cfg, l, mode)).collect::<Result<_, _>>()?;
    report_from_results(cfg, mode, &results, reference)
}

/// Builds the report for already solved grids, ordered coarse to fine.
pub fn report_from_results(
    cfg: &CaseConfig,
    mode: Discretization,
    results: &[CaseResult],
    reference: Option<&[f64]>,
) -> Result<ConvergenceReport, BenchError> {
    let finest = results.last().ok_or_else(|| BenchError::Invalid("no grids".into()))?;
    let quantities: Vec<String> = finest.quantities().iter().map(|q| q.0.to_string()).collect();
    let (reference, source) = match (reference, cfg.case.reference, cfg.case.kind) {
        (Some(r), _, _) => (r.to_vec(), ReferenceSource::External),
        (None, Some(r), CaseKind::Rigid) => (vec![r], ReferenceSource::Configured),
        _ => (finest.quantities().iter().map(|q| q.1).collect(), ReferenceSource::FinestGrid),
    };
    if reference.len() != quantities.len() {
        return Err(BenchError::Invalid(format!("{} reference values for {} quantities", reference.len(), quantities.len())));
    }
    let rows: Vec<StudyRow> = results
        .iter()
        .map(|r| {
            let values: Vec<f64> = r.quantities().iter().map(|q| q.1).collect();
            let errors = values.iter().zip(&reference).map(|(v, r)| ((v - r) / r).abs()).collect();
            StudyRow { level: r.level, boundary_elements: r.boundary_elements, values, errors, seconds: r.seconds }
        })
        .collect();
    let be: Vec<usize> = rows.iter().map(|r| r.boundary_elements).collect();
    let slopes =
        (0..quantities.len()).map(|q| fit_slope(&be, &rows.iter().map(|r| r.errors[q]).collect::<Vec<_>>())).collect();
    Ok(ConvergenceReport { case: cfg.case.name.clone(), mode, quantities, reference, source, rows, slopes })
}

impl ConvergenceReport {
    /// Per-grid values and errors; runtimes are left out so reruns compare byte for byte.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        write!(out, "level,boundary_elements")?;
        for q in &self.quantities {
            write!(out, ",{q},{q}_rel_error")?;
        }
        writeln!(out)?;
        for r in &self.rows {
            write!(out, "{},{}", r.level, r.boundary_elements)?;
            for (v, e) in r.values.iter().zip(&r.errors) {
                write!(out, ",{v:.12e},{e:.12e}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn write_slopes_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "quantity,reference,slope")?;
        for ((q, r), s) in self.quantities.iter().zip(&self.reference).zip(&self.slopes) {
            writeln!(out, "{q},{r:.12e},{}", s.map(|s| format!("{s:.6}")).unwrap_or_default())?;
        }
        Ok(())
    }

    /// Writes `convergence_<mode>.csv` and `slopes_<mode>.csv` into `dir`.
    pub fn write_files(&self, dir: &Path) -> Result<(), BenchError> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let m = mode_name(self.mode);
        let (mut w, p) = create(dir, &format!("convergence_{m}.csv"))?;
        self.write_csv(&mut w).and_then(|_| w.flush()).map_err(io_err(&p))?;
        let (mut w, p) = create(dir, &format!("slopes_{m}.csv"))?;
        self.write_slopes_csv(&mut w).and_then(|_| w.flush()).map_err(io_err(&p))?;
        Ok(())
    }
}

impl fmt::Display for ConvergenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let src = match self.source {
            ReferenceSource::Configured => "configured",
            ReferenceSource::FinestGrid => "finest grid",
            ReferenceSource::External => "external",
        };
        writeln!(f, "study      {} ({}), reference: {src}", self.case, mode_name(self.mode))?;
        write!(f, "{:>6} {:>8}", "level", "edges")?;
        for q in &self.quantities {
            write!(f, " {q:>18} {:>10}", "rel.err")?;
        }
        writeln!(f, " {:>9}", "time [s]")?;
        for r in &self.rows {
            write!(f, "{:>6} {:>8}", r.level, r.boundary_elements)?;
            for (v, e) in r.values.iter().zip(&r.errors) {
                write!(f, " {v:>18.10e} {e:>10.3e}")?;
            }
            writeln!(f, " {:>9.2}", r.seconds)?;
        }
        for ((q, r), s) in self.quantities.iter().zip(&self.reference).zip(&self.slopes) {
            match s {
                Some(s) => writeln!(f, "slope      {q}: {s:.3} (reference {r:.10e})")?,
                None => writeln!(f, "slope      {q}: n/a (reference {r:.10e})")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests;
