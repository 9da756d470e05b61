//! Regenerates the benchmark inputs under `fixtures/`.
//!
//! ```bash
//! cargo run -p nefem-fsi --example make_fixtures [OUT_DIR]
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use nefem_fsi::geom::Vec2;
use nefem_fsi::mesh::{box_uniform_thetas, format_mesh, ChannelWithHole};
use nefem_fsi::nurbs::io::{format_curve, format_surface};
use nefem_fsi::nurbs::shapes::{annulus, circle, circle_refinement_knots, rectangle};
use nefem_fsi::nurbs::SurfaceEdge;

fn markers(body: &str) -> [String; 4] {
    ["inflow".into(), "outflow".into(), "wall".into(), body.into()]
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::create_dir_all(dir).unwrap();
    fs::write(dir.join(name), text).unwrap();
    println!("wrote {}", dir.join(name).display());
}

fn dfg(root: &Path) {
    let dir = root.join("dfg");
    let c = Vec2::new(0.2, 0.2);
    let curve = circle(c, 0.05, true);
    let thetas = box_uniform_thetas(&curve, c, [12, 13, 12, 13]).unwrap();
    let mesh = ChannelWithHole {
        length: 2.2,
        height: 0.41,
        center: c,
        box_half: 0.1,
        thetas,
        ring_layers: 12,
        first_layer: 0.03,
        growth: 1.1,
        max_h: 0.03,
        patch: "cylinder".into(),
        markers: markers("cylinder"),
    }
    .build(&curve)
    .unwrap();
    write(&dir, "cylinder.nurbs", &format_curve(&curve));
    write(&dir, "mesh.txt", &format_mesh(&mesh));
    write(&dir, "dfg.toml", DFG_TOML);
}

fn flexible(root: &Path) {
    let dir = root.join("flexible");
    let d = 0.006;
    let thickness = 5e-4;
    let c = Vec2::new(0.018, 0.018);
    let ring = annulus(c, d / 2.0 - thickness, d / 2.0, true)
        .unwrap()
        .refine(&circle_refinement_knots(10), &[0.2, 0.4, 0.6, 0.8])
        .unwrap();
    let wetted = ring.boundary_curve(SurfaceEdge::VMax).unwrap();
    let mesh = ChannelWithHole {
        length: 0.072,
        height: 0.036,
        center: c,
        box_half: d,
        thetas: (0..40).map(|k| k as f64 / 40.0).collect(),
        ring_layers: 10,
        first_layer: 0.08,
        growth: 1.15,
        max_h: d / 2.0,
        patch: "cylinder".into(),
        markers: markers("cylinder"),
    }
    .build(&wetted)
    .unwrap();
    write(&dir, "ring.nurbs", &format_surface(&ring));
    write(&dir, "cylinder.nurbs", &format_curve(&wetted));
    write(&dir, "mesh.txt", &format_mesh(&mesh));
    write(&dir, "flexible.toml", FLEXIBLE_TOML);
}

fn fsi2(root: &Path) {
    let dir = root.join("fsi2");
    let c = Vec2::new(0.2, 0.2);
    let r: f64 = 0.05;
    let x0 = c.x + (r * r - 0.01 * 0.01).sqrt();
    let flag = rectangle(2, Vec2::new(x0, 0.19), Vec2::new(0.6, 0.21), 60, 15).unwrap();
    write(&dir, "cylinder.nurbs", &format_curve(&circle(c, r, true)));
    write(&dir, "flag.nurbs", &format_surface(&flag));
    write(&dir, "flag_upper.nurbs", &format_curve(&flag.boundary_curve(SurfaceEdge::VMax).unwrap()));
    write(&dir, "fsi2.toml", FSI2_TOML);
}

const DFG_TOML: &str = r#"# Steady flow around a fixed cylinder, Re = 20.
[case]
name = "dfg-2d-1"
kind = "rigid"
mode = "nefem"
mesh = "mesh.txt"
splines = { cylinder = "cylinder.nurbs" }
interface = "cylinder"
diameter = 0.1
refine = 0
levels = 4
output = "../../output/dfg"
reference = 5.579535

[fluid]
density = 1.0
viscosity = 0.001
mean_velocity = 0.2
bc = [
  { kind = "parabolic", marker = "inflow", peak = 0.3, height = 0.41 },
  { kind = "no_slip", marker = "wall" },
  { kind = "no_slip", marker = "cylinder" },
]
"#;

const FLEXIBLE_TOML: &str = r#"# Steady FSI of a thin elastic ring in uniform flow, Re = 40.
[case]
name = "flexible-cylinder"
kind = "flexible"
mode = "nefem"
mesh = "mesh.txt"
splines = { cylinder = "cylinder.nurbs" }
interface = "cylinder"
diameter = 0.006
refine = 1
levels = 3
output = "../../output/flexible"

[fluid]
density = 1.18
viscosity = 1.82e-5
mean_velocity = 0.10282
bc = [
  { kind = "uniform", marker = "inflow", velocity = 0.10282 },
  { kind = "slip", marker = "wall" },
  { kind = "no_slip", marker = "cylinder" },
]

[structure]
spline = "ring.nurbs"
young = 100.0
poisson = 0.3
density = 1000.0
wetted_edge = "vmax"
# rightmost fibre clamped, leftmost fibre held in y
supports = [
  { theta = 0.0, x = true, y = true },
  { theta = 0.5, y = true },
]
probe_theta = 0.5

[coupling]
method = "fim"
tolerance = 6e-11
max_iterations = 50
relaxation = { kind = "aitken", omega0 = 0.5 }

[mesh_motion]
stiffening = 1.0
young = 1.0
poisson = 0.3
"#;

const FSI2_TOML: &str = r#"# Elastic flag behind a cylinder, Re = 100. Time-dependent: kept as a parameter
# record; `run` rejects it.
[case]
name = "fsi2-moving-flag"
kind = "transient"
mode = "nefem"
splines = { cylinder = "cylinder.nurbs", flag = "flag_upper.nurbs" }
interface = "flag"
diameter = 0.1
levels = 3
output = "../../output/fsi2"

[fluid]
density = 1000.0
viscosity = 1.0
mean_velocity = 1.0
bc = [
  { kind = "parabolic", marker = "inflow", peak = 1.5, height = 0.41 },
  { kind = "no_slip", marker = "wall" },
  { kind = "no_slip", marker = "cylinder" },
  { kind = "no_slip", marker = "flag" },
]

[structure]
spline = "flag.nurbs"
young = 1.4e6
poisson = 0.4
density = 10000.0
wetted_edge = "vmax"
# clamped where the flag meets the cylinder
supports = [{ theta = 0.0, x = true, y = true }]

[coupling]
method = "fim"
tolerance = 1e-9
max_iterations = 50

[transient]
time_step = 0.002
"#;

fn main() {
    let root = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures"));
    dfg(&root);
    flexible(&root);
    fsi2(&root);
}
