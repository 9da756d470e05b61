//! Case files.
//!
//! ```toml
//! [case]
//! name = "dfg-2d-1"
//! kind = "rigid"                 # rigid | flexible | transient
//! mode = "nefem"                 # nefem | fem
//! mesh = "mesh.txt"              # relative paths resolve against the case file
//! splines = { cylinder = "cylinder.nurbs" }
//! interface = "cylinder"         # marker and spline patch of the body
//! diameter = 0.1
//! refine = 0                     # h-refinements applied by `run`
//! levels = 3                     # grids in a convergence study
//! reference = 5.579535           # optional reference c_d
//!
//! [fluid]
//! density = 1.0
//! viscosity = 1e-3
//! mean_velocity = 0.2
//! bc = [
//!   { kind = "parabolic", marker = "inflow", peak = 0.3, height = 0.41 },
//!   { kind = "no_slip", marker = "wall" },
//! ]
//!
//! [structure]                    # flexible and transient cases
//! spline = "ring.nurbs"
//! young = 100.0
//! poisson = 0.3
//! density = 1000.0
//! wetted_edge = "vmax"
//! supports = [{ theta = 0.0, x = true, y = true }]
//!
//! [coupling]                     # see CouplingConfig
//! [mesh_motion]                  # see MeshMotionParams
//! [transient]
//! time_step = 0.002
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::coupling::{CouplingConfig, TransferMethod};
use crate::fluid::{Discretization, FluidBc, FluidParams, Profile, VelocityBc};
use crate::mesh_motion::MeshMotionParams;
use crate::nurbs::SurfaceEdge;
use crate::structure::StructureParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseKind {
    /// Fluid only around a fixed body.
    Rigid,
    /// Steady strongly coupled FSI.
    Flexible,
    /// Time-dependent FSI; parsed and validated but not run.
    Transient,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseSection {
    pub name: String,
    pub kind: CaseKind,
    #[serde(default)]
    pub mode: Discretization,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<PathBuf>,
    #[serde(default)]
    pub splines: BTreeMap<String, PathBuf>,
    pub interface: String,
    pub diameter: f64,
    #[serde(default)]
    pub refine: usize,
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
}

fn default_levels() -> usize {
    3
}

fn default_output() -> PathBuf {
    PathBuf::from("output")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BcSpec {
    /// `4 peak (y - y0)(y0 + height - y) / height²` in x, zero in y.
    Parabolic {
        marker: String,
        peak: f64,
        #[serde(default)]
        y0: f64,
        height: f64,
    },
    Uniform { marker: String, velocity: f64 },
    NoSlip { marker: String },
    /// Zero normal velocity on a horizontal wall.
    Slip { marker: String },
}

impl BcSpec {
    pub fn marker(&self) -> &str {
        match self {
            BcSpec::Parabolic { marker, .. }
            | BcSpec::Uniform { marker, .. }
            | BcSpec::NoSlip { marker }
            | BcSpec::Slip { marker } => marker,
        }
    }

    fn to_velocity_bc(&self) -> VelocityBc {
        match self {
            BcSpec::Parabolic { marker, peak, y0, height } => VelocityBc::new(
                marker,
                Some(Profile::Parabolic { peak: *peak, y0: *y0, height: *height }),
                Some(Profile::Zero),
            ),
            BcSpec::Uniform { marker, velocity } => {
                VelocityBc::new(marker, Some(Profile::Uniform(*velocity)), Some(Profile::Zero))
            }
            BcSpec::NoSlip { marker } => VelocityBc::no_slip(marker),
            BcSpec::Slip { marker } => VelocityBc::slip_horizontal(marker),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluidSection {
    pub density: f64,
    pub viscosity: f64,
    /// Mean inflow speed used for the Reynolds number and force coefficients.
    pub mean_velocity: f64,
    pub bc: Vec<BcSpec>,
}

impl FluidSection {
    pub fn params(&self) -> Result<FluidParams, BenchError> {
        FluidParams::new(self.density, self.viscosity).map_err(|e| BenchError::Invalid(format!("[fluid]: {e}")))
    }

    pub fn bc(&self) -> FluidBc {
        FluidBc { dirichlet: self.bc.iter().map(BcSpec::to_velocity_bc).collect(), neumann: Vec::new(), pressure_pin: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeName {
    Umin,
    Umax,
    Vmin,
    Vmax,
}

impl From<EdgeName> for SurfaceEdge {
    fn from(e: EdgeName) -> Self {
        match e {
            EdgeName::Umin => SurfaceEdge::UMin,
            EdgeName::Umax => SurfaceEdge::UMax,
            EdgeName::Vmin => SurfaceEdge::VMin,
            EdgeName::Vmax => SurfaceEdge::VMax,
        }
    }
}

/// Material fibre held at the wetted-curve parameter `theta`: every control
/// point of the net column through the interpolatory control point there.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Support {
    pub theta: f64,
    #[serde(default)]
    pub x: bool,
    #[serde(default)]
    pub y: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureSection {
    pub spline: PathBuf,
    pub young: f64,
    pub poisson: f64,
    pub density: f64,
    pub wetted_edge: EdgeName,
    pub supports: Vec<Support>,
    /// Wetted-curve parameter of the reported displacement; defaults to the leftmost point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_theta: Option<f64>,
}

impl StructureSection {
    pub fn params(&self) -> Result<StructureParams, BenchError> {
        StructureParams::new(self.young, self.poisson, self.density)
            .map_err(|e| BenchError::Invalid(format!("[structure]: {e}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransientSection {
    pub time_step: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end_time: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseConfig {
    pub case: CaseSection,
    pub fluid: FluidSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure: Option<StructureSection>,
    #[serde(default)]
    pub coupling: CouplingConfig,
    #[serde(default)]
    pub mesh_motion: MeshMotionParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transient: Option<TransientSection>,
    /// Directory that relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl CaseConfig {
    /// Parses without touching the file system; paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self, BenchError> {
        let mut c: CaseConfig = toml::from_str(text).map_err(|e| BenchError::Parse(e.to_string()))?;
        c.base_dir = base_dir.into();
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, BenchError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io { path: path.into(), source })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base).map_err(|e| match e {
            BenchError::Parse(m) => BenchError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("case config serializes")
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.case.output)
    }

    /// Checks parameter ranges, case-kind requirements and that referenced files exist.
    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::Invalid(m));
        let c = &self.case;
        if c.name.trim().is_empty() {
            return bad("[case] name is empty".into());
        }
        if !(c.diameter > 0.0) {
            return bad(format!("[case] diameter must be positive, got {}", c.diameter));
        }
        if c.levels == 0 {
            return bad("[case] levels must be at least 1".into());
        }
        if let Some(r) = c.reference {
            if !(r.is_finite() && r != 0.0) {
                return bad(format!("[case] reference must be finite and nonzero, got {r}"));
            }
        }
        self.fluid.params()?;
        if !(self.fluid.mean_velocity > 0.0) {
            return bad(format!("[fluid] mean_velocity must be positive, got {}", self.fluid.mean_velocity));
        }
        if self.fluid.bc.is_empty() {
            return bad("[fluid] bc is empty".into());
        }
        for b in &self.fluid.bc {
            let ok = match b {
                BcSpec::Parabolic { peak, height, y0, .. } => *height > 0.0 && peak.is_finite() && y0.is_finite(),
                BcSpec::Uniform { velocity, .. } => velocity.is_finite(),
                _ => true,
            };
            if !ok {
                return bad(format!("[fluid] invalid parameters in bc on `{}`", b.marker()));
            }
        }
        if !self.fluid.bc.iter().any(|b| b.marker() == c.interface) {
            return bad(format!("[fluid] no boundary condition on the interface marker `{}`", c.interface));
        }
        for (tag, p) in &c.splines {
            self.require_file(&format!("spline `{tag}`"), p)?;
        }
        if !c.splines.contains_key(&c.interface) {
            return bad(format!("[case] splines has no entry for the interface patch `{}`", c.interface));
        }
        match &c.mesh {
            Some(m) => self.require_file("mesh", m)?,
            None if c.kind != CaseKind::Transient => return bad("[case] mesh is required".into()),
            None => {}
        }
        match (&self.structure, c.kind) {
            (None, CaseKind::Flexible | CaseKind::Transient) => {
                return bad("[structure] section is required for this case kind".into());
            }
            (Some(s), _) => {
                self.require_file("structure spline", &s.spline)?;
                s.params()?;
                if s.supports.is_empty() || !s.supports.iter().any(|p| p.x || p.y) {
                    return bad("[structure] supports constrain nothing".into());
                }
            }
            (None, CaseKind::Rigid) => {}
        }
        self.coupling.validate().map_err(|e| BenchError::Invalid(format!("[coupling]: {e}")))?;
        if self.coupling.method == TransferMethod::Direct && c.mode == Discretization::Fem && c.kind != CaseKind::Rigid {
            return bad("[coupling] direct transfer needs mode = \"nefem\"; use method = \"fim\" with fem".into());
        }
        self.mesh_motion.validate().map_err(|e| BenchError::Invalid(format!("[mesh_motion]: {e}")))?;
        match (&self.transient, c.kind) {
            (Some(t), _) => {
                if !(t.time_step > 0.0) {
                    return bad(format!("[transient] time_step must be positive, got {}", t.time_step));
                }
                if let Some(end) = t.end_time {
                    if !(end > t.time_step) {
                        return bad(format!("[transient] end_time {end} must exceed time_step"));
                    }
                }
            }
            (None, CaseKind::Transient) => return bad("[transient] section is required for a transient case".into()),
            (None, _) => {}
        }
        Ok(())
    }

    fn require_file(&self, what: &str, p: &Path) -> Result<(), BenchError> {
        let full = self.resolve(p);
        if full.is_file() {
            Ok(())
        } else {
            Err(BenchError::Invalid(format!("{what} file {} does not exist", full.display())))
        }
    }

    /// Reynolds number from the mean inflow speed and the body diameter.
    pub fn reynolds(&self) -> f64 {
        self.fluid.density * self.fluid.mean_velocity * self.case.diameter / self.fluid.viscosity
    }
}
