use std::collections::BTreeMap;
use std::io::Write;

use super::{
    direct_transfer_forces, fim_nodal_forces, fim_transfer_forces, transfer_displacements, CouplingConfig,
    CouplingError, CouplingMap, Relaxation, TransferMethod,
};
use crate::fluid::{interface_force, Discretization, FluidBc, FluidParams, FluidSolver, FluidState};
use crate::geom::Vec2;
use crate::mesh::NefemMesh;
use crate::mesh_motion::MeshMotion;
use crate::structure::{StructureSolver, StructureState};

/// Everything needed to solve the fluid on a moved copy of the reference mesh.
#[derive(Clone, Debug)]
pub struct FluidSetup {
    pub params: FluidParams,
    pub bc: FluidBc,
    pub disc: Discretization,
    /// Boundary marker of the wetted interface.
    pub marker: String,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub norm_dd: f64,
    pub drag: Vec2<f64>,
    pub omega: f64,
}

#[derive(Clone, Debug)]
pub struct FsiSolution {
    pub fluid: FluidState,
    pub structure: StructureState,
    pub mesh: NefemMesh,
    /// Force on the body from the last fluid solve.
    pub force: Vec2<f64>,
    pub log: Vec<IterationRecord>,
}

impl FsiSolution {
    pub fn iterations(&self) -> usize {
        self.log.len()
    }
}

/// Partitioned Gauss–Seidel iteration between fluid and structure with
/// relaxation of the structural displacement.
pub fn strong_coupling_solve(
    fluid: &FluidSetup,
    structure: &StructureSolver,
    map: &CouplingMap,
    motion: &MeshMotion<'_>,
    config: &CouplingConfig,
) -> Result<FsiSolution, CouplingError> {
    config.validate()?;
    if config.method == TransferMethod::Direct && fluid.disc != Discretization::Nefem {
        return Err(CouplingError::Unsupported(
            "direct transfer integrates on the spline faces and needs nefem mode; use fim with fem".into(),
        ));
    }
    let npts = structure.surface().control_points().len();
    let mut current = StructureState::zeros(npts);
    let mut node_disp = vec![Vec2::zero(); map.nodes.len()];
    let mut omega = match config.relaxation {
        Relaxation::Constant { omega } => omega,
        Relaxation::Aitken { omega0 } => omega0,
    };
    let mut prev_residual: Option<Vec<f64>> = None;
    let mut fluid_guess: Option<FluidState> = None;
    let mut log = Vec::new();
    let mut history = Vec::new();

    for iter in 1..=config.max_iterations {
        let prescribed: Vec<(usize, Vec2<f64>)> = map.nodes.iter().copied().zip(node_disp.iter().copied()).collect();
        let patch = map.deformed_curve(&current)?;
        let mesh = motion
            .move_mesh(&prescribed, BTreeMap::from([(map.patch.clone(), patch)]))
            .map_err(|source| CouplingError::Motion { iter, source })?;

        let wrap = |source| CouplingError::Fluid { iter, source };
        let solver = FluidSolver::new(&mesh, fluid.params, &fluid.bc, fluid.disc).map_err(wrap)?;
        let (state, _) = solver.solve_with_stress(fluid_guess.as_ref()).map_err(wrap)?;
        let force = interface_force(&mesh, &state, &fluid.marker, fluid.disc).map_err(wrap)?;
        let loads = match config.method {
            TransferMethod::Fim => {
                fim_transfer_forces(&fim_nodal_forces(&mesh, &state, &fluid.marker, fluid.disc).map_err(wrap)?, map)
            }
            TransferMethod::Direct => direct_transfer_forces(&mesh, &state, map, &fluid.marker, fluid.disc)?,
        };
        drop(solver);

        let (trial, _) = structure
            .solve_quasistatic(&loads, Some(&current))
            .map_err(|source| CouplingError::Structure { iter, source })?;
        let trial_nodes = transfer_displacements(&trial, map);
        let norm_dd = trial_nodes.iter().zip(&node_disp).fold(0.0f64, |m, (a, b)| m.max((*a - *b).max_abs()));
        history.push(norm_dd);

        if norm_dd < config.tolerance {
            log.push(IterationRecord { iter, norm_dd, drag: force, omega: 1.0 });
            return Ok(FsiSolution { fluid: state, structure: trial, mesh, force, log });
        }

        let cur = current.to_dofs();
        let residual: Vec<f64> = trial.to_dofs().iter().zip(&cur).map(|(t, c)| t - c).collect();
        if let (Relaxation::Aitken { .. }, Some(prev)) = (config.relaxation, prev_residual.as_ref()) {
            let (mut num, mut den) = (0.0, 0.0);
            for (r, p) in residual.iter().zip(prev) {
                num += p * (r - p);
                den += (r - p) * (r - p);
            }
            if den > 0.0 {
                omega = (-omega * num / den).clamp(-2.0, 2.0);
            }
        }
        log.push(IterationRecord { iter, norm_dd, drag: force, omega });
        let next: Vec<f64> = cur.iter().zip(&residual).map(|(c, r)| c + omega * r).collect();
        current = StructureState::from_dofs(&next);
        node_disp = transfer_displacements(&current, map);
        prev_residual = Some(residual);
        fluid_guess = Some(state);
    }
    Err(CouplingError::NonConvergence { history })
}

/// Iteration log as CSV with a header row.
pub fn write_iteration_log(mut out: impl Write, log: &[IterationRecord]) -> std::io::Result<()> {
    writeln!(out, "iter,norm_dd,drag_x,drag_y,relaxation_omega")?;
    for r in log {
        writeln!(out, "{},{:.12e},{:.12e},{:.12e},{:.12e}", r.iter, r.norm_dd, r.drag.x, r.drag.y, r.omega)?;
    }
    Ok(())
}
