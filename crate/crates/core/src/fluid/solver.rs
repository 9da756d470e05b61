use std::sync::Arc;

use rayon::prelude::*;

use super::{
    edge_quadrature, stabilization_taus, Discretization, FluidBc, FluidError, FluidParams, FluidState, Taus,
};
use crate::geom::{SymTensor2, Vec2};
use crate::linalg::{norm2, norm_inf, CscMatrix, SparseLu, SparsePattern};
use crate::mesh::{ElementClass, NefemMesh};
use crate::nefem::{curved_volume_quadrature, straight_volume_quadrature, ElementPoint, QuadratureRule};

const BOUNDARY_GP: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-12, max_iter: 50, max_halvings: 5 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NewtonReport {
    /// Residual 2-norm at the start of every iteration, plus the final one.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub divergence_l2: f64,
}

struct ElementData {
    nodes: [usize; 3],
    points: Vec<ElementPoint<f64>>,
    /// Body force per unit mass at each point.
    force: Vec<Vec2<f64>>,
    h: f64,
}

struct TractionLoad {
    nodes: [usize; 2],
    /// (weight × edge shape value, traction) per point and end node.
    points: Vec<(f64, f64, Vec2<f64>)>,
}

/// Discrete steady Navier–Stokes problem on one mesh configuration.
pub struct FluidSolver<'m> {
    mesh: &'m NefemMesh,
    params: FluidParams,
    disc: Discretization,
    elements: Vec<ElementData>,
    loads: Vec<TractionLoad>,
    dirichlet: Vec<Option<f64>>,
    mask: Vec<bool>,
    pattern: Arc<SparsePattern>,
    lu: SparseLu,
    options: SolveOptions,
}

impl<'m> FluidSolver<'m> {
    pub fn new(
        mesh: &'m NefemMesh,
        params: FluidParams,
        bc: &FluidBc,
        disc: Discretization,
    ) -> Result<Self, FluidError> {
        bc.validate()?;
        let classes = match disc {
            Discretization::Nefem => mesh.classify()?,
            Discretization::Fem => vec![ElementClass::Standard; mesh.num_triangles()],
        };
        let curved_rule = QuadratureRule::<f64>::curved_default();
        let straight_rule = QuadratureRule::<f64>::degree2();
        let elements = mesh
            .triangles()
            .par_iter()
            .zip(classes.par_iter())
            .enumerate()
            .map(|(t, (tri, class))| {
                let p = tri.map(|i| mesh.nodes()[i]);
                let points = match class {
                    ElementClass::Standard => straight_volume_quadrature(p, &straight_rule),
                    ElementClass::CurvedBoundary { edge, patch, theta_start, theta_end } => {
                        let curve = mesh.patch(patch)?;
                        curved_volume_quadrature(p, *edge, curve, *theta_start, *theta_end, &curved_rule)
                    }
                }
                .map_err(|source| FluidError::Element { tri: t, source })?;
                let area: f64 = points.iter().map(|q| q.weight).sum();
                let force = vec![params.body_force; points.len()];
                Ok(ElementData { nodes: *tri, points, force, h: 2.0 * (area / std::f64::consts::PI).sqrt() })
            })
            .collect::<Result<Vec<_>, FluidError>>()?;

        let mut loads = Vec::new();
        for t in &bc.neumann {
            let mut found = false;
            for e in mesh.boundary_edges().iter().filter(|e| e.marker == t.marker) {
                found = true;
                let pts = edge_quadrature(mesh, e, disc, BOUNDARY_GP)?;
                let mut points = Vec::with_capacity(2 * pts.len());
                for bp in pts {
                    points.push((bp.weight * bp.n[0], bp.weight * bp.n[1], t.traction));
                }
                loads.push(TractionLoad { nodes: e.nodes, points });
            }
            if !found {
                return Err(FluidError::UnknownMarker(t.marker.clone()));
            }
        }

        let n = mesh.num_nodes();
        let mut dirichlet = vec![None; 3 * n];
        for d in &bc.dirichlet {
            let nodes = mesh.marker_nodes(&d.marker);
            if nodes.is_empty() {
                return Err(FluidError::UnknownMarker(d.marker.clone()));
            }
            for i in nodes {
                let x = mesh.nodes()[i];
                for (c, prof) in [&d.x, &d.y].into_iter().enumerate() {
                    if let Some(prof) = prof {
                        dirichlet[3 * i + c] = Some(prof.eval(x));
                    }
                }
            }
        }
        if let Some((node, p)) = bc.pressure_pin {
            if node >= n {
                return Err(FluidError::Config(format!("pressure pin node {node} out of range")));
            }
            dirichlet[3 * node + 2] = Some(p);
        }
        if dirichlet.iter().all(Option::is_none) {
            return Err(FluidError::Config("no Dirichlet conditions".into()));
        }
        let mask = dirichlet.iter().map(Option::is_some).collect();

        let blocks: Vec<[usize; 9]> = mesh
            .triangles()
            .iter()
            .map(|t| std::array::from_fn(|k| 3 * t[k / 3] + k % 3))
            .collect();
        let pattern = Arc::new(SparsePattern::from_blocks(3 * n, blocks.iter().map(|b| b.as_slice())));
        let lu = SparseLu::new(pattern.clone())?;
        Ok(Self {
            mesh,
            params,
            disc,
            elements,
            loads,
            dirichlet,
            mask,
            pattern,
            lu,
            options: SolveOptions::default(),
        })
    }

    /// Replace the constant body force by a position-dependent one.
    pub fn with_forcing(mut self, f: impl Fn(Vec2<f64>) -> Vec2<f64> + Sync) -> Self {
        self.elements.par_iter_mut().for_each(|e| {
            e.force = e.points.iter().map(|q| f(q.x)).collect();
        });
        self
    }

    pub fn with_options(mut self, options: SolveOptions) -> Self {
        self.options = options;
        self
    }

    pub fn mesh(&self) -> &NefemMesh {
        self.mesh
    }

    pub fn params(&self) -> &FluidParams {
        &self.params
    }

    pub fn discretization(&self) -> Discretization {
        self.disc
    }

    pub fn num_dofs(&self) -> usize {
        self.dirichlet.len()
    }

    pub fn dirichlet_values(&self) -> &[Option<f64>] {
        &self.dirichlet
    }

    /// Boundary values on Dirichlet dofs, zero elsewhere.
    pub fn cold_state(&self) -> Vec<f64> {
        self.dirichlet.iter().map(|d| d.unwrap_or(0.0)).collect()
    }

    pub fn taus(&self, q: &[f64]) -> Vec<Taus> {
        self.elements
            .iter()
            .map(|e| {
                let mut u = Vec2::zero();
                for &i in &e.nodes {
                    u += Vec2::new(q[3 * i], q[3 * i + 1]);
                }
                stabilization_taus(e.h, (u * (1.0 / 3.0)).norm(), &self.params)
            })
            .collect()
    }

    fn element_kernel(&self, e: &ElementData, q: &[f64], tau: Taus, want_jac: bool) -> ([f64; 9], Vec<f64>) {
        let rho = self.params.density;
        let mu = self.params.viscosity;
        let (tm, tc) = (tau.mom, tau.cont);
        let ue: [[f64; 2]; 3] = e.nodes.map(|i| [q[3 * i], q[3 * i + 1]]);
        let pe: [f64; 3] = e.nodes.map(|i| q[3 * i + 2]);
        let mut res = [0.0; 9];
        let mut jac = if want_jac { vec![0.0; 81] } else { Vec::new() };
        for (qp, f) in e.points.iter().zip(&e.force) {
            let w = qp.weight;
            let nn = qp.n;
            let g: [[f64; 2]; 3] = qp.grad.map(|v| [v.x, v.y]);
            let mut u = [0.0; 2];
            let mut p = 0.0;
            let mut gu = [[0.0; 2]; 2];
            let mut gp = [0.0; 2];
            for b in 0..3 {
                p += nn[b] * pe[b];
                for i in 0..2 {
                    u[i] += nn[b] * ue[b][i];
                    gp[i] += pe[b] * g[b][i];
                    for j in 0..2 {
                        gu[i][j] += ue[b][i] * g[b][j];
                    }
                }
            }
            let conv = [u[0] * gu[0][0] + u[1] * gu[0][1], u[0] * gu[1][0] + u[1] * gu[1][1]];
            let div = gu[0][0] + gu[1][1];
            let f = [f.x, f.y];
            let r = [rho * (conv[0] - f[0]) + gp[0], rho * (conv[1] - f[1]) + gp[1]];
            let ug: [f64; 3] = std::array::from_fn(|a| u[0] * g[a][0] + u[1] * g[a][1]);
            for a in 0..3 {
                for i in 0..2 {
                    let visc = (0..2).map(|j| g[a][j] * (gu[i][j] + gu[j][i])).sum::<f64>();
                    res[3 * a + i] += w
                        * (nn[a] * rho * (conv[i] - f[i]) + mu * visc - p * g[a][i]
                            + tm * ug[a] * r[i]
                            + rho * tc * g[a][i] * div);
                }
                res[3 * a + 2] += w * (nn[a] * div + tm / rho * (g[a][0] * r[0] + g[a][1] * r[1]));
            }
            if !want_jac {
                continue;
            }
            // d(u·∇u)_i / d u_bk
            let adv = |b: usize, i: usize, k: usize| nn[b] * gu[i][k] + if i == k { ug[b] } else { 0.0 };
            for a in 0..3 {
                for b in 0..3 {
                    let gab = g[a][0] * g[b][0] + g[a][1] * g[b][1];
                    for i in 0..2 {
                        let row = (3 * a + i) * 9;
                        for k in 0..2 {
                            let av = adv(b, i, k);
                            let d = if i == k { 1.0 } else { 0.0 };
                            jac[row + 3 * b + k] += w
                                * (nn[a] * rho * av
                                    + mu * (d * gab + g[a][k] * g[b][i])
                                    + tm * (nn[b] * g[a][k] * r[i] + ug[a] * rho * av)
                                    + rho * tc * g[a][i] * g[b][k]);
                        }
                        jac[row + 3 * b + 2] += w * (-nn[b] * g[a][i] + tm * ug[a] * g[b][i]);
                    }
                    let row = (3 * a + 2) * 9;
                    for k in 0..2 {
                        let s: f64 = (0..2).map(|i| g[a][i] * adv(b, i, k)).sum();
                        jac[row + 3 * b + k] += w * (nn[a] * g[b][k] + tm * s);
                    }
                    jac[row + 3 * b + 2] += w * tm / rho * gab;
                }
            }
        }
        (res, jac)
    }

    /// Residual and Jacobian before boundary-condition rows are imposed.
    pub fn assemble_raw(&self, q: &[f64], taus: &[Taus], want_jac: bool) -> (Vec<f64>, Option<CscMatrix>) {
        let local: Vec<([f64; 9], Vec<f64>)> = self
            .elements
            .par_iter()
            .zip(taus.par_iter())
            .map(|(e, &t)| self.element_kernel(e, q, t, want_jac))
            .collect();
        let mut r = vec![0.0; self.num_dofs()];
        let mut jac = want_jac.then(|| CscMatrix::zeros(self.pattern.clone()));
        for (e, (re, je)) in self.elements.iter().zip(&local) {
            let dofs: [usize; 9] = std::array::from_fn(|k| 3 * e.nodes[k / 3] + k % 3);
            for (k, &d) in dofs.iter().enumerate() {
                r[d] += re[k];
            }
            if let Some(j) = jac.as_mut() {
                j.add_block(&dofs, je);
            }
        }
        for l in &self.loads {
            for &(w0, w1, t) in &l.points {
                for (node, wn) in [(l.nodes[0], w0), (l.nodes[1], w1)] {
                    r[3 * node] -= wn * t.x;
                    r[3 * node + 1] -= wn * t.y;
                }
            }
        }
        (r, jac)
    }

    /// Residual with Dirichlet rows `q_d - g_d`, and optionally the matching Jacobian.
    pub fn assemble(&self, q: &[f64], taus: &[Taus], want_jac: bool) -> (Vec<f64>, Option<CscMatrix>) {
        let (mut r, mut jac) = self.assemble_raw(q, taus, want_jac);
        for (d, g) in self.dirichlet.iter().enumerate() {
            if let Some(g) = g {
                r[d] = q[d] - g;
            }
        }
        if let Some(j) = jac.as_mut() {
            j.set_identity_rows(&self.mask);
        }
        (r, jac)
    }

    pub fn residual(&self, q: &[f64]) -> Vec<f64> {
        self.assemble(q, &self.taus(q), false).0
    }

    /// Newton iteration from `initial` (or the boundary values).
    pub fn solve(&self, initial: Option<&FluidState>) -> Result<(FluidState, NewtonReport), FluidError> {
        let opt = self.options;
        let cold = self.cold_state();
        let reference = norm2(&self.residual(&cold));
        let tol = (opt.rel_tol * reference).max(opt.abs_tol);
        let mut q = match initial {
            Some(s) => {
                let mut q = s.to_dofs();
                if q.len() != cold.len() {
                    return Err(FluidError::Config("initial state has wrong size".into()));
                }
                for (d, g) in self.dirichlet.iter().enumerate() {
                    if let Some(g) = g {
                        q[d] = *g;
                    }
                }
                q
            }
            None => cold,
        };
        let mut residuals = Vec::new();
        for it in 0..=opt.max_iter {
            let taus = self.taus(&q);
            let (r, jac) = self.assemble(&q, &taus, true);
            let res = norm2(&r);
            residuals.push(res);
            if res <= tol {
                return Ok(self.finish(q, residuals, it));
            }
            if it == opt.max_iter {
                break;
            }
            let dq = self.lu.solve(&jac.expect("jacobian requested"), &r)?;
            let mut lambda = 1.0;
            let mut trial = q.clone();
            for k in 0..=opt.max_halvings {
                for ((t, &x), &d) in trial.iter_mut().zip(&q).zip(&dq) {
                    *t = x - lambda * d;
                }
                if norm2(&self.residual(&trial)) < res || k == opt.max_halvings {
                    break;
                }
                lambda *= 0.5;
            }
            let step = lambda * norm_inf(&dq);
            q = trial;
            if step <= 1e-14 * norm_inf(&q).max(1e-300) {
                let res = norm2(&self.residual(&q));
                residuals.push(res);
                if res <= tol.max(1e-8 * reference) {
                    return Ok(self.finish(q, residuals, it + 1));
                }
                return Err(FluidError::NonConvergence { residuals });
            }
        }
        Err(FluidError::NonConvergence { residuals })
    }

    fn finish(&self, q: Vec<f64>, residuals: Vec<f64>, iterations: usize) -> (FluidState, NewtonReport) {
        let divergence_l2 = self.divergence_l2(&q);
        (FluidState::from_dofs(&q), NewtonReport { residuals, iterations, divergence_l2 })
    }

    pub fn divergence_l2(&self, q: &[f64]) -> f64 {
        let mut s = 0.0;
        for e in &self.elements {
            for qp in &e.points {
                let div: f64 = (0..3).map(|b| q[3 * e.nodes[b]] * qp.grad[b].x + q[3 * e.nodes[b] + 1] * qp.grad[b].y).sum();
                s += qp.weight * div * div;
            }
        }
        s.sqrt()
    }

    /// Nodal stress by lumped L2 projection of `-p I + 2 μ ε(u)`.
    pub fn recover_stress(&self, state: &FluidState) -> Vec<SymTensor2<f64>> {
        let n = self.mesh.num_nodes();
        let mu = self.params.viscosity;
        let mut num = vec![SymTensor2::zero(); n];
        let mut den = vec![0.0; n];
        for e in &self.elements {
            for qp in &e.points {
                let mut gu = [[0.0; 2]; 2];
                let mut p = 0.0;
                for b in 0..3 {
                    let v = state.velocity[e.nodes[b]];
                    p += qp.n[b] * state.pressure[e.nodes[b]];
                    for (i, ui) in [v.x, v.y].into_iter().enumerate() {
                        gu[i][0] += ui * qp.grad[b].x;
                        gu[i][1] += ui * qp.grad[b].y;
                    }
                }
                let sigma = SymTensor2::new(
                    -p + 2.0 * mu * gu[0][0],
                    -p + 2.0 * mu * gu[1][1],
                    mu * (gu[0][1] + gu[1][0]),
                );
                for b in 0..3 {
                    let wn = qp.weight * qp.n[b];
                    num[e.nodes[b]] = num[e.nodes[b]].add(&sigma.scale(wn));
                    den[e.nodes[b]] += wn;
                }
            }
        }
        num.iter().zip(&den).map(|(s, &d)| if d > 0.0 { s.scale(1.0 / d) } else { *s }).collect()
    }

    /// Solve, then attach recovered stresses.
    pub fn solve_with_stress(&self, initial: Option<&FluidState>) -> Result<(FluidState, NewtonReport), FluidError> {
        let (mut state, report) = self.solve(initial)?;
        state.stress = Some(self.recover_stress(&state));
        Ok((state, report))
    }

    /// `(∫ |u_h - u|², ∫ |p_h - p|²)` square roots against exact fields.
    pub fn l2_errors(
        &self,
        state: &FluidState,
        u_exact: impl Fn(Vec2<f64>) -> Vec2<f64>,
        p_exact: impl Fn(Vec2<f64>) -> f64,
    ) -> (f64, f64) {
        let (mut eu, mut ep) = (0.0, 0.0);
        for e in &self.elements {
            for qp in &e.points {
                let mut u = Vec2::zero();
                let mut p = 0.0;
                for b in 0..3 {
                    u += state.velocity[e.nodes[b]] * qp.n[b];
                    p += state.pressure[e.nodes[b]] * qp.n[b];
                }
                eu += qp.weight * (u - u_exact(qp.x)).norm_sq();
                ep += qp.weight * (p - p_exact(qp.x)).powi(2);
            }
        }
        (eu.sqrt(), ep.sqrt())
    }

    /// Sum of quadrature weights (the discrete domain area).
    pub fn domain_area(&self) -> f64 {
        self.elements.iter().flat_map(|e| e.points.iter().map(|q| q.weight)).sum()
    }
}
