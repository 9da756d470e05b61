use std::sync::Arc;

use rayon::prelude::*;

use super::{flatten, kinematics, pk2_stress, StructureBc, StructureError, StructureParams, StructureState};
use crate::geom::{Mat2, SymTensor2, Vec2};
use crate::linalg::{norm2, norm_inf, CscMatrix, SparseLu, SparsePattern};
use crate::nefem::gauss_legendre;
use crate::nurbs::{NurbsSurface, SurfaceEdge};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StructureOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_iter: usize,
    /// How many times a load increment may be halved before giving up.
    pub max_cuts: usize,
}

impl Default for StructureOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 0.0, max_iter: 30, max_cuts: 12 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StructureReport {
    /// Residual history of the last load increment.
    pub residuals: Vec<f64>,
    pub increments: usize,
    pub iterations: usize,
}

/// Quadrature point in the reference configuration with cached basis data.
#[derive(Clone, Debug)]
pub struct QuadPoint {
    pub x: Vec2<f64>,
    /// Gauss weight times the reference Jacobian.
    pub weight: f64,
    pub values: Vec<f64>,
    /// Reference gradients `∇₀R_a`.
    pub grads: Vec<Vec2<f64>>,
}

struct Element {
    points: Vec<usize>,
    dofs: Vec<usize>,
    qps: Vec<QuadPoint>,
}

/// Consistent nodal loads of a dead traction on one side of the patch.
pub fn edge_traction_loads(
    surface: &NurbsSurface<f64>,
    edge: SurfaceEdge,
    traction: impl Fn(Vec2<f64>) -> Vec2<f64>,
) -> Result<Vec<Vec2<f64>>, StructureError> {
    let curve = surface.boundary_curve(edge)?;
    let idx = surface.edge_indices(edge);
    let mut out = vec![Vec2::zero(); surface.control_points().len()];
    let gp = gauss_legendre::<f64>(curve.degree() + 2);
    for (a, b) in curve.knots().spans() {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        for &(xi, w) in &gp {
            let t = mid + half * xi;
            let der = curve.eval_derivatives(t, 1)?;
            let basis = curve.rational_basis(t)?;
            let load = traction(der[0]) * (w * half * der[1].norm());
            for (i, &r) in basis.indices().zip(&basis.values) {
                out[idx[i]] += load * r;
            }
        }
    }
    Ok(out)
}

pub struct StructureSolver {
    surface: NurbsSurface<f64>,
    params: StructureParams,
    prescribed: Vec<Option<f64>>,
    mask: Vec<bool>,
    elements: Vec<Element>,
    pattern: Arc<SparsePattern>,
    lu: SparseLu,
    options: StructureOptions,
}

impl StructureSolver {
    pub fn new(surface: NurbsSurface<f64>, params: StructureParams, bc: &StructureBc) -> Result<Self, StructureError> {
        let npts = surface.control_points().len();
        bc.validate(npts)?;
        let mut prescribed = vec![None; 2 * npts];
        for c in &bc.constraints {
            if c.x.is_some() {
                prescribed[2 * c.point] = c.x;
            }
            if c.y.is_some() {
                prescribed[2 * c.point + 1] = c.y;
            }
        }
        let mask = prescribed.iter().map(Option::is_some).collect();

        let (pu, pv) = surface.degrees();
        let gu = gauss_legendre::<f64>(pu + 1);
        let gv = gauss_legendre::<f64>(pv + 1);
        let spans: Vec<((f64, f64), (f64, f64))> = surface
            .knots_v()
            .spans()
            .into_iter()
            .flat_map(|sv| surface.knots_u().spans().into_iter().map(move |su| (su, sv)))
            .collect();
        // either parameter orientation is accepted, but not a fold
        let orientation = {
            let (u0, u1) = surface.knots_u().domain();
            let (v0, v1) = surface.knots_v().domain();
            let b = surface.basis(0.5 * (u0 + u1), 0.5 * (v0 + v1))?;
            let (mut xu, mut xv) = (Vec2::zero(), Vec2::zero());
            for (k, &i) in b.indices.iter().enumerate() {
                xu += surface.control_points()[i] * b.du[k];
                xv += surface.control_points()[i] * b.dv[k];
            }
            xu.cross(xv).signum()
        };
        let elements = spans
            .par_iter()
            .map(|&((u0, u1), (v0, v1))| {
                let (hu, hv) = (0.5 * (u1 - u0), 0.5 * (v1 - v0));
                let mut points = Vec::new();
                let mut qps = Vec::with_capacity(gu.len() * gv.len());
                for &(yv, wv) in &gv {
                    for &(yu, wu) in &gu {
                        let (u, v) = (0.5 * (u0 + u1) + hu * yu, 0.5 * (v0 + v1) + hv * yv);
                        let b = surface.basis(u, v)?;
                        let mut x = Vec2::zero();
                        let (mut xu, mut xv) = (Vec2::zero(), Vec2::zero());
                        for (k, &i) in b.indices.iter().enumerate() {
                            let p = surface.control_points()[i];
                            x += p * b.values[k];
                            xu += p * b.du[k];
                            xv += p * b.dv[k];
                        }
                        let jac = Mat2::from_cols(xu, xv);
                        let det = jac.det();
                        if !(det.abs() > 0.0) || det.signum() != orientation {
                            return Err(StructureError::Geometry { x, det });
                        }
                        let jinv_t = jac.inverse().expect("nonzero determinant").transpose();
                        let grads = b.du.iter().zip(&b.dv).map(|(&a, &c)| jinv_t.mul_vec(Vec2::new(a, c))).collect();
                        if points.is_empty() {
                            points = b.indices.clone();
                        }
                        qps.push(QuadPoint { x, weight: wu * wv * hu * hv * det.abs(), values: b.values, grads });
                    }
                }
                let dofs = points.iter().flat_map(|&p| [2 * p, 2 * p + 1]).collect();
                Ok(Element { points, dofs, qps })
            })
            .collect::<Result<Vec<_>, StructureError>>()?;
        let pattern = Arc::new(SparsePattern::from_blocks(2 * npts, elements.iter().map(|e| e.dofs.as_slice())));
        let lu = SparseLu::new(pattern.clone())?;
        Ok(Self { surface, params, prescribed, mask, elements, pattern, lu, options: StructureOptions::default() })
    }

    pub fn with_options(mut self, options: StructureOptions) -> Self {
        self.options = options;
        self
    }

    pub fn surface(&self) -> &NurbsSurface<f64> {
        &self.surface
    }

    pub fn params(&self) -> &StructureParams {
        &self.params
    }

    pub fn num_dofs(&self) -> usize {
        self.prescribed.len()
    }

    pub fn constrained(&self) -> &[bool] {
        &self.mask
    }

    pub fn quadrature_points(&self) -> impl Iterator<Item = &QuadPoint> {
        self.elements.iter().flat_map(|e| e.qps.iter())
    }

    /// Internal force vector `∫ P : ∇₀w` and, on request, the consistent tangent.
    pub fn internal_force(&self, d: &[f64], want_tangent: bool) -> Result<(Vec<f64>, Option<CscMatrix>), StructureError> {
        let (lambda, mu) = (self.params.lambda, self.params.mu);
        let locals = self
            .elements
            .par_iter()
            .map(|e| {
                let m = e.dofs.len();
                let mut f = vec![0.0; m];
                let mut k = if want_tangent { vec![0.0; m * m] } else { Vec::new() };
                let mut bmat = vec![SymTensor2::zero(); m];
                for qp in &e.qps {
                    let mut h = Mat2::zero();
                    for (a, &p) in e.points.iter().enumerate() {
                        let (g, dx, dy) = (qp.grads[a], d[2 * p], d[2 * p + 1]);
                        h = h.add(&Mat2::new(dx * g.x, dx * g.y, dy * g.x, dy * g.y));
                    }
                    let (fm, strain) = kinematics(&h).map_err(|det| StructureError::Inverted { x: qp.x, det })?;
                    let s = pk2_stress(&strain, lambda, mu);
                    let pk1 = fm.mul_mat(&s.to_mat());
                    for (a, &g) in qp.grads.iter().enumerate() {
                        let pg = pk1.mul_vec(g);
                        f[2 * a] += qp.weight * pg.x;
                        f[2 * a + 1] += qp.weight * pg.y;
                    }
                    if !want_tangent {
                        continue;
                    }
                    for (a, &g) in qp.grads.iter().enumerate() {
                        for i in 0..2 {
                            let row = fm.m[i];
                            bmat[2 * a + i] =
                                SymTensor2::new(row[0] * g.x, row[1] * g.y, 0.5 * (row[0] * g.y + row[1] * g.x));
                        }
                    }
                    for a in 0..m {
                        let ba = bmat[a];
                        let tra = ba.xx + ba.yy;
                        let sga = s.dot(qp.grads[a / 2]);
                        for b in 0..m {
                            let bb = bmat[b];
                            let mut v = lambda * tra * (bb.xx + bb.yy)
                                + 2.0 * mu * (ba.xx * bb.xx + ba.yy * bb.yy + 2.0 * ba.xy * bb.xy);
                            if a % 2 == b % 2 {
                                v += sga.dot(qp.grads[b / 2]);
                            }
                            k[a * m + b] += qp.weight * v;
                        }
                    }
                }
                Ok((f, k))
            })
            .collect::<Result<Vec<_>, StructureError>>()?;
        let mut force = vec![0.0; self.num_dofs()];
        let mut tangent = want_tangent.then(|| CscMatrix::zeros(self.pattern.clone()));
        for (e, (f, k)) in self.elements.iter().zip(locals) {
            for (&dof, v) in e.dofs.iter().zip(f) {
                force[dof] += v;
            }
            if let Some(t) = tangent.as_mut() {
                t.add_block(&e.dofs, &k);
            }
        }
        Ok((force, tangent))
    }

    /// Consistent mass matrix `ρ ∫ R_a R_b`.
    pub fn mass_matrix(&self) -> CscMatrix {
        let mut mass = CscMatrix::zeros(self.pattern.clone());
        let rho = self.params.density;
        for e in &self.elements {
            let m = e.dofs.len();
            let mut k = vec![0.0; m * m];
            for qp in &e.qps {
                for a in 0..e.points.len() {
                    for b in 0..e.points.len() {
                        let v = rho * qp.weight * qp.values[a] * qp.values[b];
                        k[(2 * a) * m + 2 * b] += v;
                        k[(2 * a + 1) * m + 2 * b + 1] += v;
                    }
                }
            }
            mass.add_block(&e.dofs, &k);
        }
        mass
    }

    /// Constrained residual at load factor `factor`: prescribed rows read `d − factor·g`.
    pub fn residual(
        &self,
        d: &[f64],
        loads: &[Vec2<f64>],
        factor: f64,
        want_tangent: bool,
    ) -> Result<(Vec<f64>, Option<CscMatrix>), StructureError> {
        let (mut r, mut k) = self.internal_force(d, want_tangent)?;
        for (i, l) in loads.iter().enumerate() {
            r[2 * i] -= factor * l.x;
            r[2 * i + 1] -= factor * l.y;
        }
        for (i, g) in self.prescribed.iter().enumerate() {
            if let Some(g) = g {
                r[i] = d[i] - factor * g;
            }
        }
        if let Some(k) = k.as_mut() {
            k.set_identity_rows(&self.mask);
        }
        Ok((r, k))
    }

    fn check_loads(&self, loads: &[Vec2<f64>]) -> Result<(), StructureError> {
        if loads.len() != self.surface.control_points().len() {
            return Err(StructureError::Bc(format!(
                "{} control-point loads for {} control points",
                loads.len(),
                self.surface.control_points().len()
            )));
        }
        Ok(())
    }

    /// Static equilibrium under control-point loads with adaptive load stepping.
    pub fn solve_quasistatic(
        &self,
        loads: &[Vec2<f64>],
        initial: Option<&StructureState>,
    ) -> Result<(StructureState, StructureReport), StructureError> {
        self.check_loads(loads)?;
        let n = self.num_dofs();
        let mut cold = vec![0.0; n];
        for (i, g) in self.prescribed.iter().enumerate() {
            if let Some(g) = g {
                cold[i] = *g;
            }
        }
        let reference = norm2(&self.residual(&cold, loads, 1.0, false)?.0);
        let tol = (self.options.rel_tol * reference).max(self.options.abs_tol);

        let mut d = match initial {
            Some(s) if s.displacement.len() * 2 == n => s.to_dofs(),
            Some(_) => return Err(StructureError::Bc("initial state has wrong size".into())),
            None => vec![0.0; n],
        };
        // a warm start is tried as one full step first
        let mut factor: f64 = 0.0;
        let mut step: f64 = 1.0;
        let mut cuts = 0;
        let mut increments = 0;
        let mut iterations = 0;
        loop {
            let target = (factor + step).min(1.0);
            match self.newton(d.clone(), loads, target, tol) {
                Ok((dn, hist)) => {
                    iterations += hist.len() - 1;
                    increments += 1;
                    d = dn;
                    factor = target;
                    if factor >= 1.0 {
                        return Ok((
                            StructureState::from_dofs(&d),
                            StructureReport { residuals: hist, increments, iterations },
                        ));
                    }
                }
                Err(residuals) => {
                    cuts += 1;
                    if cuts > self.options.max_cuts {
                        return Err(StructureError::NonConvergence { residuals });
                    }
                    step *= 0.5;
                }
            }
        }
    }

    fn newton(&self, mut d: Vec<f64>, loads: &[Vec2<f64>], factor: f64, tol: f64) -> Result<(Vec<f64>, Vec<f64>), Vec<f64>> {
        for (i, g) in self.prescribed.iter().enumerate() {
            if let Some(g) = g {
                d[i] = factor * g;
            }
        }
        let mut hist = Vec::new();
        for it in 0..=self.options.max_iter {
            let Ok((r, k)) = self.residual(&d, loads, factor, true) else {
                return Err(hist);
            };
            let res = norm2(&r);
            hist.push(res);
            if res <= tol {
                return Ok((d, hist));
            }
            if !res.is_finite() || it == self.options.max_iter || (it > 2 && res > 1e3 * hist[0]) {
                return Err(hist);
            }
            let Ok(dd) = self.lu.solve(&k.expect("tangent requested"), &r) else {
                return Err(hist);
            };
            for (x, s) in d.iter_mut().zip(&dd) {
                *x -= s;
            }
            // roundoff floor of ill-conditioned problems: the update itself has vanished
            if norm_inf(&dd) <= 1e-13 * norm_inf(&d) {
                let Ok((r, _)) = self.residual(&d, loads, factor, false) else {
                    return Err(hist);
                };
                hist.push(norm2(&r));
                return Ok((d, hist));
            }
        }
        Err(hist)
    }

    /// Displacement of the material point at `(u, v)`.
    pub fn displacement_at(&self, state: &StructureState, u: f64, v: f64) -> Result<Vec2<f64>, StructureError> {
        let b = self.surface.basis(u, v)?;
        Ok(b.indices.iter().zip(&b.values).fold(Vec2::zero(), |acc, (&i, &r)| acc + state.displacement[i] * r))
    }

    /// `(X, F, S)` at every quadrature point.
    pub fn stress_at_points(
        &self,
        state: &StructureState,
    ) -> Result<Vec<(Vec2<f64>, Mat2<f64>, SymTensor2<f64>)>, StructureError> {
        let d = flatten(&state.displacement);
        let mut out = Vec::new();
        for e in &self.elements {
            for qp in &e.qps {
                let mut h = Mat2::zero();
                for (a, &p) in e.points.iter().enumerate() {
                    let (g, dx, dy) = (qp.grads[a], d[2 * p], d[2 * p + 1]);
                    h = h.add(&Mat2::new(dx * g.x, dx * g.y, dy * g.x, dy * g.y));
                }
                let (f, strain) = kinematics(&h).map_err(|det| StructureError::Inverted { x: qp.x, det })?;
                out.push((qp.x, f, pk2_stress(&strain, self.params.lambda, self.params.mu)));
            }
        }
        Ok(out)
    }

    pub fn deformed_surface(&self, state: &StructureState) -> Result<NurbsSurface<f64>, StructureError> {
        Ok(self.surface.displaced(&state.displacement)?)
    }
}
