use super::{StructureError, StructureSolver};
use crate::geom::Vec2;
use crate::linalg::{norm2, CscMatrix, SparseLu};

/// Semi-discrete system `M a + f(d, t) = 0`.
pub trait SecondOrderSystem {
    fn num_dofs(&self) -> usize;
    fn mass(&self) -> CscMatrix;
    /// Internal minus external force and its tangent `∂f/∂d`.
    fn force(&self, d: &[f64], t: f64) -> Result<(Vec<f64>, CscMatrix), StructureError>;
    /// Degrees of freedom held at their current value.
    fn constrained(&self) -> Vec<bool> {
        vec![false; self.num_dofs()]
    }
}

impl SecondOrderSystem for (&StructureSolver, &[Vec2<f64>]) {
    fn num_dofs(&self) -> usize {
        self.0.num_dofs()
    }

    fn mass(&self) -> CscMatrix {
        self.0.mass_matrix()
    }

    fn force(&self, d: &[f64], _t: f64) -> Result<(Vec<f64>, CscMatrix), StructureError> {
        let (mut f, k) = self.0.internal_force(d, true)?;
        for (i, l) in self.1.iter().enumerate() {
            f[2 * i] -= l.x;
            f[2 * i + 1] -= l.y;
        }
        Ok((f, k.expect("tangent requested")))
    }

    fn constrained(&self) -> Vec<bool> {
        self.0.constrained().to_vec()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaParams {
    pub alpha_m: f64,
    pub alpha_f: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl AlphaParams {
    /// Parameters from the high-frequency spectral radius `rho_inf ∈ [0, 1]`.
    pub fn from_rho_inf(rho_inf: f64) -> Self {
        let r = rho_inf.clamp(0.0, 1.0);
        let alpha_m = (2.0 * r - 1.0) / (r + 1.0);
        let alpha_f = r / (r + 1.0);
        let gamma = 0.5 - alpha_m + alpha_f;
        let beta = 0.25 * (1.0 - alpha_m + alpha_f).powi(2);
        Self { alpha_m, alpha_f, beta, gamma }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DynamicState {
    pub t: f64,
    pub d: Vec<f64>,
    pub v: Vec<f64>,
    pub a: Vec<f64>,
}

impl DynamicState {
    /// State at rest-consistent acceleration `a = −M⁻¹ f(d, t)`.
    pub fn initialize(sys: &impl SecondOrderSystem, d: Vec<f64>, v: Vec<f64>, t: f64) -> Result<Self, StructureError> {
        let (mut f, _) = sys.force(&d, t)?;
        let mut m = sys.mass();
        let mask = sys.constrained();
        for (fi, &c) in f.iter_mut().zip(&mask) {
            if c {
                *fi = 0.0;
            }
        }
        m.set_identity_rows(&mask);
        let lu = SparseLu::new(m.pattern().clone())?;
        let a = if norm2(&f) == 0.0 { vec![0.0; f.len()] } else { lu.solve(&m, &f)?.into_iter().map(|x| -x).collect() };
        Ok(Self { t, d, v, a })
    }
}

/// One implicit generalized-α step of size `dt`.
pub fn generalized_alpha_step(
    sys: &impl SecondOrderSystem,
    state: &DynamicState,
    dt: f64,
    rho_inf: f64,
) -> Result<DynamicState, StructureError> {
    let AlphaParams { alpha_m, alpha_f, beta, gamma } = AlphaParams::from_rho_inf(rho_inf);
    let n = sys.num_dofs();
    let mask = sys.constrained();
    let mass = sys.mass();
    let lu = SparseLu::new(mass.pattern().clone())?;
    let t_f = state.t + (1.0 - alpha_f) * dt;

    let accel = |d1: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                (d1[i] - state.d[i] - dt * state.v[i]) / (beta * dt * dt) - (0.5 / beta - 1.0) * state.a[i]
            })
            .collect()
    };
    let eval = |d1: &[f64]| -> Result<(Vec<f64>, CscMatrix), StructureError> {
        let a1 = accel(d1);
        let am: Vec<f64> = (0..n).map(|i| (1.0 - alpha_m) * a1[i] + alpha_m * state.a[i]).collect();
        let df: Vec<f64> = (0..n).map(|i| (1.0 - alpha_f) * d1[i] + alpha_f * state.d[i]).collect();
        let (f, k) = sys.force(&df, t_f)?;
        let ma = mass.mul_vec(&am);
        let mut r: Vec<f64> = ma.iter().zip(&f).map(|(a, b)| a + b).collect();
        let mut jac = k;
        jac.scale(1.0 - alpha_f);
        let mut m = mass.clone();
        m.scale((1.0 - alpha_m) / (beta * dt * dt));
        jac.axpy(1.0, &m);
        for (i, &c) in mask.iter().enumerate() {
            if c {
                r[i] = d1[i] - state.d[i];
            }
        }
        jac.set_identity_rows(&mask);
        Ok((r, jac))
    };

    let mut d1 = state.d.clone();
    let (r0, _) = eval(&d1)?;
    let scale = norm2(&r0).max(norm2(&mass.mul_vec(&state.a)));
    let tol = 1e-10 * scale;
    let mut residuals = Vec::new();
    for _ in 0..30 {
        let (r, jac) = eval(&d1)?;
        let res = norm2(&r);
        residuals.push(res);
        if res <= tol {
            let a1 = accel(&d1);
            let v1 = (0..n).map(|i| state.v[i] + dt * ((1.0 - gamma) * state.a[i] + gamma * a1[i])).collect();
            return Ok(DynamicState { t: state.t + dt, d: d1, v: v1, a: a1 });
        }
        if !res.is_finite() {
            break;
        }
        let step = lu.solve(&jac, &r)?;
        for (x, s) in d1.iter_mut().zip(&step) {
            *x -= s;
        }
    }
    Err(StructureError::NonConvergence { residuals })
}
