//! NURBS-enhanced element kernel: the triangle-rectangle-triangle (TRT) map of
//! a triangle with one exact NURBS edge, linear shape functions on the
//! reference triangle, and curved volume and boundary quadrature.

mod quadrature;

pub use quadrature::{gauss_legendre, QuadratureRule};

use crate::geom::{Mat2, Vec2};
use crate::nurbs::{KnotVector, NurbsCurve, NurbsError};
use crate::Scalar;

/// Below this value of `s + r` the TRT Jacobian is treated as singular.
pub const SINGULAR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NefemError {
    #[error("TRT Jacobian is singular at the interior node (s + r = {0:e})")]
    Singular(f64),
    #[error("inverted element: det J = {det:e} at (s, r) = ({s}, {r})")]
    Inverted { det: f64, s: f64, r: f64 },
    #[error("invalid curved element: {0}")]
    Invalid(String),
    #[error(transparent)]
    Spline(#[from] NurbsError),
}

/// Reference gradients of `N = {s, 1 - s - r, r}`.
const REF_GRAD: [(f64, f64); 3] = [(1.0, 0.0), (-1.0, -1.0), (0.0, 1.0)];

/// Linear shape functions ordered (boundary node 1, interior node 2, boundary node 3).
#[inline]
pub fn shape_functions<T: Scalar>(s: T, r: T) -> [T; 3] {
    [s, T::one() - s - r, r]
}

/// Quadrature point inside an element, with shape data aligned to some node order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElementPoint<T> {
    pub x: Vec2<T>,
    /// Rule weight times Jacobian determinant.
    pub weight: T,
    pub n: [T; 3],
    pub grad: [Vec2<T>; 3],
}

/// Quadrature point on a boundary edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryPoint<T> {
    /// Spline parameter, or the local edge coordinate in [0, 1] on straight edges.
    pub theta: T,
    pub x: Vec2<T>,
    /// Arc-length weight.
    pub weight: T,
    /// Unit normal pointing out of the meshed domain.
    pub normal: Vec2<T>,
    /// Values of the two edge-end shape functions (start, end).
    pub n: [T; 2],
}

/// Triangle with one NURBS edge from `C(theta1)` to `C(theta3)` and interior
/// vertex `x2`. The domain lies to the left of the edge traversed from
/// `theta1` to `theta3`.
#[derive(Clone, Copy, Debug)]
pub struct CurvedTriangle<'a, T> {
    pub x2: Vec2<T>,
    pub curve: &'a NurbsCurve<T>,
    pub theta1: T,
    pub theta3: T,
}

impl<'a, T: Scalar> CurvedTriangle<'a, T> {
    pub fn new(x2: Vec2<T>, curve: &'a NurbsCurve<T>, theta1: T, theta3: T) -> Result<Self, NefemError> {
        let (lo, hi) = curve.domain();
        if theta1 == theta3 {
            return Err(NefemError::Invalid("theta1 == theta3".into()));
        }
        for t in [theta1, theta3] {
            if !(t >= lo && t <= hi) {
                return Err(NurbsError::Domain {
                    value: t.to_f64().unwrap_or(f64::NAN),
                    lo: lo.to_f64().unwrap_or(f64::NAN),
                    hi: hi.to_f64().unwrap_or(f64::NAN),
                }
                .into());
            }
        }
        Ok(Self { x2, curve, theta1, theta3 })
    }

    fn theta_at(&self, s: T, r: T) -> T {
        (self.theta1 * s + self.theta3 * r) / (s + r)
    }

    /// `Φ(s, r) = (1 - s - r) x2 + (s + r) C((Θ1 s + Θ3 r) / (s + r))`.
    pub fn map(&self, s: T, r: T) -> Result<Vec2<T>, NefemError> {
        let rho = s + r;
        if rho == T::zero() {
            return Ok(self.x2);
        }
        let c = self.curve.eval(self.theta_at(s, r))?;
        Ok(self.x2 * (T::one() - rho) + c * rho)
    }

    /// Jacobian with columns `∂Φ/∂s`, `∂Φ/∂r`, and its determinant.
    pub fn jacobian(&self, s: T, r: T) -> Result<(Mat2<T>, T), NefemError> {
        let rho = s + r;
        if !(rho > T::lit(SINGULAR_TOL)) {
            return Err(NefemError::Singular(rho.to_f64().unwrap_or(f64::NAN)));
        }
        let d = self.curve.eval_derivatives(self.theta_at(s, r), 1)?;
        let (c, dc) = (d[0], d[1]);
        let base = c - self.x2;
        let dt = self.theta1 - self.theta3;
        let ds = base + dc * (dt * r / rho);
        let dr = base - dc * (dt * s / rho);
        let j = Mat2::from_cols(ds, dr);
        let det = j.det();
        Ok((j, det))
    }

    /// Physical gradients of the three shape functions.
    pub fn shape_gradients(&self, s: T, r: T) -> Result<[Vec2<T>; 3], NefemError> {
        let (j, det) = self.jacobian(s, r)?;
        let inv_t = j
            .inverse()
            .filter(|_| det.is_finite())
            .ok_or_else(|| inverted(det, s, r))?
            .transpose();
        Ok(REF_GRAD.map(|(a, b)| inv_t.mul_vec(Vec2::new(T::lit(a), T::lit(b)))))
    }

    /// Breakpoints of the Θ interval, including its ends, following the
    /// direction from `theta1` to `theta3`.
    fn theta_breaks(&self) -> Vec<T> {
        self.theta_breaks_with(None)
    }

    fn theta_breaks_with(&self, extra: Option<&KnotVector<T>>) -> Vec<T> {
        let mut br = vec![self.theta1];
        let mut inner = self.curve.knots().breakpoints_between(self.theta1, self.theta3);
        if let Some(k) = extra {
            inner.extend(k.breakpoints_between(self.theta1, self.theta3));
            inner.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
            inner.dedup_by(|a, b| (*a - *b).abs() <= T::epsilon() * T::lit(16.0));
        }
        if self.theta3 < self.theta1 {
            inner.reverse();
        }
        br.extend(inner);
        br.push(self.theta3);
        br
    }

    /// Rule points mapped into the curved element. The element is split into
    /// sub-triangles fanning from `x2` at interior knots of the edge, so each
    /// sub-triangle sees a smooth piece of the curve.
    pub fn volume_quadrature(&self, rule: &QuadratureRule<T>) -> Result<Vec<ElementPoint<T>>, NefemError> {
        let br = self.theta_breaks();
        let span = self.theta3 - self.theta1;
        let mut out = Vec::with_capacity(rule.len() * (br.len() - 1));
        for w in br.windows(2) {
            let r0 = (w[0] - self.theta1) / span;
            let r1 = (w[1] - self.theta1) / span;
            let scale = r1 - r0;
            for &(xi, eta, wq) in &rule.points {
                let s = xi * (T::one() - r0) + eta * (T::one() - r1);
                let r = xi * r0 + eta * r1;
                let (j, det) = self.jacobian(s, r)?;
                if !(det > T::zero()) {
                    return Err(inverted(det, s, r));
                }
                let inv_t = j.inverse().ok_or_else(|| inverted(det, s, r))?.transpose();
                let grad = REF_GRAD.map(|(a, b)| inv_t.mul_vec(Vec2::new(T::lit(a), T::lit(b))));
                out.push(ElementPoint {
                    x: self.map(s, r)?,
                    weight: wq * scale * det,
                    n: shape_functions(s, r),
                    grad,
                });
            }
        }
        Ok(out)
    }

    /// Gauss–Legendre points in Θ along the curved edge, `n_gp` per knot span
    /// piece. Normals point out of the element (to the right of the traversal
    /// direction Θ1 → Θ3).
    pub fn boundary_quadrature(&self, n_gp: usize) -> Result<Vec<BoundaryPoint<T>>, NefemError> {
        self.boundary_quadrature_split(n_gp, None)
    }

    /// As [`Self::boundary_quadrature`], additionally split at the breakpoints of `extra`.
    pub fn boundary_quadrature_split(
        &self,
        n_gp: usize,
        extra: Option<&KnotVector<T>>,
    ) -> Result<Vec<BoundaryPoint<T>>, NefemError> {
        let gl = gauss_legendre::<T>(n_gp.max(1));
        let br = self.theta_breaks_with(extra);
        let span = self.theta3 - self.theta1;
        let dir = if span > T::zero() { T::one() } else { -T::one() };
        let half = T::lit(0.5);
        let mut out = Vec::with_capacity(gl.len() * (br.len() - 1));
        for w in br.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mid = (a + b) * half;
            let hl = (b - a) * half;
            for &(xg, wg) in &gl {
                let theta = mid + hl * xg;
                let d = self.curve.eval_derivatives(theta, 1)?;
                let speed = d[1].norm();
                let tangent = d[1] * (dir / speed);
                let r = (theta - self.theta1) / span;
                out.push(BoundaryPoint {
                    theta,
                    x: d[0],
                    weight: speed * wg * hl.abs(),
                    normal: tangent.rot_cw(),
                    n: [T::one() - r, r],
                });
            }
        }
        Ok(out)
    }
}

fn inverted<T: Scalar>(det: T, s: T, r: T) -> NefemError {
    NefemError::Inverted {
        det: det.to_f64().unwrap_or(f64::NAN),
        s: s.to_f64().unwrap_or(f64::NAN),
        r: r.to_f64().unwrap_or(f64::NAN),
    }
}

/// Affine element quadrature for a straight triangle; shape data follow the
/// vertex order.
pub fn straight_volume_quadrature<T: Scalar>(
    p: [Vec2<T>; 3],
    rule: &QuadratureRule<T>,
) -> Result<Vec<ElementPoint<T>>, NefemError> {
    let e1 = p[1] - p[0];
    let e2 = p[2] - p[0];
    let det = e1.cross(e2);
    if !(det > T::zero()) {
        return Err(inverted(det, T::zero(), T::zero()));
    }
    let inv = T::one() / det;
    // gradients of barycentric coordinates
    let g1 = Vec2::new(e2.y, -e2.x) * inv;
    let g2 = Vec2::new(-e1.y, e1.x) * inv;
    let g0 = -(g1 + g2);
    Ok(rule
        .points
        .iter()
        .map(|&(s, r, w)| ElementPoint {
            x: p[0] + e1 * s + e2 * r,
            weight: w * det,
            n: [T::one() - s - r, s, r],
            grad: [g0, g1, g2],
        })
        .collect())
}

/// Gauss–Legendre points on the straight segment `a -> b`; the normal is the
/// right-hand normal of the segment.
pub fn straight_boundary_quadrature<T: Scalar>(a: Vec2<T>, b: Vec2<T>, n_gp: usize) -> Vec<BoundaryPoint<T>> {
    let e = b - a;
    let len = e.norm();
    let normal = (e * (T::one() / len)).rot_cw();
    let half = T::lit(0.5);
    gauss_legendre::<T>(n_gp.max(1))
        .into_iter()
        .map(|(xg, wg)| {
            let t = (T::one() + xg) * half;
            BoundaryPoint { theta: t, x: a + e * t, weight: wg * len * half, normal, n: [T::one() - t, t] }
        })
        .collect()
}

/// Element points for the triangle `tri` (vertex coordinates in vertex order)
/// whose local edge `edge` is the curved edge, with shape data permuted back
/// to the vertex order.
pub fn curved_volume_quadrature<T: Scalar>(
    p: [Vec2<T>; 3],
    edge: usize,
    curve: &NurbsCurve<T>,
    theta_start: T,
    theta_end: T,
    rule: &QuadratureRule<T>,
) -> Result<Vec<ElementPoint<T>>, NefemError> {
    let ct = CurvedTriangle::new(p[(edge + 2) % 3], curve, theta_start, theta_end)?;
    // TRT local order (x1, x2, x3) = (edge start, interior, edge end)
    let local_of_vertex = [(0usize, edge), (1, (edge + 2) % 3), (2, (edge + 1) % 3)];
    let pts = ct.volume_quadrature(rule)?;
    Ok(pts
        .into_iter()
        .map(|q| {
            let mut n = [T::zero(); 3];
            let mut grad = [Vec2::zero(); 3];
            for &(l, v) in &local_of_vertex {
                n[v] = q.n[l];
                grad[v] = q.grad[l];
            }
            ElementPoint { x: q.x, weight: q.weight, n, grad }
        })
        .collect())
}
