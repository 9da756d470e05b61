use crate::geom::Vec2;
use crate::nurbs::curve::insert_homogeneous;
use crate::nurbs::{KnotVector, NurbsCurve, NurbsError};
use crate::Scalar;

/// Tensor-product rational surface mapping a parameter rectangle into the plane.
///
/// Control net is stored u-fastest: point `(i, j)` lives at `i + nu * j`.
#[derive(Clone, Debug, PartialEq)]
pub struct NurbsSurface<T> {
    knots_u: KnotVector<T>,
    knots_v: KnotVector<T>,
    points: Vec<Vec2<T>>,
    weights: Vec<T>,
}

/// Nonzero surface basis functions and their parametric gradients at one point.
#[derive(Clone, Debug)]
pub struct SurfaceBasis<T> {
    pub indices: Vec<usize>,
    pub values: Vec<T>,
    pub du: Vec<T>,
    pub dv: Vec<T>,
}

/// One side of the parameter rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SurfaceEdge {
    UMin,
    UMax,
    VMin,
    VMax,
}

impl<T: Scalar> NurbsSurface<T> {
    pub fn new(
        knots_u: KnotVector<T>,
        knots_v: KnotVector<T>,
        points: Vec<Vec2<T>>,
        weights: Vec<T>,
    ) -> Result<Self, NurbsError> {
        let (nu, nv) = (knots_u.num_basis(), knots_v.num_basis());
        if points.len() != nu * nv || weights.len() != nu * nv {
            return Err(NurbsError::Inconsistent(format!(
                "net {nu}x{nv} needs {} points, got {} points / {} weights",
                nu * nv,
                points.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|&w| !(w > T::zero()) || !w.is_finite()) {
            return Err(NurbsError::Inconsistent("weights must be positive".into()));
        }
        Ok(Self { knots_u, knots_v, points, weights })
    }

    #[inline]
    pub fn knots_u(&self) -> &KnotVector<T> {
        &self.knots_u
    }

    #[inline]
    pub fn knots_v(&self) -> &KnotVector<T> {
        &self.knots_v
    }

    #[inline]
    pub fn degrees(&self) -> (usize, usize) {
        (self.knots_u.degree(), self.knots_v.degree())
    }

    /// Net dimensions `(nu, nv)`.
    #[inline]
    pub fn net_size(&self) -> (usize, usize) {
        (self.knots_u.num_basis(), self.knots_v.num_basis())
    }

    #[inline]
    pub fn control_points(&self) -> &[Vec2<T>] {
        &self.points
    }

    #[inline]
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.knots_u.num_basis() * j
    }

    pub fn displaced(&self, disp: &[Vec2<T>]) -> Result<Self, NurbsError> {
        if disp.len() != self.points.len() {
            return Err(NurbsError::Inconsistent(format!(
                "{} displacements for {} control points",
                disp.len(),
                self.points.len()
            )));
        }
        let mut out = self.clone();
        for (p, &d) in out.points.iter_mut().zip(disp) {
            *p += d;
        }
        Ok(out)
    }

    /// Rational basis with gradients with respect to `(u, v)`.
    pub fn basis(&self, u: T, v: T) -> Result<SurfaceBasis<T>, NurbsError> {
        let (pu, pv) = self.degrees();
        let su = self.knots_u.find_span(u)?;
        let sv = self.knots_v.find_span(v)?;
        let nu = self.knots_u.ders_basis_funs(su, u, 1);
        let nv = self.knots_v.ders_basis_funs(sv, v, 1);
        let count = (pu + 1) * (pv + 1);
        let mut indices = Vec::with_capacity(count);
        let mut a = Vec::with_capacity(count);
        let mut au = Vec::with_capacity(count);
        let mut av = Vec::with_capacity(count);
        let (mut w, mut wu, mut wv) = (T::zero(), T::zero(), T::zero());
        for b in 0..=pv {
            for a_ in 0..=pu {
                let idx = self.index(su - pu + a_, sv - pv + b);
                let wt = self.weights[idx];
                let val = nu[0][a_] * nv[0][b] * wt;
                let du = nu[1][a_] * nv[0][b] * wt;
                let dv = nu[0][a_] * nv[1][b] * wt;
                indices.push(idx);
                a.push(val);
                au.push(du);
                av.push(dv);
                w += val;
                wu += du;
                wv += dv;
            }
        }
        let inv = T::one() / w;
        let values: Vec<T> = a.iter().map(|&x| x * inv).collect();
        let du = au.iter().zip(&values).map(|(&x, &r)| (x - r * wu) * inv).collect();
        let dv = av.iter().zip(&values).map(|(&x, &r)| (x - r * wv) * inv).collect();
        Ok(SurfaceBasis { indices, values, du, dv })
    }

    pub fn eval(&self, u: T, v: T) -> Result<Vec2<T>, NurbsError> {
        let b = self.basis(u, v)?;
        Ok(b.indices
            .iter()
            .zip(&b.values)
            .fold(Vec2::zero(), |acc, (&i, &r)| acc + self.points[i] * r))
    }

    /// Insert knots in either direction; geometry is unchanged.
    pub fn refine(&self, new_u: &[T], new_v: &[T]) -> Result<Self, NurbsError> {
        let mut s = self.clone();
        for &t in new_u {
            s = s.insert_u(t)?;
        }
        for &t in new_v {
            s = s.insert_v(t)?;
        }
        Ok(s)
    }

    fn homogeneous(&self, idx: usize) -> [T; 3] {
        let (p, w) = (self.points[idx], self.weights[idx]);
        [p.x * w, p.y * w, w]
    }

    fn insert_u(&self, t: T) -> Result<Self, NurbsError> {
        let (nu, nv) = self.net_size();
        let mut rows: Vec<Vec<[T; 3]>> = Vec::with_capacity(nv);
        let mut knots = None;
        for j in 0..nv {
            let row: Vec<[T; 3]> = (0..nu).map(|i| self.homogeneous(self.index(i, j))).collect();
            let (k, q) = insert_homogeneous(&self.knots_u, &row, t)?;
            knots = Some(k);
            rows.push(q);
        }
        let knots_u = knots.expect("surface has at least one row");
        let mut pts = Vec::with_capacity((nu + 1) * nv);
        for row in &rows {
            pts.extend_from_slice(row);
        }
        Self::from_homogeneous(knots_u, self.knots_v.clone(), &pts)
    }

    fn insert_v(&self, t: T) -> Result<Self, NurbsError> {
        let (nu, nv) = self.net_size();
        let mut cols: Vec<Vec<[T; 3]>> = Vec::with_capacity(nu);
        let mut knots = None;
        for i in 0..nu {
            let col: Vec<[T; 3]> = (0..nv).map(|j| self.homogeneous(self.index(i, j))).collect();
            let (k, q) = insert_homogeneous(&self.knots_v, &col, t)?;
            knots = Some(k);
            cols.push(q);
        }
        let knots_v = knots.expect("surface has at least one column");
        let mut pts = Vec::with_capacity(nu * (nv + 1));
        for j in 0..=nv {
            for col in &cols {
                pts.push(col[j]);
            }
        }
        Self::from_homogeneous(self.knots_u.clone(), knots_v, &pts)
    }

    fn from_homogeneous(
        knots_u: KnotVector<T>,
        knots_v: KnotVector<T>,
        pw: &[[T; 3]],
    ) -> Result<Self, NurbsError> {
        let points = pw.iter().map(|h| Vec2::new(h[0] / h[2], h[1] / h[2])).collect();
        let weights = pw.iter().map(|h| h[2]).collect();
        Self::new(knots_u, knots_v, points, weights)
    }

    /// Control point indices along one side of the net, in increasing parameter order.
    pub fn edge_indices(&self, edge: SurfaceEdge) -> Vec<usize> {
        let (nu, nv) = self.net_size();
        match edge {
            SurfaceEdge::VMin => (0..nu).map(|i| self.index(i, 0)).collect(),
            SurfaceEdge::VMax => (0..nu).map(|i| self.index(i, nv - 1)).collect(),
            SurfaceEdge::UMin => (0..nv).map(|j| self.index(0, j)).collect(),
            SurfaceEdge::UMax => (0..nv).map(|j| self.index(nu - 1, j)).collect(),
        }
    }

    /// The boundary curve along one side (exact: clamped knots make the surface
    /// interpolate its edge curve).
    pub fn boundary_curve(&self, edge: SurfaceEdge) -> Result<NurbsCurve<T>, NurbsError> {
        let idx = self.edge_indices(edge);
        let knots = match edge {
            SurfaceEdge::VMin | SurfaceEdge::VMax => self.knots_u.clone(),
            SurfaceEdge::UMin | SurfaceEdge::UMax => self.knots_v.clone(),
        };
        NurbsCurve::new(
            knots,
            idx.iter().map(|&i| self.points[i]).collect(),
            idx.iter().map(|&i| self.weights[i]).collect(),
        )
    }
}
