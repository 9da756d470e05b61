use crate::geom::Vec2;
use crate::nurbs::{KnotVector, NurbsError};
use crate::Scalar;

/// Rational B-spline curve in the plane.
#[derive(Clone, Debug, PartialEq)]
pub struct NurbsCurve<T> {
    knots: KnotVector<T>,
    points: Vec<Vec2<T>>,
    weights: Vec<T>,
}

/// Nonzero rational basis functions at one parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveBasis<T> {
    /// Index of the control point belonging to `values[0]`.
    pub first: usize,
    pub values: Vec<T>,
}

impl<T: Scalar> CurveBasis<T> {
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.first..self.first + self.values.len()
    }
}

const NEWTON_MAX_ITERS: usize = 50;

impl<T: Scalar> NurbsCurve<T> {
    pub fn new(
        knots: KnotVector<T>,
        points: Vec<Vec2<T>>,
        weights: Vec<T>,
    ) -> Result<Self, NurbsError> {
        let n = knots.num_basis();
        if points.len() != n || weights.len() != n {
            return Err(NurbsError::Inconsistent(format!(
                "{} knots of degree {} need {n} control points, got {} points / {} weights",
                knots.len(),
                knots.degree(),
                points.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|&w| !(w > T::zero()) || !w.is_finite()) {
            return Err(NurbsError::Inconsistent("weights must be positive".into()));
        }
        Ok(Self { knots, points, weights })
    }

    /// Non-rational curve (all weights one).
    pub fn polynomial(knots: KnotVector<T>, points: Vec<Vec2<T>>) -> Result<Self, NurbsError> {
        let w = vec![T::one(); points.len()];
        Self::new(knots, points, w)
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.knots.degree()
    }

    #[inline]
    pub fn knots(&self) -> &KnotVector<T> {
        &self.knots
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
    pub fn num_control_points(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn domain(&self) -> (T, T) {
        self.knots.domain()
    }

    /// First and last control points coincide: a closed curve with its seam at
    /// the ends of the parameter range.
    pub fn is_closed(&self) -> bool {
        let a = self.points[0];
        let b = self.points[self.points.len() - 1];
        let scale = self.points.iter().fold(T::one(), |m, p| m.max(p.max_abs()));
        (a - b).max_abs() <= T::lit(1e-14) * scale
    }

    /// Same knots and weights, control points moved by `disp`.
    pub fn displaced(&self, disp: &[Vec2<T>]) -> Result<Self, NurbsError> {
        if disp.len() != self.points.len() {
            return Err(NurbsError::Inconsistent(format!(
                "{} displacements for {} control points",
                disp.len(),
                self.points.len()
            )));
        }
        let points = self.points.iter().zip(disp).map(|(&p, &d)| p + d).collect();
        Ok(Self { knots: self.knots.clone(), points, weights: self.weights.clone() })
    }

    /// The `p+1` nonzero values of `R_{i,p}(theta)`.
    pub fn rational_basis(&self, theta: T) -> Result<CurveBasis<T>, NurbsError> {
        let span = self.knots.find_span(theta)?;
        let p = self.degree();
        let first = span - p;
        let n = self.knots.basis_funs(span, theta);
        let mut values: Vec<T> = n
            .iter()
            .enumerate()
            .map(|(j, &nj)| nj * self.weights[first + j])
            .collect();
        let w: T = values.iter().fold(T::zero(), |a, &b| a + b);
        for v in &mut values {
            *v /= w;
        }
        Ok(CurveBasis { first, values })
    }

    /// Rational basis and its parametric derivatives up to `order` (at most 2):
    /// `(first, ders)` with `ders[k][j]` the k-th derivative of `R_{first+j}`.
    pub fn rational_basis_derivatives(
        &self,
        theta: T,
        order: usize,
    ) -> Result<(usize, Vec<Vec<T>>), NurbsError> {
        if order > 2 {
            return Err(NurbsError::UnsupportedOrder(order));
        }
        let span = self.knots.find_span(theta)?;
        let p = self.degree();
        let first = span - p;
        let nd = self.knots.ders_basis_funs(span, theta, order);
        // weighted B-splines and the weight function with its derivatives
        let a: Vec<Vec<T>> = nd
            .iter()
            .map(|row| row.iter().enumerate().map(|(j, &v)| v * self.weights[first + j]).collect())
            .collect();
        let w: Vec<T> = a.iter().map(|row| row.iter().fold(T::zero(), |s, &v| s + v)).collect();
        let mut r = vec![vec![T::zero(); p + 1]; order + 1];
        let two = T::lit(2.0);
        for j in 0..=p {
            r[0][j] = a[0][j] / w[0];
            if order >= 1 {
                r[1][j] = (a[1][j] - w[1] * r[0][j]) / w[0];
            }
            if order >= 2 {
                r[2][j] = (a[2][j] - two * w[1] * r[1][j] - w[2] * r[0][j]) / w[0];
            }
        }
        Ok((first, r))
    }

    pub fn eval(&self, theta: T) -> Result<Vec2<T>, NurbsError> {
        let b = self.rational_basis(theta)?;
        Ok(b.indices()
            .zip(&b.values)
            .fold(Vec2::zero(), |acc, (i, &r)| acc + self.points[i] * r))
    }

    /// `[C, C', C'']` truncated to `order + 1` entries; `order` at most 2.
    pub fn eval_derivatives(&self, theta: T, order: usize) -> Result<Vec<Vec2<T>>, NurbsError> {
        if order > 2 {
            return Err(NurbsError::UnsupportedOrder(order));
        }
        let span = self.knots.find_span(theta)?;
        let p = self.degree();
        let first = span - p;
        let nd = self.knots.ders_basis_funs(span, theta, order);
        // homogeneous numerator A^(k) and weight w^(k)
        let mut a = vec![Vec2::zero(); order + 1];
        let mut w = vec![T::zero(); order + 1];
        for k in 0..=order {
            for j in 0..=p {
                let wj = self.weights[first + j] * nd[k][j];
                a[k] += self.points[first + j] * wj;
                w[k] += wj;
            }
        }
        let mut c = vec![Vec2::zero(); order + 1];
        c[0] = a[0] * (T::one() / w[0]);
        if order >= 1 {
            c[1] = (a[1] - c[0] * w[1]) * (T::one() / w[0]);
        }
        if order >= 2 {
            c[2] = (a[2] - c[1] * (T::lit(2.0) * w[1]) - c[0] * w[2]) * (T::one() / w[0]);
        }
        Ok(c)
    }

    /// Parameter of the closest curve point to `x`, by Newton iteration on
    /// `C'(θ)·(C(θ) - x)` started from `seeds` uniformly spaced parameters.
    pub fn project_point(&self, x: Vec2<T>, seeds: usize) -> Result<T, NurbsError> {
        let (lo, hi) = self.domain();
        let range = hi - lo;
        let closed = self.is_closed();
        let seeds = seeds.max(2);
        let on_curve_tol = T::lit(1e-12);
        let stationary_tol = T::lit(1e-12);

        let mut found: Vec<(T, T)> = Vec::new();
        for s in 0..seeds {
            let mut t = lo + range * T::from_usize_lossy(s) / T::from_usize_lossy(seeds - 1);
            let mut converged = false;
            for _ in 0..NEWTON_MAX_ITERS {
                let d = self.eval_derivatives(t, 2)?;
                let diff = d[0] - x;
                let dist = diff.norm();
                if dist < on_curve_tol {
                    converged = true;
                    break;
                }
                let f = d[1].dot(diff);
                let tan = d[1].norm();
                if f.abs() <= stationary_tol * tan * dist {
                    converged = true;
                    break;
                }
                let mut fp = d[2].dot(diff) + d[1].norm_sq();
                if fp <= T::zero() {
                    // heading towards a distance maximum; fall back to a Gauss-Newton step
                    fp = d[1].norm_sq();
                }
                let max_step = range / T::lit(8.0);
                let step = (f / fp).max(-max_step).min(max_step);
                if !step.is_finite() {
                    break;
                }
                let mut next = t - step;
                if closed {
                    if next < lo || next > hi {
                        next = next - ((next - lo) / range).floor() * range;
                    }
                } else if next <= lo || next >= hi {
                    next = next.max(lo).min(hi);
                    if next == t {
                        // minimum sits at the open end of the curve
                        converged = true;
                        break;
                    }
                }
                if (next - t).abs() <= T::epsilon() * range {
                    t = next;
                    let d = self.eval_derivatives(t, 1)?;
                    let diff = d[0] - x;
                    let dist = diff.norm();
                    converged = dist < on_curve_tol
                        || d[1].dot(diff).abs() <= T::lit(1e-10) * d[1].norm() * dist;
                    break;
                }
                t = next;
            }
            if converged {
                let dist = (self.eval(t)? - x).norm();
                found.push((t, dist));
            }
        }

        let best = found
            .iter()
            .copied()
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
            .ok_or(NurbsError::ProjectionFailed { seeds })?;
        if best.1 >= on_curve_tol {
            let pb = self.eval(best.0)?;
            for &(t, d) in &found {
                if (d - best.1).abs() <= T::lit(1e-12)
                    && (self.eval(t)? - pb).norm() > T::lit(1e-10)
                {
                    return Err(NurbsError::AmbiguousProjection {
                        theta_a: best.0.to_f64().unwrap_or(f64::NAN),
                        theta_b: t.to_f64().unwrap_or(f64::NAN),
                    });
                }
            }
        }
        let mut t = best.0;
        if closed && t == hi {
            t = lo;
        }
        Ok(t)
    }

    /// Default multi-start count: four seeds per knot span.
    pub fn default_seeds(&self) -> usize {
        4 * self.knots.num_spans()
    }

    /// Insert every knot in `new_knots` (Boehm's algorithm on the homogeneous
    /// control points). The curve geometry is unchanged.
    pub fn refine(&self, new_knots: &[T]) -> Result<Self, NurbsError> {
        let mut cur = self.clone();
        for &t in new_knots {
            cur = cur.insert_knot(t)?;
        }
        Ok(cur)
    }

    fn insert_knot(&self, t: T) -> Result<Self, NurbsError> {
        let (lo, hi) = self.domain();
        if !(t > lo && t < hi) {
            return Err(NurbsError::Domain {
                value: t.to_f64().unwrap_or(f64::NAN),
                lo: lo.to_f64().unwrap_or(f64::NAN),
                hi: hi.to_f64().unwrap_or(f64::NAN),
            });
        }
        let homog: Vec<[T; 3]> = self
            .points
            .iter()
            .zip(&self.weights)
            .map(|(p, &w)| [p.x * w, p.y * w, w])
            .collect();
        let (knots, homog) = insert_homogeneous(&self.knots, &homog, t)?;
        let points = homog.iter().map(|h| Vec2::new(h[0] / h[2], h[1] / h[2])).collect();
        let weights = homog.iter().map(|h| h[2]).collect();
        Self::new(knots, points, weights)
    }
}

/// Single knot insertion on homogeneous control points of any dimension.
pub(crate) fn insert_homogeneous<T: Scalar, const D: usize>(
    knots: &KnotVector<T>,
    pw: &[[T; D]],
    t: T,
) -> Result<(KnotVector<T>, Vec<[T; D]>), NurbsError> {
    let p = knots.degree();
    let k = knots.values();
    let span = knots.find_span(t)?;
    let s = knots.multiplicity(t);
    if s + 1 > p {
        return Err(NurbsError::InvalidKnots(format!(
            "inserting {} would raise its multiplicity above the degree {p}",
            t.to_f64().unwrap_or(f64::NAN)
        )));
    }
    let n = pw.len();
    let mut q = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let v = if i + p <= span {
            pw[i]
        } else if i > span - s {
            pw[i - 1]
        } else {
            let alpha = (t - k[i]) / (k[i + p] - k[i]);
            let mut out = [T::zero(); D];
            for d in 0..D {
                out[d] = alpha * pw[i][d] + (T::one() - alpha) * pw[i - 1][d];
            }
            out
        };
        q.push(v);
    }
    let kv = KnotVector::new(knots.with_inserted(t, span), p)?;
    Ok((kv, q))
}
