//! Standard exact constructions: lines, circles, annuli, rectangular patches.

use crate::geom::Vec2;
use crate::nurbs::{KnotVector, NurbsCurve, NurbsError, NurbsSurface};
use crate::Scalar;

/// Degree-1 segment from `a` (θ = 0) to `b` (θ = 1).
pub fn line<T: Scalar>(a: Vec2<T>, b: Vec2<T>) -> NurbsCurve<T> {
    let knots = KnotVector::new(vec![T::zero(), T::zero(), T::one(), T::one()], 1)
        .expect("valid linear knots");
    NurbsCurve::polynomial(knots, vec![a, b]).expect("two control points")
}

/// Unit-circle control net of the classic 9-point quadratic circle, starting at
/// angle zero and running counterclockwise (or clockwise when `clockwise`).
fn unit_circle_net<T: Scalar>(clockwise: bool) -> (Vec<Vec2<T>>, Vec<T>) {
    let s = T::lit(std::f64::consts::FRAC_1_SQRT_2);
    let one = T::one();
    let z = T::zero();
    let sy = if clockwise { -one } else { one };
    let raw = [
        (one, z),
        (one, one),
        (z, one),
        (-one, one),
        (-one, z),
        (-one, -one),
        (z, -one),
        (one, -one),
        (one, z),
    ];
    let pts = raw.iter().map(|&(x, y)| Vec2::new(x, y * sy)).collect();
    let w = (0..9).map(|i| if i % 2 == 0 { one } else { s }).collect();
    (pts, w)
}

fn circle_knots<T: Scalar>() -> KnotVector<T> {
    let q = |x: f64| T::lit(x);
    KnotVector::new(
        vec![q(0.), q(0.), q(0.), q(0.25), q(0.25), q(0.5), q(0.5), q(0.75), q(0.75), q(1.), q(1.), q(1.)],
        2,
    )
    .expect("valid circle knots")
}

/// Full circle as a clamped quadratic NURBS (9 control points, weights
/// alternating 1 and √2/2). The seam is at angle zero; θ = 0.5 is the point
/// opposite the seam.
pub fn circle<T: Scalar>(center: Vec2<T>, radius: T, clockwise: bool) -> NurbsCurve<T> {
    let (pts, w) = unit_circle_net::<T>(clockwise);
    let pts = pts.into_iter().map(|p| center + p * radius).collect();
    NurbsCurve::new(circle_knots(), pts, w).expect("consistent circle net")
}

/// Interior breakpoints that split each of the circle's four quarter spans into
/// `per_quarter` equal parameter spans.
pub fn circle_refinement_knots<T: Scalar>(per_quarter: usize) -> Vec<T> {
    let mut out = Vec::new();
    for q in 0..4 {
        for k in 1..per_quarter {
            out.push(T::lit(q as f64 * 0.25 + 0.25 * k as f64 / per_quarter as f64));
        }
    }
    out
}

/// Annulus between radii `r_inner` and `r_outer`: u runs around the circle
/// (clockwise when `clockwise`), v runs radially from the inner to the outer
/// wall with degree 2 and a linear parameterization.
pub fn annulus<T: Scalar>(
    center: Vec2<T>,
    r_inner: T,
    r_outer: T,
    clockwise: bool,
) -> Result<NurbsSurface<T>, NurbsError> {
    if !(r_inner > T::zero() && r_outer > r_inner) {
        return Err(NurbsError::Inconsistent("annulus radii must satisfy 0 < r_in < r_out".into()));
    }
    let (unit, w) = unit_circle_net::<T>(clockwise);
    let radii = [r_inner, (r_inner + r_outer) * T::lit(0.5), r_outer];
    let mut pts = Vec::with_capacity(27);
    let mut wts = Vec::with_capacity(27);
    for &r in &radii {
        for (p, &wi) in unit.iter().zip(&w) {
            pts.push(center + *p * r);
            wts.push(wi);
        }
    }
    let kv = KnotVector::new(vec![T::zero(), T::zero(), T::zero(), T::one(), T::one(), T::one()], 2)?;
    NurbsSurface::new(circle_knots(), kv, pts, wts)
}

/// Axis-aligned rectangle as a degree-`p` patch with a linear parameterization
/// and `nu x nv` uniform elements.
pub fn rectangle<T: Scalar>(
    degree: usize,
    lower: Vec2<T>,
    upper: Vec2<T>,
    nu: usize,
    nv: usize,
) -> Result<NurbsSurface<T>, NurbsError> {
    let p = degree.max(1);
    let mut k = vec![T::zero(); p + 1];
    k.extend(std::iter::repeat_n(T::one(), p + 1));
    let ku = KnotVector::new(k.clone(), p)?;
    let kv = KnotVector::new(k, p)?;
    let mut pts = Vec::new();
    for j in 0..=p {
        for i in 0..=p {
            let fu = T::from_usize_lossy(i) / T::from_usize_lossy(p);
            let fv = T::from_usize_lossy(j) / T::from_usize_lossy(p);
            pts.push(Vec2::new(
                lower.x + (upper.x - lower.x) * fu,
                lower.y + (upper.y - lower.y) * fv,
            ));
        }
    }
    let w = vec![T::one(); pts.len()];
    let base = NurbsSurface::new(ku, kv, pts, w)?;
    let split = |n: usize| -> Vec<T> {
        (1..n).map(|i| T::from_usize_lossy(i) / T::from_usize_lossy(n)).collect()
    };
    base.refine(&split(nu), &split(nv))
}
