//! Clamped knot vectors and Cox–de Boor basis evaluation.

use crate::nurbs::NurbsError;
use crate::Scalar;

/// Non-decreasing, clamped knot vector of a given degree.
#[derive(Clone, Debug, PartialEq)]
pub struct KnotVector<T> {
    values: Vec<T>,
    degree: usize,
}

impl<T: Scalar> KnotVector<T> {
    pub fn new(values: Vec<T>, degree: usize) -> Result<Self, NurbsError> {
        let p = degree;
        if values.len() < 2 * (p + 1) {
            return Err(NurbsError::InvalidKnots(format!(
                "{} knots is fewer than 2(p+1) = {}",
                values.len(),
                2 * (p + 1)
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(NurbsError::InvalidKnots("non-finite knot".into()));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(NurbsError::InvalidKnots("knots must be non-decreasing".into()));
        }
        let first = values[0];
        let last = values[values.len() - 1];
        if !(first < last) {
            return Err(NurbsError::InvalidKnots("empty parameter range".into()));
        }
        let lead = values.iter().take_while(|&&v| v == first).count();
        let trail = values.iter().rev().take_while(|&&v| v == last).count();
        if lead != p + 1 || trail != p + 1 {
            return Err(NurbsError::InvalidKnots(format!(
                "end knots must be repeated exactly p+1 = {} times (found {lead} and {trail})",
                p + 1
            )));
        }
        // interior multiplicity above p would disconnect the curve
        let mut i = p + 1;
        let end = values.len() - p - 1;
        while i < end {
            let m = values[i..end].iter().take_while(|&&v| v == values[i]).count();
            if m > p {
                return Err(NurbsError::InvalidKnots(format!(
                    "interior knot {} has multiplicity {m} > degree {p}",
                    values[i]
                )));
            }
            i += m;
        }
        Ok(Self { values, degree })
    }

    /// Uniform clamped knot vector with `spans` elements on `[a, b]`.
    pub fn uniform(degree: usize, spans: usize, a: T, b: T) -> Result<Self, NurbsError> {
        let mut v = vec![a; degree + 1];
        for i in 1..spans {
            v.push(a + (b - a) * T::from_usize_lossy(i) / T::from_usize_lossy(spans));
        }
        v.extend(std::iter::repeat_n(b, degree + 1));
        Self::new(v, degree)
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.degree
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of basis functions `n = len - p - 1`.
    #[inline]
    pub fn num_basis(&self) -> usize {
        self.values.len() - self.degree - 1
    }

    #[inline]
    pub fn domain(&self) -> (T, T) {
        (self.values[0], self.values[self.values.len() - 1])
    }

    /// Distinct breakpoints, first to last.
    pub fn breakpoints(&self) -> Vec<T> {
        let mut out: Vec<T> = Vec::new();
        for &v in &self.values {
            if out.last() != Some(&v) {
                out.push(v);
            }
        }
        out
    }

    /// Non-degenerate knot spans as parameter intervals.
    pub fn spans(&self) -> Vec<(T, T)> {
        self.breakpoints().windows(2).map(|w| (w[0], w[1])).collect()
    }

    pub fn num_spans(&self) -> usize {
        self.breakpoints().len() - 1
    }

    pub fn multiplicity(&self, theta: T) -> usize {
        self.values.iter().filter(|&&v| v == theta).count()
    }

    /// Breakpoints strictly inside `(a, b)` (either order of `a`, `b`).
    pub fn breakpoints_between(&self, a: T, b: T) -> Vec<T> {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        self.breakpoints().into_iter().filter(|&k| k > lo && k < hi).collect()
    }

    /// Index `i` with `knots[i] <= theta < knots[i+1]`; at the last knot, the
    /// last non-degenerate span.
    pub fn find_span(&self, theta: T) -> Result<usize, NurbsError> {
        let (a, b) = self.domain();
        if !(theta >= a && theta <= b) {
            return Err(NurbsError::Domain {
                value: theta.to_f64().unwrap_or(f64::NAN),
                lo: a.to_f64().unwrap_or(f64::NAN),
                hi: b.to_f64().unwrap_or(f64::NAN),
            });
        }
        let n = self.num_basis();
        let p = self.degree;
        let k = &self.values;
        if theta >= k[n] {
            return Ok(n - 1);
        }
        if theta <= k[p] {
            return Ok(p);
        }
        let (mut lo, mut hi) = (p, n);
        let mut mid = (lo + hi) / 2;
        while theta < k[mid] || theta >= k[mid + 1] {
            if theta < k[mid] {
                hi = mid;
            } else {
                lo = mid;
            }
            mid = (lo + hi) / 2;
        }
        Ok(mid)
    }

    /// The `p+1` nonzero B-spline basis values on `span`.
    pub fn basis_funs(&self, span: usize, theta: T) -> Vec<T> {
        let p = self.degree;
        let k = &self.values;
        let mut n = vec![T::zero(); p + 1];
        let mut left = vec![T::zero(); p + 1];
        let mut right = vec![T::zero(); p + 1];
        n[0] = T::one();
        for j in 1..=p {
            left[j] = theta - k[span + 1 - j];
            right[j] = k[span + j] - theta;
            let mut saved = T::zero();
            for r in 0..j {
                let tmp = n[r] / (right[r + 1] + left[j - r]);
                n[r] = saved + right[r + 1] * tmp;
                saved = left[j - r] * tmp;
            }
            n[j] = saved;
        }
        n
    }

    /// Basis values and derivatives up to `order`: `ders[k][j]` is the k-th
    /// derivative of basis function `span - p + j`.
    pub fn ders_basis_funs(&self, span: usize, theta: T, order: usize) -> Vec<Vec<T>> {
        let p = self.degree;
        let k = &self.values;
        let mut ndu = vec![vec![T::zero(); p + 1]; p + 1];
        let mut left = vec![T::zero(); p + 1];
        let mut right = vec![T::zero(); p + 1];
        ndu[0][0] = T::one();
        for j in 1..=p {
            left[j] = theta - k[span + 1 - j];
            right[j] = k[span + j] - theta;
            let mut saved = T::zero();
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let tmp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * tmp;
                saved = left[j - r] * tmp;
            }
            ndu[j][j] = saved;
        }

        let mut ders = vec![vec![T::zero(); p + 1]; order + 1];
        for j in 0..=p {
            ders[0][j] = ndu[j][p];
        }
        let top = order.min(p);
        let mut a = vec![vec![T::zero(); p + 1]; 2];
        for r in 0..=p {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = T::one();
            for kk in 1..=top {
                let mut d = T::zero();
                let rk = r as isize - kk as isize;
                let pk = p - kk;
                if rk >= 0 {
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                    d = a[s2][0] * ndu[rk as usize][pk];
                }
                let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2 = if (r as isize - 1) <= pk as isize { kk - 1 } else { p - r };
                for j in j1..=j2 {
                    let idx = (rk + j as isize) as usize;
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                    d += a[s2][j] * ndu[idx][pk];
                }
                if r <= pk {
                    a[s2][kk] = -a[s1][kk - 1] / ndu[pk + 1][r];
                    d += a[s2][kk] * ndu[r][pk];
                }
                ders[kk][r] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut fac = T::from_usize_lossy(p);
        for (kk, row) in ders.iter_mut().enumerate().skip(1).take(top) {
            for v in row.iter_mut() {
                *v *= fac;
            }
            fac *= T::from_usize_lossy(p - kk);
        }
        ders
    }

    /// Knot vector with `theta` inserted once.
    pub(crate) fn with_inserted(&self, theta: T, span: usize) -> Vec<T> {
        let mut v = Vec::with_capacity(self.values.len() + 1);
        v.extend_from_slice(&self.values[..=span]);
        v.push(theta);
        v.extend_from_slice(&self.values[span + 1..]);
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kv() -> KnotVector<f64> {
        KnotVector::new(vec![0.0, 0.0, 0.0, 0.5, 1.0, 1.0, 1.0], 2).unwrap()
    }

    /// Oracle: first index with knots[i] <= t < knots[i+1] by linear scan.
    fn scan_span(k: &[f64], t: f64) -> usize {
        (0..k.len() - 1).rev().find(|&i| k[i] <= t && t < k[i + 1]).unwrap()
    }

    #[test]
    fn span_matches_linear_scan() {
        let k = kv();
        assert_eq!(k.find_span(0.25).unwrap(), scan_span(k.values(), 0.25));
        assert_eq!(k.find_span(0.25).unwrap(), 2);
        assert_eq!(k.find_span(0.75).unwrap(), 3);
    }

    #[test]
    fn span_at_ends() {
        let k = kv();
        assert_eq!(k.find_span(0.0).unwrap(), 2);
        // last non-degenerate span, not past the end
        assert_eq!(k.find_span(1.0).unwrap(), 3);
    }

    #[test]
    fn span_outside_is_domain_error() {
        assert!(matches!(kv().find_span(1.5), Err(NurbsError::Domain { .. })));
        assert!(matches!(kv().find_span(-1e-9), Err(NurbsError::Domain { .. })));
    }

    #[test]
    fn rejects_bad_vectors() {
        assert!(KnotVector::new(vec![0.0, 0.0, 1.0, 1.0], 2).is_err());
        assert!(KnotVector::new(vec![0.0, 0.0, 0.0, 0.7, 0.5, 1.0, 1.0, 1.0], 2).is_err());
        assert!(KnotVector::new(vec![0.0, 0.0, 0.5, 1.0, 1.0, 1.0], 2).is_err());
        assert!(
            KnotVector::new(vec![0.0, 0.0, 0.0, 0.5, 0.5, 0.5, 1.0, 1.0, 1.0], 2).is_err()
        );
    }

    #[test]
    fn repeated_interior_knot_span() {
        let k = KnotVector::new(vec![0.0, 0.0, 0.0, 0.5, 0.5, 1.0, 1.0, 1.0], 2).unwrap();
        assert_eq!(k.find_span(0.5).unwrap(), 4);
        assert_eq!(k.find_span(0.4999).unwrap(), 2);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let k = KnotVector::new(vec![0.0, 0.0, 0.0, 0.0, 0.3, 0.6, 1.0, 1.0, 1.0, 1.0], 3).unwrap();
        let t = 0.41;
        let span = k.find_span(t).unwrap();
        let d: Vec<Vec<f64>> = k.ders_basis_funs(span, t, 2);
        let h = 1e-6;
        let np: Vec<f64> = k.basis_funs(span, t + h);
        let nm: Vec<f64> = k.basis_funs(span, t - h);
        let n0: Vec<f64> = k.basis_funs(span, t);
        for j in 0..4 {
            assert!((d[0][j] - n0[j]).abs() < 1e-15);
            let fd1 = (np[j] - nm[j]) / (2.0 * h);
            assert!((d[1][j] - fd1).abs() < 1e-6, "{} vs {}", d[1][j], fd1);
            let fd2 = (np[j] - 2.0 * n0[j] + nm[j]) / (h * h);
            assert!((d[2][j] - fd2).abs() < 1e-3, "{} vs {}", d[2][j], fd2);
        }
    }
}
