use crate::Scalar;

/// Points `(s, r, w)` on the reference triangle `{s, r >= 0, s + r <= 1}`;
/// weights sum to the reference area 1/2.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule<T> {
    pub points: Vec<(T, T, T)>,
}

// Symmetric degree-8 rule: (weight normalised to unit area, barycentric orbit).
const D8_CENTROID: f64 = 0.144_315_607_677_787;
const D8_ORBIT3: [(f64, f64, f64); 3] = [
    (0.095_091_634_267_285, 0.081_414_823_414_554, 0.459_292_588_292_723),
    (0.103_217_370_534_718, 0.658_861_384_496_480, 0.170_569_307_751_760),
    (0.032_458_497_623_198, 0.898_905_543_365_938, 0.050_547_228_317_031),
];
const D8_ORBIT6: (f64, [f64; 3]) =
    (0.027_230_314_174_435, [0.008_394_777_409_958, 0.263_112_829_634_638, 0.728_492_392_955_404]);

impl<T: Scalar> QuadratureRule<T> {
    /// 16-point rule exact for polynomials of degree 8.
    pub fn degree8() -> Self {
        let mut pts: Vec<(f64, f64, f64)> = vec![(1.0 / 3.0, 1.0 / 3.0, D8_CENTROID)];
        for &(w, a, b) in &D8_ORBIT3 {
            pts.push((a, b, w));
            pts.push((b, a, w));
            pts.push((b, b, w));
        }
        let (w, [a, b, c]) = D8_ORBIT6;
        for (x, y) in [(a, b), (b, a), (a, c), (c, a), (b, c), (c, b)] {
            pts.push((x, y, w));
        }
        Self::from_unit_weights(&pts)
    }

    /// Collapsed Gauss product rule: `s = ρ(1 - t)`, `r = ρ t` with Gauss–Legendre
    /// points in `ρ` and `t` on `[0, 1]` and weight `w_ρ w_t ρ`. Along rays from
    /// the `s + r = 0` corner the TRT Jacobian is constant, so integrands of the
    /// curved map are polynomial in `ρ` and smooth in `t`.
    pub fn collapsed_gauss(n_rho: usize, n_t: usize) -> Self {
        let gr = gauss_legendre::<f64>(n_rho);
        let gt = gauss_legendre::<f64>(n_t);
        let mut points = Vec::with_capacity(n_rho * n_t);
        for &(xr, wr) in &gr {
            let rho = 0.5 * (1.0 + xr);
            for &(xt, wt) in &gt {
                let t = 0.5 * (1.0 + xt);
                points.push((
                    T::lit(rho * (1.0 - t)),
                    T::lit(rho * t),
                    T::lit(0.25 * wr * wt * rho),
                ));
            }
        }
        Self { points }
    }

    /// Default rule for elements with a curved edge (16 points).
    pub fn curved_default() -> Self {
        Self::collapsed_gauss(4, 4)
    }

    /// 3-point interior rule exact for degree 2.
    pub fn degree2() -> Self {
        let (a, b) = (1.0 / 6.0, 2.0 / 3.0);
        let w = 1.0 / 3.0;
        Self::from_unit_weights(&[(a, a, w), (b, a, w), (a, b, w)])
    }

    fn from_unit_weights(pts: &[(f64, f64, f64)]) -> Self {
        let total: f64 = pts.iter().map(|p| p.2).sum();
        Self {
            points: pts
                .iter()
                .map(|&(s, r, w)| (T::lit(s), T::lit(r), T::lit(0.5 * w / total)))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre<T: Scalar>(n: usize) -> Vec<(T, T)> {
    assert!(n >= 1, "at least one Gauss point");
    let mut out = vec![(0.0f64, 0.0f64); n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out[i] = (-x, w);
        out[n - 1 - i] = (x, w);
    }
    if n % 2 == 1 {
        out[n / 2].0 = 0.0;
    }
    out.into_iter().map(|(x, w)| (T::lit(x), T::lit(w))).collect()
}
