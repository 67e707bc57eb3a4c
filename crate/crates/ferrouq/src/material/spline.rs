//! Piecewise-cubic Hermite curves and monotonicity-preserving interpolation.
//!
//! Measured B-H tables are interpolated with the classic Fritsch-Carlson
//! construction: slopes are initialized with three-point finite differences
//! and then projected into the monotonicity region, which yields a C^1
//! piecewise cubic whose derivative never changes sign between knots.

use crate::{Error, Result};

/// C^1 piecewise cubic in Hermite form: at knot `i` the curve takes value
/// `values[i]` with first derivative `slopes[i]`.
#[derive(Debug, Clone)]
pub struct CubicHermite {
    knots: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl CubicHermite {
    /// Builds a curve from raw Hermite data. Knots must be finite and
    /// strictly increasing; all three slices must share a length of at
    /// least two.
    pub fn new(knots: Vec<f64>, values: Vec<f64>, slopes: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 || knots.len() != values.len() || knots.len() != slopes.len() {
            return Err(Error::Data(format!(
                "hermite curve needs matching knot/value/slope slices of length >= 2, \
                 got {}/{}/{}",
                knots.len(),
                values.len(),
                slopes.len()
            )));
        }
        for v in knots.iter().chain(&values).chain(&slopes) {
            if !v.is_finite() {
                return Err(Error::Data("hermite curve data must be finite".into()));
            }
        }
        for i in 1..knots.len() {
            if knots[i] <= knots[i - 1] {
                return Err(Error::Data(format!(
                    "knots must be strictly increasing, violated at indices {} and {}",
                    i - 1,
                    i
                )));
            }
        }
        Ok(Self { knots, values, slopes })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0], *self.knots.last().unwrap())
    }

    /// Index of the span containing `s`; arguments outside the domain are
    /// clamped to the first or last span.
    fn span(&self, s: f64) -> usize {
        let n = self.knots.len();
        match self.knots.binary_search_by(|k| k.total_cmp(&s)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    /// Local coordinates of `s`: span index, span width and normalized
    /// position (clamped to the domain).
    fn local(&self, s: f64) -> (usize, f64, f64) {
        let i = self.span(s);
        let h = self.knots[i + 1] - self.knots[i];
        let t = ((s - self.knots[i]) / h).clamp(0.0, 1.0);
        (i, h, t)
    }

    /// Curve value; `s` is clamped to the domain.
    pub fn eval(&self, s: f64) -> f64 {
        let (i, h, t) = self.local(s);
        let u = 1.0 - t;
        let h00 = (1.0 + 2.0 * t) * u * u;
        let h10 = t * u * u;
        let h01 = t * t * (3.0 - 2.0 * t);
        let h11 = t * t * (t - 1.0);
        self.values[i] * h00
            + h * self.slopes[i] * h10
            + self.values[i + 1] * h01
            + h * self.slopes[i + 1] * h11
    }

    /// Quadratic coefficients (a, b, c) of the derivative on span `i`, in
    /// normalized coordinates: f'(s) = a t^2 + b t + c with t in [0, 1].
    fn deriv_quad(&self, i: usize) -> (f64, f64, f64) {
        let h = self.knots[i + 1] - self.knots[i];
        let delta = (self.values[i + 1] - self.values[i]) / h;
        let (d0, d1) = (self.slopes[i], self.slopes[i + 1]);
        let a = 3.0 * d0 + 3.0 * d1 - 6.0 * delta;
        let b = 6.0 * delta - 4.0 * d0 - 2.0 * d1;
        (a, b, d0)
    }

    /// First derivative; `s` is clamped to the domain.
    pub fn deriv(&self, s: f64) -> f64 {
        let (i, _, t) = self.local(s);
        let (a, b, c) = self.deriv_quad(i);
        (a * t + b) * t + c
    }

    /// Second derivative, one-sided at knots; `s` is clamped to the domain.
    pub fn second_deriv(&self, s: f64) -> f64 {
        let (i, h, t) = self.local(s);
        let (a, b, _) = self.deriv_quad(i);
        (2.0 * a * t + b) / h
    }

    /// Exact minimum and maximum of the first derivative over the domain.
    /// Candidates per span are the two endpoint slopes and the interior
    /// vertex of the derivative parabola when it falls inside the span.
    pub fn deriv_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.knots.len() - 1 {
            let (a, b, c) = self.deriv_quad(i);
            for q in [c, a + b + c] {
                lo = lo.min(q);
                hi = hi.max(q);
            }
            if a != 0.0 {
                let t = -b / (2.0 * a);
                if t > 0.0 && t < 1.0 {
                    let q = (a * t + b) * t + c;
                    lo = lo.min(q);
                    hi = hi.max(q);
                }
            }
        }
        (lo, hi)
    }
}

/// C^1 cubic interpolation with three-point slope estimates and no shape
/// constraint: interior slopes are the weighted parabolic estimates, the end
/// slopes one-sided secants. Used for quantities like sample variances that
/// need smoothness but not monotonicity.
pub fn three_point_hermite(knots: &[f64], values: &[f64]) -> Result<CubicHermite> {
    if knots.len() < 2 || knots.len() != values.len() {
        return Err(Error::Data(format!(
            "interpolation needs matching knot/value slices of length >= 2, got {}/{}",
            knots.len(),
            values.len()
        )));
    }
    let n = knots.len();
    let h: Vec<f64> = (0..n - 1).map(|i| knots[i + 1] - knots[i]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (values[i + 1] - values[i]) / h[i]).collect();
    let mut d = vec![0.0; n];
    d[0] = delta[0];
    d[n - 1] = delta[n - 2];
    for i in 1..n - 1 {
        d[i] = (h[i] * delta[i - 1] + h[i - 1] * delta[i]) / (h[i - 1] + h[i]);
    }
    CubicHermite::new(knots.to_vec(), values.to_vec(), d)
}

/// Fritsch-Carlson monotone interpolation of a nondecreasing table.
///
/// Slopes start from three-point finite differences (one-sided secants at
/// the ends), are zeroed on flat segments, and each span's slope pair is
/// projected onto the circle `alpha^2 + beta^2 <= 9` that is sufficient for
/// monotonicity of the Hermite cubic. Scaling a slope pair toward the origin
/// stays inside the region, so the sweep never invalidates earlier spans.
pub fn monotone_interpolate(knots: &[f64], values: &[f64]) -> Result<CubicHermite> {
    if knots.len() < 2 || knots.len() != values.len() {
        return Err(Error::Data(format!(
            "monotone interpolation needs matching knot/value slices of length >= 2, got {}/{}",
            knots.len(),
            values.len()
        )));
    }
    for i in 1..values.len() {
        if !(values[i] >= values[i - 1]) {
            return Err(Error::Data(format!(
                "values must be nondecreasing, violated at indices {} and {} ({} > {})",
                i - 1,
                i,
                values[i - 1],
                values[i]
            )));
        }
    }

    let n = knots.len();
    let h: Vec<f64> = (0..n - 1).map(|i| knots[i + 1] - knots[i]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (values[i + 1] - values[i]) / h[i]).collect();

    let mut d = vec![0.0; n];
    d[0] = delta[0];
    d[n - 1] = delta[n - 2];
    for i in 1..n - 1 {
        d[i] = (h[i] * delta[i - 1] + h[i - 1] * delta[i]) / (h[i - 1] + h[i]);
    }

    for i in 0..n - 1 {
        if delta[i] == 0.0 {
            d[i] = 0.0;
            d[i + 1] = 0.0;
        }
    }
    for s in d.iter_mut() {
        *s = s.max(0.0);
    }

    for i in 0..n - 1 {
        if delta[i] > 0.0 {
            let alpha = d[i] / delta[i];
            let beta = d[i + 1] / delta[i];
            let r2 = alpha * alpha + beta * beta;
            if r2 > 9.0 {
                let tau = 3.0 / r2.sqrt();
                d[i] = tau * alpha * delta[i];
                d[i + 1] = tau * beta * delta[i];
            }
        }
    }

    CubicHermite::new(knots.to_vec(), values.to_vec(), d)
}
