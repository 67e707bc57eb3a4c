//! Cubic B-spline space with C^1 continuity on an interval.
//!
//! The space uses uniform breakpoints with interior knots of multiplicity
//! two, giving exactly one continuous derivative across breakpoints and a
//! dimension of twice the element count plus two. On each element the four
//! overlapping basis functions are evaluated with the standard Cox-de Boor
//! triangle; first derivatives come from the degree-reduction formula.

use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

const DEGREE: usize = 3;

#[derive(Debug, Clone)]
pub struct BSplineSpace {
    a: f64,
    b: f64,
    knots: Vec<f64>,
    breaks: Vec<f64>,
}

impl BSplineSpace {
    /// Cubic space with C^1 interior continuity. `dim` must be even and at
    /// least 4; the element count is (dim - 2) / 2.
    pub fn cubic_c1(a: f64, b: f64, dim: usize) -> Result<Self> {
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(Error::Config(format!(
                "invalid spline interval [{a}, {b}]"
            )));
        }
        if dim < 4 || dim % 2 != 0 {
            return Err(Error::Config(format!(
                "spline dimension must be even and at least 4, got {dim}"
            )));
        }
        let n_el = (dim - 2) / 2;
        let breaks: Vec<f64> =
            (0..=n_el).map(|k| a + (b - a) * k as f64 / n_el as f64).collect();
        let mut knots = vec![a; DEGREE + 1];
        for &t in &breaks[1..n_el] {
            knots.push(t);
            knots.push(t);
        }
        knots.extend(std::iter::repeat(b).take(DEGREE + 1));
        debug_assert_eq!(knots.len(), dim + DEGREE + 1);
        Ok(BSplineSpace { a, b, knots, breaks })
    }

    pub fn dim(&self) -> usize {
        self.knots.len() - DEGREE - 1
    }

    pub fn elements(&self) -> usize {
        self.breaks.len() - 1
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breaks
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    /// Element containing `s` (clamped to the interval); breakpoints belong
    /// to the element on their right.
    pub fn element_of(&self, s: f64) -> usize {
        let n_el = self.elements();
        let t = (s - self.a) / (self.b - self.a) * n_el as f64;
        (t.floor() as isize).clamp(0, n_el as isize - 1) as usize
    }

    /// Knot-vector span index of an element; the four basis functions
    /// supported there start at global index `2 * element`.
    fn element_span(&self, element: usize) -> usize {
        DEGREE + 2 * element
    }

    /// Values and first derivatives of the four basis functions supported
    /// on the element containing `s`, together with the first global index.
    pub fn basis_at(&self, s: f64) -> (usize, [f64; 4], [f64; 4]) {
        let element = self.element_of(s);
        let span = self.element_span(element);
        let t = &self.knots;
        let mut ndu = [[0.0f64; DEGREE + 1]; DEGREE + 1];
        ndu[0][0] = 1.0;
        let mut left = [0.0f64; DEGREE + 1];
        let mut right = [0.0f64; DEGREE + 1];
        for j in 1..=DEGREE {
            left[j] = s - t[span + 1 - j];
            right[j] = t[span + j] - s;
            let mut saved = 0.0;
            for r in 0..j {
                let denom = right[r + 1] + left[j - r];
                ndu[j][r] = denom;
                let temp = ndu[r][j - 1] / denom;
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }
        let values = [ndu[0][DEGREE], ndu[1][DEGREE], ndu[2][DEGREE], ndu[3][DEGREE]];
        let mut derivs = [0.0f64; 4];
        for r in 0..=DEGREE {
            let mut d = 0.0;
            if r >= 1 {
                d += ndu[r - 1][DEGREE - 1] / ndu[DEGREE][r - 1];
            }
            if r <= DEGREE - 1 {
                d -= ndu[r][DEGREE - 1] / ndu[DEGREE][r];
            }
            derivs[r] = DEGREE as f64 * d;
        }
        (2 * element, values, derivs)
    }

    /// Value of the spline with the given coefficient vector.
    pub fn eval(&self, coeffs: &[f64], s: f64) -> f64 {
        self.eval_with_deriv(coeffs, s).0
    }

    /// Value and first derivative of the spline with the given coefficients.
    pub fn eval_with_deriv(&self, coeffs: &[f64], s: f64) -> (f64, f64) {
        assert_eq!(coeffs.len(), self.dim());
        let (first, values, derivs) = self.basis_at(s);
        let mut v = 0.0;
        let mut d = 0.0;
        for r in 0..=DEGREE {
            v += coeffs[first + r] * values[r];
            d += coeffs[first + r] * derivs[r];
        }
        (v, d)
    }

    /// Greville abscissae; a spline with these as coefficients is the
    /// identity.
    pub fn greville(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| (self.knots[i + 1] + self.knots[i + 2] + self.knots[i + 3]) / 3.0)
            .collect()
    }

    fn gauss_on(&self, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        let (x, w) = crate::grids::gauss_legendre(4);
        let c = 0.5 * (lo + hi);
        let r = 0.5 * (hi - lo);
        x.iter().zip(&w).map(|(&xi, &wi)| (c + r * xi, r * wi)).collect()
    }

    /// Mass (Gram) matrix of the basis, assembled with 4-point Gauss per
    /// element (exact for the degree-6 integrand).
    pub fn gram(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut g = DMatrix::zeros(n, n);
        for e in 0..self.elements() {
            let (lo, hi) = (self.breaks[e], self.breaks[e + 1]);
            for (s, w) in self.gauss_on(lo, hi) {
                let (first, values, _) = self.basis_at(s);
                for r in 0..=DEGREE {
                    for c in 0..=DEGREE {
                        g[(first + r, first + c)] += w * values[r] * values[c];
                    }
                }
            }
        }
        g
    }

    /// Galerkin matrix of a symmetric kernel: entries of the double
    /// integral of B_i(s) k(s, t) B_j(t), with 4-point Gauss per element in
    /// each direction. The result is symmetrized; asymmetry beyond 1e-13 of
    /// the matrix scale indicates a non-symmetric kernel and is an error.
    pub fn kernel_matrix(&self, kernel: impl Fn(f64, f64) -> f64) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let mut k: DMatrix<f64> = DMatrix::zeros(n, n);
        let points: Vec<Vec<(f64, f64)>> = (0..self.elements())
            .map(|e| self.gauss_on(self.breaks[e], self.breaks[e + 1]))
            .collect();
        let basis: Vec<Vec<(usize, [f64; 4])>> = points
            .iter()
            .map(|pts| {
                pts.iter()
                    .map(|&(s, _)| {
                        let (first, values, _) = self.basis_at(s);
                        (first, values)
                    })
                    .collect()
            })
            .collect();
        for es in 0..self.elements() {
            for et in 0..self.elements() {
                for (ps, &(s, ws)) in points[es].iter().enumerate() {
                    let (fs, vs) = &basis[es][ps];
                    for (pt, &(t, wt)) in points[et].iter().enumerate() {
                        let (ft, vt) = &basis[et][pt];
                        let kv = kernel(s, t) * ws * wt;
                        for r in 0..=DEGREE {
                            for c in 0..=DEGREE {
                                k[(fs + r, ft + c)] += kv * vs[r] * vt[c];
                            }
                        }
                    }
                }
            }
        }
        let scale = k.amax().max(f64::MIN_POSITIVE);
        let mut asym = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                asym = asym.max((k[(i, j)] - k[(j, i)]).abs());
                let avg = 0.5 * (k[(i, j)] + k[(j, i)]);
                k[(i, j)] = avg;
                k[(j, i)] = avg;
            }
        }
        if asym > 1e-13 * scale {
            return Err(Error::Data(format!(
                "kernel matrix asymmetry {asym:.3e} exceeds 1e-13 of scale {scale:.3e}; kernel is not symmetric"
            )));
        }
        Ok(k)
    }

    /// Moments of a function against the basis: the integrals of B_i f.
    /// `extra_breaks` lists points where f loses smoothness (data
    /// locations of an interpolated curve); integration subdivides at the
    /// union of element boundaries and these points, so piecewise-cubic f
    /// is integrated exactly.
    pub fn moment_rhs(&self, f: impl Fn(f64) -> f64, extra_breaks: &[f64]) -> DVector<f64> {
        let mut cuts: Vec<f64> = self
            .breaks
            .iter()
            .copied()
            .chain(extra_breaks.iter().copied().filter(|&t| t > self.a && t < self.b))
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * (self.b - self.a));
        let mut rhs = DVector::zeros(self.dim());
        for pair in cuts.windows(2) {
            for (s, w) in self.gauss_on(pair[0], pair[1]) {
                let (first, values, _) = self.basis_at(s);
                let fv = w * f(s);
                for r in 0..=DEGREE {
                    rhs[first + r] += fv * values[r];
                }
            }
        }
        rhs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dimension_and_knot_layout() {
        let sp = BSplineSpace::cubic_c1(1.0, 1.55, 60).unwrap();
        assert_eq!(sp.dim(), 60);
        assert_eq!(sp.elements(), 29);
        assert_eq!(sp.breakpoints().len(), 30);
        let sp4 = BSplineSpace::cubic_c1(0.0, 1.0, 4).unwrap();
        assert_eq!(sp4.elements(), 1);
        assert!(BSplineSpace::cubic_c1(0.0, 1.0, 5).is_err());
        assert!(BSplineSpace::cubic_c1(0.0, 1.0, 2).is_err());
        assert!(BSplineSpace::cubic_c1(1.0, 1.0, 8).is_err());
    }

    #[test]
    fn partition_of_unity() {
        let sp = BSplineSpace::cubic_c1(1.0, 1.55, 60).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let s = rng.gen_range(1.0..1.55);
            let (_, values, derivs) = sp.basis_at(s);
            let sum: f64 = values.iter().sum();
            let dsum: f64 = derivs.iter().sum();
            assert_relative_eq!(sum, 1.0, epsilon = 1e-13);
            assert!(dsum.abs() <= 1e-10, "derivative sum {dsum} at s={s}");
        }
        // Endpoints and a breakpoint.
        for s in [1.0, 1.55, sp.breakpoints()[7]] {
            let (_, values, _) = sp.basis_at(s);
            assert_relative_eq!(values.iter().sum::<f64>(), 1.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn greville_coefficients_reproduce_identity() {
        let sp = BSplineSpace::cubic_c1(1.0, 1.55, 20).unwrap();
        let coeffs = sp.greville();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let s = rng.gen_range(1.0..1.55);
            let (v, d) = sp.eval_with_deriv(&coeffs, s);
            assert_relative_eq!(v, s, epsilon = 1e-12);
            assert_relative_eq!(d, 1.0, epsilon = 1e-10);
        }
        assert_relative_eq!(sp.eval(&coeffs, 1.55), 1.55, epsilon = 1e-12);
    }

    #[test]
    fn continuity_across_breakpoints() {
        let sp = BSplineSpace::cubic_c1(0.0, 1.0, 12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let coeffs: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for &t in &sp.breakpoints()[1..sp.elements()] {
            let eps = 1e-9;
            let (vl, dl) = sp.eval_with_deriv(&coeffs, t - eps);
            let (vr, dr) = sp.eval_with_deriv(&coeffs, t + eps);
            assert!((vl - vr).abs() <= 1e-7, "value jump at {t}");
            assert!((dl - dr).abs() <= 1e-5, "derivative jump at {t}");
        }
    }

    #[test]
    fn gram_matrix_is_banded_and_sums_to_length() {
        let sp = BSplineSpace::cubic_c1(1.0, 1.55, 30).unwrap();
        let g = sp.gram();
        for i in 0..30 {
            for j in 0..30 {
                if (i as isize - j as isize).abs() > 3 {
                    assert_eq!(g[(i, j)], 0.0, "band violation at ({i},{j})");
                }
                assert_relative_eq!(g[(i, j)], g[(j, i)], epsilon = 1e-15);
            }
        }
        // Sum of all entries is the integral of (sum B_i)^2 = |b - a|.
        assert_relative_eq!(g.sum(), 0.55, epsilon = 1e-12);
    }

    #[test]
    fn projection_reproduces_constants_and_identity() {
        let sp = BSplineSpace::cubic_c1(1.0, 1.55, 16).unwrap();
        let g = sp.gram();
        let chol = nalgebra::Cholesky::new(g).unwrap();
        let c = chol.solve(&sp.moment_rhs(|_| 2.5, &[]));
        for v in c.iter() {
            assert_relative_eq!(*v, 2.5, epsilon = 1e-10);
        }
        let ident = chol.solve(&sp.moment_rhs(|s| s, &[]));
        let grev = sp.greville();
        for (a, b) in ident.iter().zip(&grev) {
            assert_relative_eq!(*a, *b, epsilon = 1e-10);
        }
    }

    #[test]
    fn moment_rhs_honors_extra_breakpoints() {
        // A piecewise-linear kink off the element grid: with the extra
        // break the total moment equals the exact integral of f.
        let sp = BSplineSpace::cubic_c1(0.0, 1.0, 6).unwrap();
        let kink = 0.37;
        let f = |s: f64| (s - kink).abs();
        let rhs = sp.moment_rhs(f, &[kink]);
        let exact = kink * kink / 2.0 + (1.0 - kink) * (1.0 - kink) / 2.0;
        assert_relative_eq!(rhs.sum(), exact, epsilon = 1e-13);
    }

    #[test]
    fn element_lookup_at_breakpoints() {
        let sp = BSplineSpace::cubic_c1(1.0, 1.55, 60).unwrap();
        assert_eq!(sp.element_of(1.0), 0);
        assert_eq!(sp.element_of(1.55), 28);
        let t = sp.breakpoints()[5];
        assert_eq!(sp.element_of(t), 5);
        assert_eq!(sp.element_of(0.0), 0);
        assert_eq!(sp.element_of(9.0), 28);
    }
}
