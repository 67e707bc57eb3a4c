//! Monotone material laws and their differential reluctivity tensors.
//!
//! A material law is a monotone curve `f: [0, inf) -> [0, inf)` with
//! `f(0) = 0`, interpreted as the B-H relation `H = f(|B|)`. The scalar
//! reluctivity is `nu(s) = f(s)/s`, continued at zero by `nu(0) = f'(0+)`.
//! Three families are supported:
//!
//! * spline laws interpolating measured tables (C^1, from
//!   [`monotone_interpolate`] or a Karhunen-Loeve sample),
//! * the rational saturation model `nu(s) = d + c s^{2b} / (a^b + s^{2b})`,
//! * power laws `nu(s) = s^{p-2}` (the p-Laplace nonlinearity).
//!
//! The vector flux is `h(r) = nu(|r|) r`. Newton linearization uses its
//! first derivative, the differential reluctivity `nu_d(r)`, and stochastic
//! regularity estimates use the higher multilinear derivatives, provided
//! here up to third order.

pub mod spline;
pub mod table;

pub use spline::{monotone_interpolate, CubicHermite};
pub use table::MeasuredBhTable;

use crate::{Error, Result};

/// Gradient magnitudes below this are clamped when evaluating power laws,
/// which keeps `nu` finite for exponents p < 2.
pub const GRAD_CLAMP: f64 = 1e-12;

/// Lower and upper bounds on the curve slope: `alpha <= f'(s) <= beta` over
/// the law's validity range. `alpha > 0` is the strong monotonicity constant
/// of the flux; it degenerates to zero for tables with flat segments and for
/// power laws with p > 2.
#[derive(Debug, Clone, Copy)]
pub struct DerivativeBounds {
    pub alpha: f64,
    pub beta: f64,
}

/// Spline law: a monotone C^1 piecewise cubic covering `[0, s_last]`
/// (measured range plus the prolongation span down to the origin), continued
/// linearly beyond the last knot.
#[derive(Debug, Clone)]
pub struct SplineLaw {
    curve: CubicHermite,
    sat_slope: f64,
}

impl SplineLaw {
    pub fn curve(&self) -> &CubicHermite {
        &self.curve
    }
}

/// Rational saturation model `nu(s) = d + c s^{2b} / (a^b + s^{2b})`.
#[derive(Debug, Clone, Copy)]
pub struct RationalLaw {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

/// Power law `nu(s) = s^{p-2}`, the p-Laplace nonlinearity.
#[derive(Debug, Clone, Copy)]
pub struct PowerLaw {
    pub p: f64,
}

#[derive(Debug, Clone)]
pub enum LawKind {
    Spline(SplineLaw),
    Rational(RationalLaw),
    Power(PowerLaw),
}

/// A monotone material law together with its slope bounds.
#[derive(Debug, Clone)]
pub struct MaterialLaw {
    kind: LawKind,
    bounds: DerivativeBounds,
}

impl RationalLaw {
    /// Saturation fraction `w = s^{2b} / (a^b + s^{2b})`, evaluated in the
    /// overflow-safe form `1 / (1 + (a/s^2)^b)`; `w(0) = 0`, `w(inf) = 1`.
    fn w(&self, s: f64) -> f64 {
        if s == 0.0 {
            return 0.0;
        }
        1.0 / (1.0 + (self.a / (s * s)).powf(self.b))
    }

    fn nu(&self, s: f64) -> f64 {
        self.d + self.c * self.w(s)
    }

    fn nu1(&self, s: f64) -> f64 {
        if s == 0.0 {
            return 0.0;
        }
        let w = self.w(s);
        2.0 * self.b * self.c * w * (1.0 - w) / s
    }

    fn nu2(&self, s: f64) -> f64 {
        if s == 0.0 {
            return 0.0;
        }
        let w = self.w(s);
        let m = 2.0 * self.b * (1.0 - 2.0 * w);
        2.0 * self.b * self.c * w * (1.0 - w) * (m - 1.0) / (s * s)
    }

    fn nu3(&self, s: f64) -> f64 {
        if s == 0.0 {
            return 0.0;
        }
        let w = self.w(s);
        let g = w * (1.0 - w);
        let m = 2.0 * self.b * (1.0 - 2.0 * w);
        let bracket = (m - 1.0) * (m - 2.0) - 8.0 * self.b * self.b * g;
        2.0 * self.b * self.c * g * bracket / (s * s * s)
    }
}

impl PowerLaw {
    fn nu(&self, s: f64) -> f64 {
        s.max(GRAD_CLAMP).powf(self.p - 2.0)
    }

    fn nu1(&self, s: f64) -> f64 {
        if s < GRAD_CLAMP {
            return 0.0;
        }
        (self.p - 2.0) * s.powf(self.p - 3.0)
    }

    fn nu2(&self, s: f64) -> f64 {
        if s < GRAD_CLAMP {
            return 0.0;
        }
        (self.p - 2.0) * (self.p - 3.0) * s.powf(self.p - 4.0)
    }

    fn nu3(&self, s: f64) -> f64 {
        if s < GRAD_CLAMP {
            return 0.0;
        }
        (self.p - 2.0) * (self.p - 3.0) * (self.p - 4.0) * s.powf(self.p - 5.0)
    }
}

impl MaterialLaw {
    /// Monotone spline law interpolating a measured table; the table is
    /// prolonged to the origin so that `f(0) = 0`.
    pub fn from_monotone_table(knots: &[f64], values: &[f64]) -> Result<Self> {
        Self::from_hermite(monotone_interpolate(knots, values)?)
    }

    /// Wraps a monotone C^1 curve as a material law. A prolongation span is
    /// prepended when the curve starts right of the origin: a Hermite cubic
    /// from (0, 0) that meets the curve's first knot with matching value and
    /// slope, its origin slope chosen inside the monotonicity region.
    pub fn from_hermite(curve: CubicHermite) -> Result<Self> {
        let (lo, hi) = curve.deriv_range();
        if lo < -1e-10 * hi.max(1.0) {
            return Err(Error::Data(format!(
                "curve is not monotone: minimal slope {lo:.3e}"
            )));
        }
        let curve = if curve.knots()[0] > 0.0 {
            prolong_to_origin(&curve)?
        } else {
            if curve.values()[0] != 0.0 {
                return Err(Error::Data(format!(
                    "material law requires f(0) = 0, table starts at f(0) = {}",
                    curve.values()[0]
                )));
            }
            curve
        };
        let (lo, hi) = curve.deriv_range();
        let sat_slope = curve.slopes().last().copied().unwrap();
        Ok(Self {
            kind: LawKind::Spline(SplineLaw { curve, sat_slope }),
            bounds: DerivativeBounds { alpha: lo.max(0.0), beta: hi },
        })
    }

    /// Rational saturation model with `nu(0) = d` and `nu(inf) = d + c`.
    /// The slope bounds are analytic: `f' >= d` and
    /// `f' <= d + c + b c / 2` (the maximum of `s nu'(s)` is `b c / 2`).
    pub fn rational(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        if !(a > 0.0 && b >= 1.0 && c >= 0.0 && d > 0.0) {
            return Err(Error::Config(format!(
                "rational law requires a > 0, b >= 1, c >= 0, d > 0; got \
                 a={a}, b={b}, c={c}, d={d}"
            )));
        }
        Ok(Self {
            kind: LawKind::Rational(RationalLaw { a, b, c, d }),
            bounds: DerivativeBounds { alpha: d, beta: d + c + b * c / 2.0 },
        })
    }

    /// Power law `nu(s) = s^{p-2}`. The slope `f'(s) = (p-1) s^{p-2}` is
    /// unbounded on `[0, inf)`, so the stored bounds cover the clamped
    /// reference range `[GRAD_CLAMP, 10]`.
    pub fn power(p: f64) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::Config(format!("power law requires p > 1, got {p}")));
        }
        let fp = |s: f64| (p - 1.0) * s.powf(p - 2.0);
        let (a, b) = (fp(GRAD_CLAMP), fp(10.0));
        Ok(Self {
            kind: LawKind::Power(PowerLaw { p }),
            bounds: DerivativeBounds { alpha: a.min(b), beta: a.max(b) },
        })
    }

    pub fn kind(&self) -> &LawKind {
        &self.kind
    }

    pub fn bounds(&self) -> DerivativeBounds {
        self.bounds
    }

    /// Curve value `f(s)` for `s >= 0`.
    pub fn f(&self, s: f64) -> f64 {
        match &self.kind {
            LawKind::Spline(sp) => {
                let (_, s_last) = sp.curve.domain();
                if s <= s_last {
                    sp.curve.eval(s)
                } else {
                    let b = self.bounds;
                    let slope = sp.sat_slope.clamp(b.alpha, b.beta);
                    sp.curve.eval(s_last) + slope * (s - s_last)
                }
            }
            LawKind::Rational(r) => r.nu(s) * s,
            LawKind::Power(p) => p.nu(s) * s,
        }
    }

    /// Scalar reluctivity `nu(s) = f(s)/s`, with `nu(0) = f'(0+)`.
    pub fn nu(&self, s: f64) -> f64 {
        match &self.kind {
            LawKind::Spline(sp) => {
                if s == 0.0 {
                    sp.curve.slopes()[0]
                } else {
                    self.f(s) / s
                }
            }
            LawKind::Rational(r) => r.nu(s),
            LawKind::Power(p) => p.nu(s),
        }
    }

    /// First derivative of the reluctivity, `nu'(s)`; at the origin the
    /// l'Hopital limit `f''(0+)/2` is used.
    pub fn nu_deriv(&self, s: f64) -> f64 {
        match &self.kind {
            LawKind::Spline(sp) => {
                let (_, s_last) = sp.curve.domain();
                let tiny = 1e-12 * s_last;
                if s <= tiny {
                    return sp.curve.second_deriv(0.0) / 2.0;
                }
                let (fv, fd) = if s <= s_last {
                    (sp.curve.eval(s), sp.curve.deriv(s))
                } else {
                    let b = self.bounds;
                    let slope = sp.sat_slope.clamp(b.alpha, b.beta);
                    (sp.curve.eval(s_last) + slope * (s - s_last), slope)
                };
                (fd * s - fv) / (s * s)
            }
            LawKind::Rational(r) => r.nu1(s),
            LawKind::Power(p) => p.nu1(s),
        }
    }

    /// Second and third reluctivity derivatives; undefined for spline laws,
    /// which are C^1 only.
    fn nu_deriv23(&self, s: f64) -> Result<(f64, f64)> {
        match &self.kind {
            LawKind::Spline(_) => Err(Error::Capability(
                "spline laws are C^1; second and third flux derivatives are undefined".into(),
            )),
            LawKind::Rational(r) => Ok((r.nu2(s), r.nu3(s))),
            LawKind::Power(p) => Ok((p.nu2(s), p.nu3(s))),
        }
    }

    /// Curve slope `f'(s) = nu(s) + s nu'(s)`.
    pub fn f_prime(&self, s: f64) -> f64 {
        self.nu(s) + s * self.nu_deriv(s)
    }

    fn f2_vanishes_at_zero(&self) -> bool {
        match &self.kind {
            LawKind::Spline(_) => false,
            LawKind::Rational(r) => 2.0 * r.b - 2.0 > 0.0,
            LawKind::Power(p) => p.p > 3.0,
        }
    }

    fn f3_vanishes_at_zero(&self) -> bool {
        match &self.kind {
            LawKind::Spline(_) => false,
            LawKind::Rational(r) => 2.0 * r.b - 3.0 > 0.0,
            LawKind::Power(p) => p.p > 4.0,
        }
    }

    /// Vector flux `h(r) = nu(|r|) r`.
    pub fn flux(&self, r: &[f64]) -> Vec<f64> {
        let nu = self.nu(norm(r));
        r.iter().map(|&x| nu * x).collect()
    }

    /// Differential reluctivity `nu_d(r) = nu(|r|) I + nu'(|r|)/|r| r r^T`,
    /// continued by `nu(0) I` at `r = 0`.
    pub fn diff_reluctivity(&self, r: &[f64]) -> Result<ReluctivityTensor> {
        let dim = check_dim(r)?;
        let s = norm(r);
        let mut m = [[0.0; 3]; 3];
        let nu = self.nu(s);
        for i in 0..dim {
            m[i][i] = nu;
        }
        if s > 0.0 {
            let scale = self.nu_deriv(s) / s;
            for i in 0..dim {
                for j in 0..dim {
                    m[i][j] += scale * r[i] * r[j];
                }
            }
        }
        Ok(ReluctivityTensor { dim, m })
    }

    /// k-th multilinear derivative of the flux, `(J_r^k h)(s_1, ..., s_k)`,
    /// with `k = dirs.len()` in 1..=3. At `r = 0` the first derivative is
    /// `nu(0) s_1`; the second and third vanish exactly when the matching
    /// curve derivatives `f''(0)`, `f'''(0)` vanish and are undefined
    /// otherwise. Spline laws support only `k = 1`.
    pub fn flux_jacobian(&self, r: &[f64], dirs: &[&[f64]]) -> Result<Vec<f64>> {
        let dim = check_dim(r)?;
        let k = dirs.len();
        if !(1..=3).contains(&k) {
            return Err(Error::Capability(format!(
                "flux jacobians are provided for orders 1..=3, got {k}"
            )));
        }
        for s in dirs {
            if s.len() != dim {
                return Err(Error::Capability(
                    "direction dimension does not match the argument".into(),
                ));
            }
        }
        if k >= 2 {
            if let LawKind::Spline(_) = self.kind {
                return Err(Error::Capability(
                    "spline laws are C^1; flux jacobians of order >= 2 are undefined".into(),
                ));
            }
        }
        let s = norm(r);
        if s == 0.0 {
            return match k {
                1 => Ok(scaled(dirs[0], self.nu(0.0))),
                2 if self.f2_vanishes_at_zero() => Ok(vec![0.0; dim]),
                3 if self.f2_vanishes_at_zero() && self.f3_vanishes_at_zero() => {
                    Ok(vec![0.0; dim])
                }
                _ => Err(Error::Capability(
                    "flux jacobian limit at r = 0 is undefined for this law \
                     (requires f''(0) = 0, and f'''(0) = 0 for order 3)"
                        .into(),
                )),
            };
        }

        let nu = self.nu(s);
        let nu1 = self.nu_deriv(s);
        match k {
            1 => {
                let rs1 = dot(r, dirs[0]);
                let mut out = scaled(r, nu1 / s * rs1);
                axpy(&mut out, nu, dirs[0]);
                Ok(out)
            }
            2 => {
                let (nu2, _) = self.nu_deriv23(s)?;
                let (s1, s2) = (dirs[0], dirs[1]);
                let (rs1, rs2) = (dot(r, s1), dot(r, s2));
                let c2 = nu2 / (s * s) - nu1 / (s * s * s);
                let c1 = nu1 / s;
                let mut out = scaled(r, c2 * rs1 * rs2 + c1 * dot(s1, s2));
                axpy(&mut out, c1 * rs1, s2);
                axpy(&mut out, c1 * rs2, s1);
                Ok(out)
            }
            3 => {
                let (nu2, nu3) = self.nu_deriv23(s)?;
                let (s1, s2, s3) = (dirs[0], dirs[1], dirs[2]);
                let (rs1, rs2, rs3) = (dot(r, s1), dot(r, s2), dot(r, s3));
                let (s12, s13, s23) = (dot(s1, s2), dot(s1, s3), dot(s2, s3));
                let s2p = s * s;
                let c3 = nu3 / (s * s2p) - 3.0 * nu2 / (s2p * s2p) + 3.0 * nu1 / (s2p * s2p * s);
                let c2 = nu2 / s2p - nu1 / (s2p * s);
                let c1 = nu1 / s;
                let mut out = scaled(r, c3 * rs1 * rs2 * rs3);
                axpy(&mut out, c2 * rs1 * rs2, s3);
                let r_coeff = c2 * (s13 * rs2 + rs1 * s23 + s12 * rs3);
                axpy(&mut out, r_coeff, r);
                axpy(&mut out, c2 * rs3 * rs1, s2);
                axpy(&mut out, c2 * rs3 * rs2, s1);
                axpy(&mut out, c1 * s13, s2);
                axpy(&mut out, c1 * s23, s1);
                axpy(&mut out, c1 * s12, s3);
                Ok(out)
            }
            _ => unreachable!(),
        }
    }
}

/// Symmetric differential reluctivity tensor in dimension 2 or 3.
#[derive(Debug, Clone, Copy)]
pub struct ReluctivityTensor {
    dim: usize,
    m: [[f64; 3]; 3],
}

impl ReluctivityTensor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.m[i][j]
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.m[i][j] * v[j]).sum())
            .collect()
    }
}

/// Constructs the prolongation span `[0, s1]` for a curve starting at
/// `s1 > 0`: a Hermite cubic from the origin with the secant slope
/// `delta = f(s1)/s1`, meeting the curve's first knot with matching value
/// and slope. The span is monotone when `(1, f'(s1)/delta)` lies in the
/// Fritsch-Carlson circle, i.e. `f'(s1) <= sqrt(8) delta`; steeper curves
/// are rejected. Keeping the origin slope a fixed linear function of the
/// data makes Karhunen-Loeve sample laws affine in the random variables,
/// which parameter sensitivities rely on.
fn prolong_to_origin(curve: &CubicHermite) -> Result<CubicHermite> {
    let s1 = curve.knots()[0];
    let f1 = curve.values()[0];
    let d1 = curve.slopes()[0];
    if f1 <= 0.0 {
        return Err(Error::Data(format!(
            "prolongation to the origin requires f({s1}) > 0, got {f1}"
        )));
    }
    let delta = f1 / s1;
    if d1 > 8.0f64.sqrt() * delta {
        return Err(Error::Data(format!(
            "cannot prolong to the origin monotonically: slope at first knot is \
             {:.3} times the secant slope (limit sqrt(8))",
            d1 / delta
        )));
    }
    let mut knots = vec![0.0];
    let mut values = vec![0.0];
    let mut slopes = vec![delta];
    knots.extend_from_slice(curve.knots());
    values.extend_from_slice(curve.values());
    slopes.extend_from_slice(curve.slopes());
    CubicHermite::new(knots, values, slopes)
}

fn check_dim(r: &[f64]) -> Result<usize> {
    match r.len() {
        d @ (2 | 3) => Ok(d),
        d => Err(Error::Capability(format!(
            "reluctivity tensors are defined in dimension 2 or 3, got {d}"
        ))),
    }
}

fn norm(r: &[f64]) -> f64 {
    dot(r, r).sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn scaled(v: &[f64], c: f64) -> Vec<f64> {
    v.iter().map(|&x| c * x).collect()
}

fn axpy(out: &mut [f64], c: f64, v: &[f64]) {
    for (o, &x) in out.iter_mut().zip(v) {
        *o += c * x;
    }
}
