//! Truncated Karhunen-Loeve expansion of a random monotone material law.
//!
//! Sample mean and variance of a measured table are interpolated and the
//! covariance operator with a Gaussian correlation kernel, modulated by the
//! sample standard deviation, is discretized in a C^1 cubic B-spline space.
//! The generalized eigenproblem is reduced by a Cholesky factor of the Gram
//! matrix to a dense symmetric one. A sampled law has spline coefficients
//!
//! ```text
//! E_i + delta * sum_n sqrt(lambda_n) b_{n,i} y_n,   y_n in [-sqrt3, sqrt3],
//! ```
//!
//! which stay nondecreasing (hence the law monotone) whenever `delta` is at
//! most the admissibility bound computed from the coefficient increments.

pub mod bspline;

use crate::material::{CubicHermite, MaterialLaw, MeasuredBhTable};
use crate::{Error, Result};
use bspline::BSplineSpace;
use nalgebra::{Cholesky, DMatrix, DVector};

pub(crate) const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Gaussian covariance kernel `exp(-((s-t)/L)^2)`, optionally modulated by
/// a standard-deviation curve: `cov(s,t) = exp(...) sigma(s) sigma(t)`.
/// The modulation is stored as a variance curve and clamped nonnegative at
/// evaluation. The overall amplitude parameter of the expansion is *not*
/// part of the kernel; it scales the sampled coefficients only.
#[derive(Debug, Clone)]
pub struct CovarianceKernel {
    correlation_length: f64,
    variance: Option<CubicHermite>,
}

impl CovarianceKernel {
    pub fn gaussian(correlation_length: f64) -> Result<Self> {
        if !(correlation_length > 0.0) || !correlation_length.is_finite() {
            return Err(Error::Config(format!(
                "correlation length must be positive and finite, got {correlation_length}"
            )));
        }
        Ok(CovarianceKernel { correlation_length, variance: None })
    }

    pub fn gaussian_modulated(correlation_length: f64, variance: CubicHermite) -> Result<Self> {
        let mut k = Self::gaussian(correlation_length)?;
        k.variance = Some(variance);
        Ok(k)
    }

    pub fn correlation_length(&self) -> f64 {
        self.correlation_length
    }

    fn sigma(&self, s: f64) -> f64 {
        match &self.variance {
            None => 1.0,
            Some(v) => v.eval(s).max(0.0).sqrt(),
        }
    }

    pub fn eval(&self, s: f64, t: f64) -> f64 {
        let z = (s - t) / self.correlation_length;
        (-z * z).exp() * self.sigma(s) * self.sigma(t)
    }
}

/// Galerkin matrices of the covariance operator: the kernel matrix and the
/// Gram matrix of the spline basis.
pub fn assemble_eigensystem(
    space: &BSplineSpace,
    kernel: &CovarianceKernel,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let k = space.kernel_matrix(|s, t| kernel.eval(s, t))?;
    Ok((k, space.gram()))
}

/// Solves `K b = lambda G b` by the Cholesky reduction `G = L L^T` to a
/// standard symmetric problem. Eigenvalues are returned descending,
/// eigenvectors Gram-orthonormal with canonical sign (largest-magnitude
/// coefficient positive). Eigenvalues in `(-1e-10 lambda_max, 0)` are
/// rounding debris of a semidefinite kernel and clamped to zero; anything
/// more negative means the kernel itself is not positive semidefinite.
pub fn solve_kl_eigenpairs(
    k: &DMatrix<f64>,
    g: &DMatrix<f64>,
) -> Result<(Vec<f64>, Vec<DVector<f64>>)> {
    let n = k.nrows();
    assert_eq!(k.ncols(), n);
    assert_eq!(g.nrows(), n);
    let chol = Cholesky::new(g.clone())
        .ok_or_else(|| Error::Data("Gram matrix is not positive definite".into()))?;
    let l = chol.l();
    let x = l
        .solve_lower_triangular(k)
        .ok_or_else(|| Error::Data("singular Cholesky factor".into()))?;
    let b = l
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| Error::Data("singular Cholesky factor".into()))?;
    let b = (&b + &b.transpose()) * 0.5;
    let eig = b.symmetric_eigen();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let lambda_max = eig.eigenvalues[order[0]].max(0.0);
    let floor = -1e-10 * lambda_max.max(f64::MIN_POSITIVE);

    let lt = l.transpose();
    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenvectors = Vec::with_capacity(n);
    for &i in &order {
        let mut lam = eig.eigenvalues[i];
        if lam < 0.0 {
            if lam < floor {
                return Err(Error::Data(format!(
                    "covariance discretization has negative eigenvalue {lam:.6e} \
                     (beyond the rounding floor {floor:.3e}); kernel is not positive semidefinite"
                )));
            }
            lam = 0.0;
        }
        let v = eig.eigenvectors.column(i).into_owned();
        let mut b = lt
            .solve_upper_triangular(&v)
            .ok_or_else(|| Error::Data("singular Cholesky factor".into()))?;
        let lead = b.iter().fold(0.0f64, |acc, &x| if x.abs() > acc.abs() { x } else { acc });
        if lead < 0.0 {
            b.neg_mut();
        }
        eigenvalues.push(lam);
        eigenvectors.push(b);
    }
    Ok((eigenvalues, eigenvectors))
}

/// Smallest truncation order whose cumulative information content exceeds
/// the threshold: `sum_{n<=M} lambda_n / sum_all > threshold`.
pub fn truncate_by_information(eigenvalues: &[f64], threshold: f64) -> Result<usize> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Config(format!(
            "information threshold must lie in (0, 1), got {threshold}"
        )));
    }
    let total: f64 = eigenvalues.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Data(
            "information content undefined for an all-zero spectrum".into(),
        ));
    }
    let mut cum = 0.0;
    for (i, lam) in eigenvalues.iter().enumerate() {
        cum += lam;
        if cum / total > threshold {
            return Ok(i + 1);
        }
    }
    Ok(eigenvalues.len())
}

/// Largest amplitude that keeps every sampled coefficient vector
/// nondecreasing. Each increment must survive the worst case over the
/// independent signs of the stochastic coordinates, so mode contributions
/// enter with absolute values per increment:
///
/// ```text
/// delta_max = min_i (E_i - E_{i-1}) / (sqrt3 sum_{n<=M} sqrt(lambda_n) |b_{n,i} - b_{n,i-1}|),
/// ```
///
/// minimized only over increments with a nonzero denominator; all
/// denominators zero (flat perturbation) yields +inf.
pub fn delta_bound(
    mean_coeffs: &[f64],
    eigenvalues: &[f64],
    eigenvectors: &[DVector<f64>],
    m: usize,
) -> f64 {
    assert!(m <= eigenvalues.len() && m <= eigenvectors.len());
    let mut best = f64::INFINITY;
    for i in 1..mean_coeffs.len() {
        let de = mean_coeffs[i] - mean_coeffs[i - 1];
        debug_assert!(de >= 0.0, "mean coefficients must be nondecreasing");
        let denom: f64 = (0..m)
            .map(|n| eigenvalues[n].max(0.0).sqrt() * (eigenvectors[n][i] - eigenvectors[n][i - 1]).abs())
            .sum();
        if denom > 0.0 {
            best = best.min(de / (SQRT3 * denom));
        }
    }
    best
}

/// Tail of the spectrum: `sum_{n > m} lambda_n` over the computed part.
pub fn truncation_l2_error(eigenvalues: &[f64], m: usize) -> f64 {
    if m >= eigenvalues.len() {
        0.0
    } else {
        eigenvalues[m..].iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    /// Smallest order whose cumulative information content exceeds the
    /// given threshold.
    Information(f64),
    /// Fixed number of modes.
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaRule {
    /// Fraction (in (0, 1]) of the computed admissibility bound.
    FractionOfMax(f64),
    /// Explicit amplitude; rejected when it exceeds the bound.
    Fixed(f64),
}

#[derive(Debug, Clone)]
pub struct KlOptions {
    pub correlation_length: f64,
    /// Dimension of the B-spline discretization space.
    pub dim: usize,
    pub truncation: Truncation,
    pub delta: DeltaRule,
}

impl Default for KlOptions {
    fn default() -> Self {
        KlOptions {
            correlation_length: 0.5,
            dim: 60,
            truncation: Truncation::Information(0.95),
            delta: DeltaRule::FractionOfMax(1.0),
        }
    }
}

/// Derivative of a sampled law with respect to one stochastic coordinate:
/// a fixed curve `g` with `g(0) = 0`, extended linearly past the table end.
/// Because the sampled spline coefficients (and the origin prolongation and
/// the linear tail) are affine in the coordinates, this direction is exact,
/// not a finite-difference approximation.
#[derive(Debug, Clone)]
pub struct LawDirection {
    curve: CubicHermite,
    tail_slope: f64,
}

impl LawDirection {
    pub fn f(&self, s: f64) -> f64 {
        let (_, b) = self.curve.domain();
        if s > b {
            self.curve.values().last().unwrap() + self.tail_slope * (s - b)
        } else {
            self.curve.eval(s)
        }
    }

    /// Directional derivative of the reluctivity numerator: `g(s) / s`,
    /// continued at zero by `g'(0)`.
    pub fn nu(&self, s: f64) -> f64 {
        if s < crate::material::GRAD_CLAMP {
            self.curve.slopes()[0]
        } else {
            self.f(s) / s
        }
    }
}

/// Discretized random material law: mean spline plus `M` weighted
/// eigenmodes. Immutable after construction; sampling is a pure function.
#[derive(Debug, Clone)]
pub struct KlExpansion {
    space: BSplineSpace,
    mean_coeffs: Vec<f64>,
    /// Full computed spectrum, descending, negatives floored at zero.
    eigenvalues: Vec<f64>,
    /// First `reference_len` eigenvectors (spline coefficients).
    eigenvectors: Vec<DVector<f64>>,
    reference_len: usize,
    m: usize,
    delta: f64,
    delta_max: f64,
}

impl KlExpansion {
    pub fn from_table(table: &MeasuredBhTable, opts: &KlOptions) -> Result<Self> {
        let locs = table.locations();
        let (a, b) = (locs[0], locs[locs.len() - 1]);
        let space = BSplineSpace::cubic_c1(a, b, opts.dim)?;

        let mean_curve = table.mean_curve()?;
        // With a single measured column there is no sample spread to modulate
        // the kernel, so the covariance shape is assumed outright: a
        // unit-amplitude Gaussian (the amplitude then only rescales the
        // eigenvalues, and the monotonicity bound fixes delta from the mean).
        let kernel = if table.n_samples() < 2 {
            CovarianceKernel::gaussian(opts.correlation_length)?
        } else {
            let variance_curve = table.variance_curve()?;
            CovarianceKernel::gaussian_modulated(opts.correlation_length, variance_curve)?
        };

        let (k, g) = assemble_eigensystem(&space, &kernel)?;
        let gram_chol = Cholesky::new(g.clone())
            .ok_or_else(|| Error::Data("Gram matrix is not positive definite".into()))?;

        let rhs = space.moment_rhs(|s| mean_curve.eval(s), locs);
        let mut mean_coeffs: Vec<f64> = gram_chol.solve(&rhs).iter().copied().collect();
        let range = mean_coeffs.last().unwrap() - mean_coeffs[0];
        let slack = 1e-9 * range.abs().max(1.0);
        for i in 1..mean_coeffs.len() {
            if mean_coeffs[i] < mean_coeffs[i - 1] - slack {
                return Err(Error::Data(format!(
                    "projected mean coefficients decrease at index {i} \
                     ({} -> {}); the mean table is too rough for the spline space",
                    mean_coeffs[i - 1],
                    mean_coeffs[i]
                )));
            }
            // Rounding-level dips are flattened so the monotonicity algebra
            // downstream is exact.
            if mean_coeffs[i] < mean_coeffs[i - 1] {
                mean_coeffs[i] = mean_coeffs[i - 1];
            }
        }

        let (eigenvalues, mut eigenvectors) = solve_kl_eigenpairs(&k, &g)?;
        let reference_len = opts.dim.min(30);
        eigenvectors.truncate(reference_len);

        let m = match opts.truncation {
            Truncation::Information(t) => {
                truncate_by_information(&eigenvalues[..reference_len], t)?
            }
            Truncation::Fixed(m) => {
                if m == 0 || m > reference_len {
                    return Err(Error::Config(format!(
                        "truncation order must lie in 1..={reference_len}, got {m}"
                    )));
                }
                m
            }
        };

        let delta_max = delta_bound(&mean_coeffs, &eigenvalues, &eigenvectors, m);
        let delta = match opts.delta {
            DeltaRule::FractionOfMax(fr) => {
                if !(fr > 0.0 && fr <= 1.0) {
                    return Err(Error::Config(format!(
                        "amplitude fraction must lie in (0, 1], got {fr}"
                    )));
                }
                if !delta_max.is_finite() {
                    return Err(Error::Config(
                        "amplitude bound is unbounded (flat perturbation); \
                         specify an explicit amplitude instead of a fraction"
                            .into(),
                    ));
                }
                fr * delta_max
            }
            DeltaRule::Fixed(d) => {
                if !(d > 0.0) || !d.is_finite() {
                    return Err(Error::Config(format!(
                        "amplitude must be positive and finite, got {d}"
                    )));
                }
                if d > delta_max {
                    return Err(Error::Config(format!(
                        "amplitude {d} exceeds the monotonicity bound {delta_max}"
                    )));
                }
                d
            }
        };

        Ok(KlExpansion {
            space,
            mean_coeffs,
            eigenvalues,
            eigenvectors,
            reference_len,
            m,
            delta,
            delta_max,
        })
    }

    pub fn space(&self) -> &BSplineSpace {
        &self.space
    }

    pub fn mean_coeffs(&self) -> &[f64] {
        &self.mean_coeffs
    }

    /// Full computed spectrum, descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &[DVector<f64>] {
        &self.eigenvectors
    }

    /// Number of retained modes M.
    pub fn order(&self) -> usize {
        self.m
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn delta_max(&self) -> f64 {
        self.delta_max
    }

    /// Length of the reference spectrum used for information content.
    pub fn reference_len(&self) -> usize {
        self.reference_len
    }

    /// Cumulative information content of the first `m` modes relative to
    /// the reference spectrum.
    pub fn info_content(&self, m: usize) -> f64 {
        let total: f64 = self.eigenvalues[..self.reference_len].iter().sum();
        let head: f64 = self.eigenvalues[..m.min(self.reference_len)].iter().sum();
        head / total
    }

    /// Rows (n, lambda_n, cumulative information content) for reporting.
    pub fn spectrum_rows(&self) -> Vec<(usize, f64, f64)> {
        (1..=self.reference_len)
            .map(|n| (n, self.eigenvalues[n - 1], self.info_content(n)))
            .collect()
    }

    fn law_from_coeffs(&self, coeffs: &[f64]) -> Result<MaterialLaw> {
        let breaks = self.space.breakpoints();
        let mut values = Vec::with_capacity(breaks.len());
        let mut slopes = Vec::with_capacity(breaks.len());
        for &s in breaks {
            let (v, d) = self.space.eval_with_deriv(coeffs, s);
            values.push(v);
            slopes.push(d);
        }
        // The Galerkin projection does not interpolate, so a table that
        // includes the origin reconstructs with a fit-sized residual at
        // s = 0 even though f(0) = 0 holds exactly. Pinning by a constant
        // shift removes the residual without touching any slope (and with
        // it the monotonicity algebra); a residual beyond the fit's error
        // band means the table itself is inconsistent.
        if breaks[0] == 0.0 {
            let offset = values[0];
            let range = values.last().unwrap() - offset;
            if offset.abs() > 1e-2 * range.abs().max(1.0) {
                return Err(Error::Data(format!(
                    "reconstructed curve has f(0) = {offset:.3e}, \
                     inconsistent with a curve through the origin"
                )));
            }
            for v in &mut values {
                *v -= offset;
            }
        }
        // A C^1 cubic spline restricted to an element is exactly the
        // Hermite cubic of its endpoint values and slopes, so this
        // conversion is lossless.
        MaterialLaw::from_hermite(CubicHermite::new(breaks.to_vec(), values, slopes)?)
    }

    /// The law at the center of the parameter box (the sample mean).
    pub fn mean_law(&self) -> Result<MaterialLaw> {
        self.law_from_coeffs(&self.mean_coeffs)
    }

    /// Law at stochastic coordinates `y` (one per retained mode, each in
    /// `[-sqrt3, sqrt3]`).
    pub fn sample_law(&self, y: &[f64]) -> Result<MaterialLaw> {
        if y.len() != self.m {
            return Err(Error::Config(format!(
                "expected {} stochastic coordinates, got {}",
                self.m,
                y.len()
            )));
        }
        self.sample_law_modes(y)
    }

    /// Law using the first `y.len()` modes regardless of the retained
    /// truncation order (for truncation comparisons); capped by the stored
    /// reference spectrum.
    pub fn sample_law_modes(&self, y: &[f64]) -> Result<MaterialLaw> {
        if y.len() > self.eigenvectors.len() {
            return Err(Error::Config(format!(
                "requested {} modes but only {} are stored",
                y.len(),
                self.eigenvectors.len()
            )));
        }
        for (n, &yn) in y.iter().enumerate() {
            if !(yn.abs() <= SQRT3 + 1e-12) {
                return Err(Error::Config(format!(
                    "coordinate y_{} = {yn} outside [-sqrt3, sqrt3]",
                    n + 1
                )));
            }
        }
        let mut coeffs = self.mean_coeffs.clone();
        for (n, &yn) in y.iter().enumerate() {
            let scale = self.delta * self.eigenvalues[n].max(0.0).sqrt() * yn;
            if scale != 0.0 {
                for (c, b) in coeffs.iter_mut().zip(self.eigenvectors[n].iter()) {
                    *c += scale * b;
                }
            }
        }
        self.law_from_coeffs(&coeffs)
    }

    /// Exact derivative of the sampled law with respect to coordinate `n`
    /// (zero-based): the fixed curve `delta sqrt(lambda_n) b_n`, with the
    /// same origin prolongation and linear tail as the sampled laws. It is
    /// independent of `y` because the construction is affine.
    pub fn direction(&self, n: usize) -> Result<LawDirection> {
        if n >= self.m {
            return Err(Error::Config(format!(
                "direction index {n} out of range for {} modes",
                self.m
            )));
        }
        let scale = self.delta * self.eigenvalues[n].max(0.0).sqrt();
        let coeffs: Vec<f64> = self.eigenvectors[n].iter().map(|b| scale * b).collect();
        let breaks = self.space.breakpoints();
        let mut knots = Vec::with_capacity(breaks.len() + 1);
        let mut values = Vec::with_capacity(breaks.len() + 1);
        let mut slopes = Vec::with_capacity(breaks.len() + 1);
        let (v1, d1) = self.space.eval_with_deriv(&coeffs, breaks[0]);
        knots.push(0.0);
        values.push(0.0);
        slopes.push(v1 / breaks[0]);
        knots.push(breaks[0]);
        values.push(v1);
        slopes.push(d1);
        for &s in &breaks[1..] {
            let (v, d) = self.space.eval_with_deriv(&coeffs, s);
            knots.push(s);
            values.push(v);
            slopes.push(d);
        }
        let tail_slope = *slopes.last().unwrap();
        Ok(LawDirection { curve: CubicHermite::new(knots, values, slopes)?, tail_slope })
    }

    /// Spectrum tail beyond the retained modes.
    pub fn tail_error(&self) -> f64 {
        truncation_l2_error(&self.eigenvalues, self.m)
    }
}
