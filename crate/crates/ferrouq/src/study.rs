//! Collocation studies: sweeps of the nonlinear solve over stochastic
//! grids, moment fields, and the error tables of the convergence
//! experiments.
//!
//! A study couples a mesh with a parameter-to-problem map. The driver
//! solves one deterministic problem per grid point (in parallel, with
//! index-ordered reductions, so results are bit-reproducible) and
//! recombines expectation and variance fields through the grid weights.

use crate::fem::{self, TriMesh};
use crate::grids::{smolyak_grid, tensor_grid, CollocationGrid, GridKind};
use crate::kl::KlExpansion;
use crate::material::MaterialLaw;
use crate::solver::{self, SolveConfig, SolveReport};
use crate::{Error, Result};
use rayon::prelude::*;

/// One deterministic problem instance at a parameter point: the material
/// law, a constant source density, and Dirichlet data.
pub struct PointProblem {
    pub law: MaterialLaw,
    pub source: f64,
    pub boundary: Box<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

/// A parameterized family of problems on a fixed mesh.
pub struct Study<'m> {
    mesh: &'m TriMesh,
    domain: Vec<(f64, f64)>,
    solve: SolveConfig,
    factory: Box<dyn Fn(&[f64]) -> Result<PointProblem> + Send + Sync + 'm>,
}

/// Analytic solution of the power-law problem with source 2 on the unit
/// square, radially symmetric about the center.
pub fn plaplace_exact(p: f64, x: f64, y: f64) -> f64 {
    let r = ((x - 0.5).powi(2) + (y - 0.5).powi(2)).sqrt();
    let e = p / (p - 1.0);
    -(p - 1.0) / p * r.powf(e) + (p - 1.0) / p * 0.5f64.powf(e)
}

/// Gradient of [`plaplace_exact`].
pub fn plaplace_exact_gradient(p: f64, x: f64, y: f64) -> [f64; 2] {
    let (dx, dy) = (x - 0.5, y - 0.5);
    let r = (dx * dx + dy * dy).sqrt();
    if r == 0.0 {
        return [0.0, 0.0];
    }
    let du = -r.powf(1.0 / (p - 1.0));
    [du * dx / r, du * dy / r]
}

/// Saturation law of the L-shape experiment: the rational model with
/// `a` and `c` perturbed by 20% around the reference values.
pub fn lshape_law(y1: f64, y2: f64) -> Result<MaterialLaw> {
    MaterialLaw::rational(1.78 * (1.0 + 0.2 * y1), 14.0, 6000.0 * (1.0 + 0.2 * y2), 245.0)
}

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Source density of the unit-square study driven by a table-derived
/// random law: chosen so the solution's gradient range reaches through
/// the measured interval of the synthetic tables.
pub const KL_SQUARE_SOURCE: f64 = 6.5e3;

impl<'m> Study<'m> {
    pub fn new(
        mesh: &'m TriMesh,
        domain: Vec<(f64, f64)>,
        solve: SolveConfig,
        factory: impl Fn(&[f64]) -> Result<PointProblem> + Send + Sync + 'm,
    ) -> Self {
        Study { mesh, domain, solve, factory: Box::new(factory) }
    }

    /// Power-law problem with random exponent on `(3, 5)`, source 2, and
    /// the analytic solution as Dirichlet data.
    pub fn plaplace(mesh: &'m TriMesh, solve: SolveConfig) -> Self {
        Study::new(mesh, vec![(3.0, 5.0)], solve, |y| {
            let p = y[0];
            Ok(PointProblem {
                law: MaterialLaw::power(p)?,
                source: 2.0,
                boundary: Box::new(move |x, s| plaplace_exact(p, x, s)),
            })
        })
    }

    /// Saturation-law problem on the L-shape with two perturbed material
    /// parameters, source 1e5, homogeneous Dirichlet data.
    pub fn lshape(mesh: &'m TriMesh, solve: SolveConfig) -> Self {
        Study::new(mesh, vec![(-SQRT3, SQRT3); 2], solve, |y| {
            Ok(PointProblem {
                law: lshape_law(y[0], y[1])?,
                source: 1e5,
                boundary: Box::new(|_, _| 0.0),
            })
        })
    }

    /// Unit-square problem whose law is sampled from a discretized random
    /// field, homogeneous Dirichlet data.
    pub fn kl_square(mesh: &'m TriMesh, kl: KlExpansion, source: f64, solve: SolveConfig) -> Self {
        let dim = kl.order();
        Study::new(mesh, vec![(-SQRT3, SQRT3); dim], solve, move |y| {
            Ok(PointProblem {
                law: kl.sample_law(y)?,
                source,
                boundary: Box::new(|_, _| 0.0),
            })
        })
    }

    pub fn mesh(&self) -> &TriMesh {
        self.mesh
    }

    pub fn dim(&self) -> usize {
        self.domain.len()
    }

    pub fn solve_config(&self) -> &SolveConfig {
        &self.solve
    }

    pub fn point_problem(&self, y: &[f64]) -> Result<PointProblem> {
        (self.factory)(y)
    }

    pub fn grid(&self, kind: GridKind, level: usize) -> CollocationGrid {
        match kind {
            GridKind::Tensor => tensor_grid(level, &self.domain),
            GridKind::Sparse => smolyak_grid(level, &self.domain),
        }
    }

    /// Solves the problem at one parameter point.
    pub fn solve_at(&self, y: &[f64]) -> Result<(Vec<f64>, SolveReport)> {
        let problem = self.point_problem(y)?;
        let source = problem.source;
        solver::solve_nonlinear(
            self.mesh,
            &problem.law,
            |_, _| source,
            &problem.boundary,
            &self.solve,
        )
    }
}

/// Per-point solutions of one grid sweep with the recombined moment
/// fields.
pub struct CollocationRun {
    pub solutions: Vec<Vec<f64>>,
    pub iterations: Vec<usize>,
    pub expectation: Vec<f64>,
    pub variance: Vec<f64>,
}

impl CollocationRun {
    pub fn solve_count(&self) -> usize {
        self.solutions.len()
    }
}

/// One converged solve per grid point; aborts listing the failing points
/// if any solve does not converge.
pub fn run_collocation(study: &Study, grid: &CollocationGrid) -> Result<CollocationRun> {
    let results: Vec<Result<(Vec<f64>, SolveReport)>> = grid
        .points()
        .par_iter()
        .map(|y| study.solve_at(y))
        .collect();

    let mut solutions = Vec::with_capacity(results.len());
    let mut iterations = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (k, res) in results.into_iter().enumerate() {
        match res {
            Err(e) => return Err(e),
            Ok((u, report)) => {
                if !report.converged {
                    failures.push(format!(
                        "point {k} at y = {:?} stopped after {} iterations (last increment {:.3e})",
                        grid.points()[k],
                        report.iterations(),
                        report.increments.last().copied().unwrap_or(f64::NAN)
                    ));
                } else {
                    iterations.push(report.iterations());
                    solutions.push(u);
                }
            }
        }
    }
    if !failures.is_empty() {
        return Err(Error::NoConvergence(format!(
            "{} of {} collocation solves did not converge:\n{}",
            failures.len(),
            grid.len(),
            failures.join("\n")
        )));
    }

    let expectation = grid.expectation(&solutions);
    let variance = grid.variance_field(&solutions);
    Ok(CollocationRun { solutions, iterations, expectation, variance })
}

/// Full H1 distance between two nodal fields.
pub fn h1_distance(mesh: &TriMesh, a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let l2 = fem::l2_norm(mesh, &diff);
    let semi = fem::h1_seminorm(mesh, &diff);
    (l2 * l2 + semi * semi).sqrt()
}

/// How the stochastic error of a level is estimated.
#[derive(Debug, Clone, Copy)]
pub enum ErrorEstimator {
    /// Distance to the expectation on a tensor grid of the given level
    /// (used for both tensor and sparse studies, so the two are measured
    /// against the same reference).
    Reference(usize),
    /// Distance between consecutive levels (`E_q` vs `E_{q+1}`).
    Successive,
}

/// One row of a study: stochastic level, point count, error estimate,
/// local log-log slope versus the previous row, solve-loop wall time, and
/// the moment fields.
pub struct StudyRow {
    pub level: usize,
    pub points: usize,
    pub error: f64,
    pub slope: f64,
    pub time_s: f64,
    pub expectation: Vec<f64>,
    pub variance: Vec<f64>,
}

/// Runs levels `q_lo..=q_hi` of a study and estimates per-level errors.
pub fn run_study(
    study: &Study,
    kind: GridKind,
    q_lo: usize,
    q_hi: usize,
    estimator: ErrorEstimator,
) -> Result<Vec<StudyRow>> {
    if q_lo > q_hi {
        return Err(Error::Config(format!("empty level range {q_lo}..={q_hi}")));
    }
    let mut levels = Vec::new();
    for q in q_lo..=q_hi {
        let grid = study.grid(kind, q);
        let clock = std::time::Instant::now();
        let run = run_collocation(study, &grid)?;
        levels.push((q, grid.len(), clock.elapsed().as_secs_f64(), run));
    }

    let reference = match estimator {
        ErrorEstimator::Reference(q_ref) => {
            let grid = study.grid(GridKind::Tensor, q_ref);
            Some(run_collocation(study, &grid)?.expectation)
        }
        ErrorEstimator::Successive => {
            let grid = study.grid(kind, q_hi + 1);
            Some(run_collocation(study, &grid)?.expectation)
        }
    };

    let mut rows: Vec<StudyRow> = Vec::with_capacity(levels.len());
    for i in 0..levels.len() {
        let error = match estimator {
            ErrorEstimator::Reference(_) => {
                h1_distance(study.mesh, &levels[i].3.expectation, reference.as_ref().unwrap())
            }
            ErrorEstimator::Successive => {
                let next = if i + 1 < levels.len() {
                    &levels[i + 1].3.expectation
                } else {
                    reference.as_ref().unwrap()
                };
                h1_distance(study.mesh, &levels[i].3.expectation, next)
            }
        };
        let slope = match rows.last() {
            Some(prev) if prev.error > 0.0 && error > 0.0 && prev.level > 0 => {
                (error / prev.error).ln() / ((levels[i].0 as f64) / (prev.level as f64)).ln()
            }
            _ => f64::NAN,
        };
        rows.push(StudyRow {
            level: levels[i].0,
            points: levels[i].1,
            error,
            slope,
            time_s: levels[i].2,
            expectation: std::mem::take(&mut levels[i].3.expectation),
            variance: std::mem::take(&mut levels[i].3.variance),
        });
    }
    Ok(rows)
}

/// Least-squares slope of `ln(error)` against `ln(x)`, ignoring
/// nonpositive entries (converged-to-noise rows).
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> f64 {
    let data: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(x, y)| x > 0.0 && y > 0.0)
        .map(|&(x, y)| (x.ln(), y.ln()))
        .collect();
    assert!(data.len() >= 2, "slope fit needs at least two positive points");
    let n = data.len() as f64;
    let sx: f64 = data.iter().map(|p| p.0).sum();
    let sy: f64 = data.iter().map(|p| p.1).sum();
    let sxx: f64 = data.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = data.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Discrete Friedrichs constant of the mesh: `||v|| <= C_F |v|_H1` for
/// nodal fields vanishing on the boundary, from the smallest eigenvalue of
/// the stiffness-mass pencil by inverse power iteration.
pub fn friedrichs_constant(mesh: &TriMesh) -> Result<f64> {
    let n = mesh.n_vertices();
    let mut k = fem::stiffness_matrix(mesh, 1.0);
    let m = fem::mass_matrix(mesh);
    let zeros = vec![0.0; n];
    let mut dummy = zeros.clone();
    fem::apply_dirichlet(&mut k, &mut dummy, mesh.boundary(), &zeros);
    let chol = fem::sparse::SkylineCholesky::factor(&k)?;

    let mut w: Vec<f64> = mesh
        .boundary()
        .iter()
        .map(|&bd| if bd { 0.0 } else { 1.0 })
        .collect();
    for _ in 0..80 {
        let mut z = m.matvec(&w);
        for (zi, &bd) in z.iter_mut().zip(mesh.boundary()) {
            if bd {
                *zi = 0.0;
            }
        }
        w = chol.solve(&z);
        let scale = w.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if !(scale > 0.0) {
            return Err(Error::Data("power iteration collapsed to zero".into()));
        }
        for wi in &mut w {
            *wi /= scale;
        }
    }
    let kw = k.matvec(&w);
    let mw = m.matvec(&w);
    let num: f64 = w.iter().zip(&kw).map(|(a, b)| a * b).sum();
    let den: f64 = w.iter().zip(&mw).map(|(a, b)| a * b).sum();
    Ok((den / num).sqrt())
}

/// Outcome of one truncation comparison: the H1-seminorm solution
/// difference and the a priori bound
/// `||nu - nu_M||_inf C_F ||J||_2 / (alpha alpha_0)`.
pub struct StabilityCheck {
    pub difference: f64,
    pub bound: f64,
}

impl StabilityCheck {
    pub fn ratio(&self) -> f64 {
        self.bound / self.difference
    }
}

/// Solves the unit-square problem with the law truncated to `m_small`
/// modes and to all `y.len()` modes and evaluates the perturbation bound
/// with measured law quantities.
pub fn kl_truncation_stability(
    mesh: &TriMesh,
    kl: &KlExpansion,
    y: &[f64],
    m_small: usize,
    source: f64,
    solve: &SolveConfig,
) -> Result<StabilityCheck> {
    if m_small > y.len() {
        return Err(Error::Config(format!(
            "truncation order {m_small} exceeds the sample dimension {}",
            y.len()
        )));
    }
    let law_full = kl.sample_law_modes(y)?;
    let law_trunc = kl.sample_law_modes(&y[..m_small])?;

    let run = |law: &MaterialLaw| -> Result<Vec<f64>> {
        let (u, report) = solver::solve_nonlinear(mesh, law, |_, _| source, |_, _| 0.0, solve)?;
        if !report.converged {
            return Err(Error::NoConvergence(format!(
                "truncation-stability solve stalled after {} iterations",
                report.iterations()
            )));
        }
        Ok(u)
    };
    let u_full = run(&law_full)?;
    let u_trunc = run(&law_trunc)?;
    let diff: Vec<f64> = u_full.iter().zip(&u_trunc).map(|(a, b)| a - b).collect();
    let difference = fem::h1_seminorm(mesh, &diff);

    // Measured law quantities on a probe grid through the operating range
    // of both solutions.
    let (_, hi_full) = fem::gradient_range(mesh, &u_full);
    let (_, hi_trunc) = fem::gradient_range(mesh, &u_trunc);
    let s_hi = 1.5 * hi_full.max(hi_trunc).max(1.0);
    let probes = 2000;
    let mut gap: f64 = 0.0;
    let mut alpha = f64::INFINITY;
    let mut alpha0 = f64::INFINITY;
    for i in 0..=probes {
        let s = s_hi * i as f64 / probes as f64;
        gap = gap.max((law_full.nu(s) - law_trunc.nu(s)).abs());
        alpha = alpha.min(law_full.nu(s)).min(law_full.f_prime(s));
        alpha0 = alpha0.min(law_trunc.nu(s));
    }

    let c_f = friedrichs_constant(mesh)?;
    let source_l2 = source.abs() * mesh.area().sqrt();
    let bound = gap * c_f * source_l2 / (alpha * alpha0);
    Ok(StabilityCheck { difference, bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kl::{DeltaRule, KlExpansion, KlOptions, Truncation};
    use crate::material::MeasuredBhTable;
    use crate::solver::Scheme;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn newton() -> SolveConfig {
        SolveConfig { scheme: Scheme::Newton, ..SolveConfig::default() }
    }

    fn test_kl() -> KlExpansion {
        let table = MeasuredBhTable::synthetic(14, 28, 42);
        KlExpansion::from_table(&table, &KlOptions::default()).unwrap()
    }

    #[test]
    fn constant_family_has_zero_variance() {
        let mesh = TriMesh::l_shape(2);
        let study = Study::new(&mesh, vec![(-SQRT3, SQRT3); 2], newton(), |_| {
            Ok(PointProblem {
                law: MaterialLaw::rational(1.78, 14.0, 6000.0, 245.0)?,
                source: 1e5,
                boundary: Box::new(|_, _| 0.0),
            })
        });
        let grid = study.grid(GridKind::Tensor, 2);
        let run = run_collocation(&study, &grid).unwrap();
        assert_eq!(run.solve_count(), 9);
        let (u0, _) = study.solve_at(&[0.0, 0.0]).unwrap();
        let umax = u0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (e, d) in run.expectation.iter().zip(&u0) {
            assert_relative_eq!(*e, *d, epsilon = 1e-12 * umax);
        }
        for v in &run.variance {
            assert!(*v <= 1e-12 * umax * umax, "variance {v}");
        }
    }

    #[test]
    fn single_point_grid_reproduces_the_center_solution() {
        let mesh = TriMesh::unit_square(6);
        let study = Study::plaplace(&mesh, newton());
        let grid = study.grid(GridKind::Tensor, 0);
        assert_eq!(grid.len(), 1);
        let run = run_collocation(&study, &grid).unwrap();
        let (center, _) = study.solve_at(&[4.0]).unwrap();
        for (a, b) in run.expectation.iter().zip(&center) {
            assert_relative_eq!(*a, *b, epsilon = 1e-13);
        }
        assert!(run.variance.iter().all(|v| v.abs() <= 1e-15));
    }

    #[test]
    fn collocation_runs_are_deterministic() {
        let mesh = TriMesh::unit_square(4);
        let study = Study::plaplace(&mesh, newton());
        let grid = study.grid(GridKind::Tensor, 2);
        let a = run_collocation(&study, &grid).unwrap();
        let b = run_collocation(&study, &grid).unwrap();
        assert_eq!(a.expectation, b.expectation);
        assert_eq!(a.variance, b.variance);
    }

    #[test]
    fn plaplace_moments_have_the_expected_shape() {
        let mesh = TriMesh::unit_square(8);
        let study = Study::plaplace(&mesh, newton());
        let grid = study.grid(GridKind::Tensor, 3);
        let run = run_collocation(&study, &grid).unwrap();
        // The expectation peaks at the center vertex.
        let center = mesh
            .vertices()
            .iter()
            .position(|v| (v[0] - 0.5).abs() < 1e-12 && (v[1] - 0.5).abs() < 1e-12)
            .unwrap();
        let emax = run.expectation.iter().cloned().fold(f64::MIN, f64::max);
        assert_relative_eq!(run.expectation[center], emax, epsilon = 1e-12);
        // The analytic solution vanishes at the edge midpoints for every
        // exponent, so the variance vanishes there (and only there on the
        // boundary).
        let vmax = run.variance.iter().cloned().fold(0.0f64, f64::max);
        for (i, v) in mesh.vertices().iter().enumerate() {
            let on_mid = (v[0] - 0.5).abs() < 1e-12 && (v[1] == 0.0 || v[1] == 1.0)
                || (v[1] - 0.5).abs() < 1e-12 && (v[0] == 0.0 || v[0] == 1.0);
            if on_mid {
                assert!(run.variance[i] <= 1e-10 * vmax, "variance at edge midpoint");
            }
        }
        assert!(vmax > 0.0);
    }

    #[test]
    fn plaplace_reference_errors_decay_fast() {
        let mesh = TriMesh::unit_square(8);
        let study = Study::plaplace(&mesh, newton());
        let rows = run_study(&study, GridKind::Tensor, 1, 4, ErrorEstimator::Reference(6)).unwrap();
        for w in rows.windows(2) {
            assert!(
                w[1].error < w[0].error,
                "errors not decreasing: {} -> {}",
                w[0].error,
                w[1].error
            );
        }
        assert!(rows[3].error < 1e-2 * rows[0].error);
        let total: usize = rows.iter().map(|r| r.points).sum();
        assert_eq!(total, 2 + 3 + 4 + 5);
    }

    #[test]
    fn successive_estimator_runs_one_level_past_the_range() {
        let mesh = TriMesh::unit_square(6);
        let study = Study::plaplace(&mesh, newton());
        let rows = run_study(&study, GridKind::Tensor, 1, 3, ErrorEstimator::Successive).unwrap();
        assert_eq!(rows.len(), 3);
        for w in rows.windows(2) {
            assert!(w[1].error < w[0].error);
        }
    }

    #[test]
    fn lshape_law_matches_frozen_corner_values() {
        let law = lshape_law(SQRT3, SQRT3).unwrap();
        match law.kind() {
            crate::material::LawKind::Rational(r) => {
                assert_relative_eq!(r.a, 2.396_610_087, max_relative = 1e-6);
                assert_relative_eq!(r.c, 8078.460_969, max_relative = 1e-6);
            }
            _ => panic!("expected the rational law"),
        }
        // All corner laws stay inside the admissible reluctivity band.
        for y1 in [-SQRT3, SQRT3] {
            for y2 in [-SQRT3, SQRT3] {
                let law = lshape_law(y1, y2).unwrap();
                for i in 0..200 {
                    let s = 5.0 * i as f64 / 199.0;
                    let nu = law.nu(s);
                    assert!((245.0 - 1e-9..=6245.0 * 1.35).contains(&nu), "nu {nu} at {s}");
                }
            }
        }
    }

    #[test]
    fn loglog_slope_recovers_synthetic_rate() {
        let pts: Vec<(f64, f64)> = (1..=6).map(|q| (q as f64, 7.5 * (q as f64).powi(-3))).collect();
        assert_relative_eq!(fit_loglog_slope(&pts), -3.0, epsilon = 1e-12);
    }

    #[test]
    fn friedrichs_constant_matches_the_laplace_eigenvalue() {
        // Smallest Dirichlet eigenvalue of the unit square is 2 pi^2; the
        // conforming discrete value approaches it from above.
        let mesh = TriMesh::unit_square(16);
        let c = friedrichs_constant(&mesh).unwrap();
        let exact = 1.0 / (2.0 * std::f64::consts::PI * std::f64::consts::PI).sqrt();
        assert!(c <= exact + 1e-12, "discrete constant {c} above continuous {exact}");
        assert_relative_eq!(c, exact, max_relative = 5e-3);
    }

    /// Expansion whose amplitude bound covers all six modes, so every
    /// coordinate-subset sample stays monotone.
    fn wide_kl() -> KlExpansion {
        let table = MeasuredBhTable::synthetic(14, 28, 42);
        let options = KlOptions {
            truncation: Truncation::Fixed(6),
            delta: DeltaRule::FractionOfMax(1.0),
            ..KlOptions::default()
        };
        KlExpansion::from_table(&table, &options).unwrap()
    }

    #[test]
    fn truncation_stability_bound_holds() {
        let kl = wide_kl();
        let mesh = TriMesh::unit_square(8);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let m_large = kl.order();
        for trial in 0..3 {
            let y: Vec<f64> = (0..m_large).map(|_| rng.gen_range(-SQRT3..SQRT3)).collect();
            let check =
                kl_truncation_stability(&mesh, &kl, &y, 1, KL_SQUARE_SOURCE, &newton()).unwrap();
            assert!(check.difference > 0.0, "trial {trial} difference zero");
            assert!(
                check.ratio() >= 1.0,
                "trial {trial}: bound {} below difference {}",
                check.bound,
                check.difference
            );
        }
        // Equal orders leave nothing to compare.
        let y: Vec<f64> = (0..m_large).map(|_| rng.gen_range(-SQRT3..SQRT3)).collect();
        let same =
            kl_truncation_stability(&mesh, &kl, &y, m_large, KL_SQUARE_SOURCE, &newton()).unwrap();
        assert!(same.difference <= 1e-12);
    }

    #[test]
    fn truncation_differences_shrink_with_more_modes() {
        let kl = wide_kl();
        let mesh = TriMesh::unit_square(6);
        let m_large = kl.order();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut worse = 0usize;
        for _ in 0..5 {
            let y: Vec<f64> = (0..m_large).map(|_| rng.gen_range(-SQRT3..SQRT3)).collect();
            let d1 = kl_truncation_stability(&mesh, &kl, &y, 1, KL_SQUARE_SOURCE, &newton())
                .unwrap()
                .difference;
            let d3 = kl_truncation_stability(&mesh, &kl, &y, 3, KL_SQUARE_SOURCE, &newton())
                .unwrap()
                .difference;
            if d3 > d1 {
                worse += 1;
            }
        }
        assert!(worse <= 1, "truncation differences grew in {worse} of 5 samples");
    }

    #[test]
    fn kl_square_sensitivity_matches_finite_differences()  {
        let kl = test_kl();
        let mesh = TriMesh::unit_square(8);
        let study = Study::kl_square(&mesh, kl.clone(), KL_SQUARE_SOURCE, newton());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let y: Vec<f64> = (0..kl.order()).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let (u, report) = study.solve_at(&y).unwrap();
        let law = kl.sample_law(&y).unwrap();
        let dir = kl.direction(0).unwrap();
        let sens =
            solver::sensitivity_solve(&mesh, &law, |s| dir.nu(s), &u, &report).unwrap();

        let eps = 1e-4;
        let mut yp = y.clone();
        yp[0] += eps;
        let mut ym = y.clone();
        ym[0] -= eps;
        let (up, _) = study.solve_at(&yp).unwrap();
        let (um, _) = study.solve_at(&ym).unwrap();
        let fd: Vec<f64> = up.iter().zip(&um).map(|(a, b)| (a - b) / (2.0 * eps)).collect();
        let diff: Vec<f64> = sens.iter().zip(&fd).map(|(a, b)| a - b).collect();
        let rel = fem::h1_seminorm(&mesh, &diff) / fem::h1_seminorm(&mesh, &fd);
        assert!(rel < 1e-3, "sensitivity error {rel:.2e}");
    }

    #[test]
    fn kl_square_solution_reaches_the_measured_interval() {
        let kl = test_kl();
        let mesh = TriMesh::unit_square(12);
        let study = Study::kl_square(&mesh, kl.clone(), KL_SQUARE_SOURCE, newton());
        let (u, _) = study.solve_at(&vec![0.0; kl.order()]).unwrap();
        let (_, hi) = fem::gradient_range(&mesh, &u);
        assert!(
            (1.0..=2.0).contains(&hi),
            "peak gradient {hi} misses the measured interval [1, 1.55]"
        );
    }
}
