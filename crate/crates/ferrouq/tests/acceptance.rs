//! Acceptance suite: ten numbered end-to-end criteria covering the
//! deterministic FE benchmark, stochastic convergence on tensor and sparse
//! grids, the discretized random material law, derivative formulas,
//! sensitivities, and the truncation stability bound.
//!
//! Each criterion prints one PASS/FAIL line; run with
//!
//! ```text
//! cargo test --test acceptance -- --nocapture --test-threads=1
//! ```

use ferrouq::fem::{self, TriMesh};
use ferrouq::grids::{gauss_legendre, smolyak_grid, tensor_grid, Rule1d};
use ferrouq::kl::bspline::BSplineSpace;
use ferrouq::kl::{
    assemble_eigensystem, solve_kl_eigenpairs, CovarianceKernel, DeltaRule, KlExpansion,
    KlOptions, Truncation,
};
use ferrouq::material::{MaterialLaw, MeasuredBhTable};
use ferrouq::solver::{self, Scheme, SolveConfig};
use ferrouq::study::{
    fit_loglog_slope, kl_truncation_stability, plaplace_exact, plaplace_exact_gradient,
    run_study, ErrorEstimator, Study, KL_SQUARE_SOURCE,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

const SQRT3: f64 = 1.732_050_807_568_877_2;

fn report(number: u32, title: &str, outcome: Result<String, String>) {
    match outcome {
        Ok(detail) => println!("criterion {number} ({title}): PASS [{detail}]"),
        Err(why) => {
            println!("criterion {number} ({title}): FAIL [{why}]");
            panic!("criterion {number} ({title}) failed: {why}");
        }
    }
}

fn newton() -> SolveConfig {
    SolveConfig { scheme: Scheme::Newton, ..SolveConfig::default() }
}

fn synthetic_kl(options: &KlOptions) -> Result<KlExpansion, String> {
    let table = MeasuredBhTable::synthetic(14, 28, 42);
    KlExpansion::from_table(&table, options).map_err(|e| e.to_string())
}

#[test]
fn criterion_01_plaplace_deterministic_accuracy() {
    report(1, "p-Laplace deterministic accuracy", (|| {
        let clock = Instant::now();
        let p = 4.0;
        let law = MaterialLaw::power(p).map_err(|e| e.to_string())?;
        let mut errors = Vec::new();
        for n in [16usize, 32, 64, 128] {
            let mesh = TriMesh::unit_square(n);
            let (u, rep) = solver::solve_nonlinear(
                &mesh,
                &law,
                |_, _| 2.0,
                |x, y| plaplace_exact(p, x, y),
                &newton(),
            )
            .map_err(|e| e.to_string())?;
            if !rep.converged {
                return Err(format!("solve on n={n} did not converge"));
            }
            let l2 = fem::l2_error(&mesh, &u, |x, y| plaplace_exact(p, x, y));
            let semi = fem::h1_semi_error(&mesh, &u, |x, y| plaplace_exact_gradient(p, x, y));
            errors.push((l2 * l2 + semi * semi).sqrt());
        }
        let mut ratios = Vec::new();
        for w in errors.windows(2) {
            let ratio = w[0] / w[1];
            if !(1.8..=2.2).contains(&ratio) {
                return Err(format!(
                    "H1 error ratio {ratio:.3} outside [1.8, 2.2] (errors {errors:?})"
                ));
            }
            ratios.push(ratio);
        }
        let elapsed = clock.elapsed().as_secs_f64();
        if elapsed >= 60.0 {
            return Err(format!("runtime {elapsed:.1}s exceeds the 1 minute budget"));
        }
        Ok(format!(
            "ratios {:.3}/{:.3}/{:.3} over n=16..128, {elapsed:.1}s",
            ratios[0], ratios[1], ratios[2]
        ))
    })());
}

#[test]
fn criterion_02_plaplace_stochastic_decay() {
    report(2, "p-Laplace stochastic decay", (|| {
        let clock = Instant::now();
        let mesh = TriMesh::unit_square(64);
        let study = Study::plaplace(&mesh, newton());
        let rows = run_study(&study, ferrouq::grids::GridKind::Tensor, 1, 8,
            ErrorEstimator::Reference(10))
        .map_err(|e| e.to_string())?;
        // Same-mesh reference: the error decays to solver noise, so
        // "decreasing until the floor" means strictly decreasing until both
        // neighbors sit at the noise level of the expectation field.
        let scale = fem::l2_norm(&mesh, &rows[0].expectation)
            + fem::h1_seminorm(&mesh, &rows[0].expectation);
        let floor = 1e-11 * scale;
        for w in rows.windows(2) {
            let (a, b) = (w[0].error, w[1].error);
            if b >= a && (a > floor || b > floor) {
                return Err(format!(
                    "error not decreasing above the floor: {a:.3e} -> {b:.3e} (floor {floor:.1e})"
                ));
            }
        }
        let (e1, e6) = (rows[0].error, rows[5].error);
        if e6 > 1e-3 * e1 {
            return Err(format!("error(6)/error(1) = {:.3e} exceeds 1e-3", e6 / e1));
        }
        let elapsed = clock.elapsed().as_secs_f64();
        if elapsed >= 300.0 {
            return Err(format!("runtime {elapsed:.1}s exceeds the 5 minute budget"));
        }
        Ok(format!(
            "error(1) {e1:.3e} -> error(6) {e6:.3e} (ratio {:.1e}), {elapsed:.1}s",
            e6 / e1
        ))
    })());
}

#[test]
fn criterion_03_lshape_tensor_rate() {
    report(3, "L-shape tensor-grid decay rate", (|| {
        let clock = Instant::now();
        // Finest of the three structured mesh levels.
        let mesh = TriMesh::l_shape(2).refine().refine().refine().refine();
        let study = Study::lshape(&mesh, newton());
        let rows = run_study(&study, ferrouq::grids::GridKind::Tensor, 1, 8,
            ErrorEstimator::Successive)
        .map_err(|e| e.to_string())?;
        for w in rows.windows(2) {
            if w[1].error >= w[0].error {
                return Err(format!(
                    "successive differences not decreasing: {:.3e} -> {:.3e}",
                    w[0].error, w[1].error
                ));
            }
        }
        // Guard that the tail is measured decay, not solver noise.
        let scale = fem::l2_norm(&mesh, &rows[0].expectation)
            + fem::h1_seminorm(&mesh, &rows[0].expectation);
        let last = rows.last().unwrap().error;
        if last <= 1e-10 * scale {
            return Err(format!(
                "tail difference {last:.3e} sits at solver noise (scale {scale:.3e})"
            ));
        }
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.level as f64, r.error)).collect();
        let slope = fit_loglog_slope(&pts);
        // The substantive claim is decay at least q^-2; the measured rate on
        // this mesh family is steeper (about -4.2, see the design notes),
        // and anything past -8 would again indicate a degenerate measure.
        if !(-8.0..=-2.0).contains(&slope) {
            return Err(format!("log-log slope {slope:.3} outside [-8, -2]"));
        }
        let elapsed = clock.elapsed().as_secs_f64();
        if elapsed >= 900.0 {
            return Err(format!("runtime {elapsed:.1}s exceeds the 15 minute budget"));
        }
        Ok(format!(
            "slope {slope:.3} over q=1..8 on {} vertices, {elapsed:.1}s",
            mesh.n_vertices()
        ))
    })());
}

#[test]
fn criterion_04_lshape_tensor_vs_sparse() {
    report(4, "L-shape tensor vs sparse at matched points", (|| {
        let clock = Instant::now();
        let mesh = TriMesh::l_shape(2).refine().refine();
        let study = Study::lshape(&mesh, newton());
        let reference = ErrorEstimator::Reference(9);
        let tensor = run_study(&study, ferrouq::grids::GridKind::Tensor, 6, 6, reference)
            .map_err(|e| e.to_string())?;
        let sparse = run_study(&study, ferrouq::grids::GridKind::Sparse, 3, 3, reference)
            .map_err(|e| e.to_string())?;
        let (nt, ns) = (tensor[0].points, sparse[0].points);
        if nt != 49 || ns != 49 {
            return Err(format!("point counts not matched: tensor {nt}, sparse {ns}"));
        }
        let (et, es) = (tensor[0].error, sparse[0].error);
        if !(et * 5.0 <= es) {
            return Err(format!("tensor error {et:.3e} not 5x below sparse {es:.3e}"));
        }
        Ok(format!(
            "N_q=49: tensor {et:.3e} vs sparse {es:.3e} ({:.1}x), {:.1}s",
            es / et,
            clock.elapsed().as_secs_f64()
        ))
    })());
}

#[test]
fn criterion_05_kl_correctness_suite() {
    report(5, "KL discretization correctness", (|| {
        let space = BSplineSpace::cubic_c1(1.0, 1.55, 60).map_err(|e| e.to_string())?;
        let kernel = CovarianceKernel::gaussian(0.5).map_err(|e| e.to_string())?;
        let (k, g) = assemble_eigensystem(&space, &kernel).map_err(|e| e.to_string())?;
        let (ev, evec) = solve_kl_eigenpairs(&k, &g).map_err(|e| e.to_string())?;

        // Gram-orthonormality of the leading eigenfunctions.
        let mut worst = 0.0f64;
        for i in 0..10 {
            for j in 0..10 {
                let ip = (evec[i].transpose() * &g * &evec[j])[(0, 0)];
                let expect = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((ip - expect).abs());
            }
        }
        if worst > 1e-8 {
            return Err(format!("Gram-orthonormality residual {worst:.3e} > 1e-8"));
        }

        // Mercer trace: unit-amplitude kernel integrates to the interval
        // length.
        let trace: f64 = ev.iter().sum();
        let trace_rel = (trace - 0.55).abs() / 0.55;
        if trace_rel > 1e-6 {
            return Err(format!("Mercer trace {trace} off by {trace_rel:.3e} relative"));
        }

        // Rank-1 constant kernel has the analytic eigenpair
        // (c |I|, 1/sqrt(|I|)).
        let c = 2.0;
        let k1 = space.kernel_matrix(|_, _| c).map_err(|e| e.to_string())?;
        let (ev1, evec1) = solve_kl_eigenpairs(&k1, &space.gram()).map_err(|e| e.to_string())?;
        if (ev1[0] - c * 0.55).abs() > 1e-10 * (c * 0.55) {
            return Err(format!("rank-1 eigenvalue {} vs analytic {}", ev1[0], c * 0.55));
        }
        if ev1[1].abs() > 1e-10 * ev1[0] {
            return Err(format!("rank-1 second eigenvalue {} not vanishing", ev1[1]));
        }
        let phi = 1.0 / 0.55f64.sqrt();
        for s in [1.0, 1.21, 1.55] {
            let v = space.eval(evec1[0].as_slice(), s);
            if (v - phi).abs() > 1e-8 {
                return Err(format!("rank-1 eigenfunction {v} vs analytic {phi} at s={s}"));
            }
        }

        // Three modes carry over 95% of the unit-amplitude spectrum.
        let info3: f64 = ev.iter().take(3).sum::<f64>() / trace;
        if info3 <= 0.95 {
            return Err(format!("3-mode information content {info3:.4} <= 0.95"));
        }

        // Shorter correlation lengths admit smaller deviations.
        let mut deltas = Vec::new();
        for length in [0.05, 0.1, 0.5] {
            let options = KlOptions {
                correlation_length: length,
                truncation: Truncation::Information(0.95),
                delta: DeltaRule::FractionOfMax(1.0),
                ..KlOptions::default()
            };
            deltas.push(synthetic_kl(&options)?.delta_max());
        }
        if !(deltas[0] < deltas[1] && deltas[1] < deltas[2]) {
            return Err(format!("delta_max not increasing with length: {deltas:?}"));
        }

        Ok(format!(
            "gram {worst:.1e}, trace rel {trace_rel:.1e}, info3 {info3:.4}, deltas {:.3}/{:.3}/{:.3}",
            deltas[0], deltas[1], deltas[2]
        ))
    })());
}

#[test]
fn criterion_06_monotone_sampling() {
    report(6, "monotone sampling at the amplitude bound", (|| {
        let kl = synthetic_kl(&KlOptions::default())?;
        if (kl.delta() - kl.delta_max()).abs() > 1e-12 * kl.delta_max() {
            return Err("expansion is not running at delta = delta_max".into());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut bad = 0usize;
        let probes = 1000;
        let s_hi = 1.7;
        for _ in 0..10_000 {
            let y: Vec<f64> = (0..kl.order()).map(|_| rng.gen_range(-SQRT3..SQRT3)).collect();
            match kl.sample_law(&y) {
                Err(_) => bad += 1,
                Ok(law) => {
                    for i in 0..=probes {
                        let s = s_hi * i as f64 / probes as f64;
                        if law.f_prime(s) < -1e-10 {
                            bad += 1;
                            break;
                        }
                    }
                }
            }
        }
        if bad != 0 {
            return Err(format!("{bad} of 10000 samples rejected or non-monotone"));
        }
        Ok("10000 samples, 1000 derivative probes each, 0 violations".into())
    })());
}

#[test]
fn criterion_07_quadrature_and_grids() {
    report(7, "quadrature and collocation grids", (|| {
        // Gauss rules integrate monomials to degree 2n-1 exactly.
        for n in 1..=12usize {
            let (x, w) = gauss_legendre(n);
            for degree in 0..2 * n {
                let value: f64 =
                    x.iter().zip(&w).map(|(x, w)| w * x.powi(degree as i32)).sum();
                let exact =
                    if degree % 2 == 1 { 0.0 } else { 2.0 / (degree as f64 + 1.0) };
                if (value - exact).abs() > 1e-12 {
                    return Err(format!("n={n}, x^{degree}: {value} vs {exact}"));
                }
            }
        }

        // Tensor grid point count in 2D at level 6.
        let tensor = tensor_grid(6, &[(-1.0, 1.0), (-1.0, 1.0)]);
        if tensor.len() != 49 {
            return Err(format!("tensor q=6, M=2 has {} points, expected 49", tensor.len()));
        }

        // One-dimensional Smolyak grids coincide with the underlying rule.
        for q in 1..=5usize {
            let grid = smolyak_grid(q, &[(3.0, 5.0)]);
            let rule = Rule1d::gauss_uniform((1 << q) + 1, 3.0, 5.0);
            if grid.len() != rule.nodes.len() {
                return Err(format!(
                    "Smolyak M=1 q={q}: {} points vs rule {}",
                    grid.len(),
                    rule.nodes.len()
                ));
            }
            let mut pairs: Vec<(f64, f64)> = grid
                .points()
                .iter()
                .zip(grid.weights())
                .map(|(p, &w)| (p[0], w))
                .collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            for ((x, w), (rx, rw)) in pairs.iter().zip(rule.nodes.iter().zip(&rule.weights)) {
                if (x - rx).abs() > 1e-12 || (w - rw).abs() > 1e-12 {
                    return Err(format!("Smolyak M=1 q={q}: node {x}/{w} vs rule {rx}/{rw}"));
                }
            }
        }

        // Smolyak weights recombine to a probability measure.
        for m in 1..=4usize {
            for q in 0..=5usize {
                let grid = smolyak_grid(q, &vec![(-1.0, 1.0); m]);
                let sum: f64 = grid.weights().iter().sum();
                if (sum - 1.0).abs() > 1e-12 {
                    return Err(format!("Smolyak M={m} q={q} weight sum {sum}"));
                }
            }
        }
        Ok("Gauss exact to 2n-1 (n<=12), tensor 49 pts, Smolyak = 1D rule, weights sum 1".into())
    })());
}

/// Central finite differences of the flux with two Richardson levels; the
/// oracle shares only the scalar law evaluation with the closed forms.
fn fd_flux_jacobian(law: &MaterialLaw, r: &[f64], dirs: &[&[f64]], eps: f64) -> Vec<f64> {
    let dim = r.len();
    let k = dirs.len();
    let stencil = |e: f64| -> Vec<f64> {
        let mut acc = vec![0.0; dim];
        for mask in 0..(1u32 << k) {
            let mut arg = r.to_vec();
            let mut sign = 1.0;
            for (j, s) in dirs.iter().enumerate() {
                let sj = if mask & (1 << j) != 0 { -1.0 } else { 1.0 };
                sign *= sj;
                for (a, &x) in arg.iter_mut().zip(*s) {
                    *a += sj * e * x;
                }
            }
            for (a, v) in acc.iter_mut().zip(law.flux(&arg)) {
                *a += sign * v;
            }
        }
        let denom = (2.0 * e).powi(k as i32);
        acc.iter().map(|v| v / denom).collect()
    };
    let t0 = stencil(eps);
    let t1 = stencil(eps / 2.0);
    let t2 = stencil(eps / 4.0);
    (0..dim)
        .map(|i| {
            let r1 = (4.0 * t1[i] - t0[i]) / 3.0;
            let r2 = (4.0 * t2[i] - t1[i]) / 3.0;
            (16.0 * r2 - r1) / 15.0
        })
        .collect()
}

#[test]
fn criterion_08_derivative_tensors() {
    report(8, "flux derivative formulas vs finite differences", (|| {
        let rational = MaterialLaw::rational(1.78, 14.0, 6000.0, 245.0)
            .map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for probe in 0..20 {
            let p = rng.gen_range(3.2..4.8);
            let law = if probe % 2 == 0 {
                rational.clone()
            } else {
                MaterialLaw::power(p).map_err(|e| e.to_string())?
            };
            let dim = if rng.gen_bool(0.5) { 2 } else { 3 };
            let mut r: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let scale = rng.gen_range(0.4..1.8) / r.iter().map(|v| v * v).sum::<f64>().sqrt();
            for x in &mut r {
                *x *= scale;
            }
            let dirs: Vec<Vec<f64>> = (0..3)
                .map(|_| {
                    let d: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
                    d.iter().map(|v| v / norm).collect()
                })
                .collect();
            // Step sizes balance truncation against roundoff: laws with large
            // flux magnitudes are roundoff-limited and need a wider stencil.
            let fmag = law.flux(&r).iter().map(|v| v.abs()).fold(1.0f64, f64::max);
            for k in 1..=3usize {
                let dv: Vec<&[f64]> = dirs[..k].iter().map(|d| d.as_slice()).collect();
                let exact = law.flux_jacobian(&r, &dv).map_err(|e| e.to_string())?;
                let eps = if k == 1 {
                    1e-5
                } else if fmag > 1.0 {
                    1e-2
                } else {
                    2e-3
                };
                let fd = fd_flux_jacobian(&law, &r, &dv, eps);
                let magnitude = exact.iter().map(|v| v.abs()).fold(1.0f64, f64::max);
                for (a, b) in exact.iter().zip(&fd) {
                    if (a - b).abs() > 1e-6 * magnitude {
                        return Err(format!(
                            "probe {probe}, k={k}, dim={dim}: formula {a} vs fd {b}"
                        ));
                    }
                }
            }
        }

        // Exact limits at r = 0.
        let zero = [0.0, 0.0];
        let e1 = [1.0, 0.0];
        let j1 = rational.flux_jacobian(&zero, &[&e1]).map_err(|e| e.to_string())?;
        if j1 != vec![245.0, 0.0] {
            return Err(format!("first derivative at 0: {j1:?} vs [245, 0]"));
        }
        let j2 = rational.flux_jacobian(&zero, &[&e1, &e1]).map_err(|e| e.to_string())?;
        let j3 = rational.flux_jacobian(&zero, &[&e1, &e1, &e1]).map_err(|e| e.to_string())?;
        if j2 != vec![0.0, 0.0] || j3 != vec![0.0, 0.0] {
            return Err(format!("higher limits at 0 not exactly zero: {j2:?}, {j3:?}"));
        }
        Ok("20 random probes, k=1..3, rel < 1e-6; zero limits exact".into())
    })());
}

#[test]
fn criterion_09_sensitivity_vs_finite_differences() {
    report(9, "parameter sensitivities vs finite differences", (|| {
        let kl = synthetic_kl(&KlOptions::default())?;
        let mesh = TriMesh::unit_square(16);
        let study = Study::kl_square(&mesh, kl.clone(), KL_SQUARE_SOURCE, newton());
        let direction = kl.direction(0).map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(314);
        let mut worst = 0.0f64;
        for probe in 0..5 {
            let y: Vec<f64> = (0..kl.order()).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let (u, rep) = study.solve_at(&y).map_err(|e| e.to_string())?;
            let law = kl.sample_law(&y).map_err(|e| e.to_string())?;
            let sens = solver::sensitivity_solve(&mesh, &law, |s| direction.nu(s), &u, &rep)
                .map_err(|e| e.to_string())?;
            let eps = 1e-4;
            let mut yp = y.clone();
            yp[0] += eps;
            let mut ym = y.clone();
            ym[0] -= eps;
            let (up, _) = study.solve_at(&yp).map_err(|e| e.to_string())?;
            let (um, _) = study.solve_at(&ym).map_err(|e| e.to_string())?;
            let fd: Vec<f64> =
                up.iter().zip(&um).map(|(a, b)| (a - b) / (2.0 * eps)).collect();
            let diff: Vec<f64> = sens.iter().zip(&fd).map(|(a, b)| a - b).collect();
            let rel = h1_full(&mesh, &diff) / h1_full(&mesh, &fd);
            if rel >= 1e-3 {
                return Err(format!("probe {probe} at y={y:?}: relative H1 error {rel:.3e}"));
            }
            worst = worst.max(rel);
        }
        Ok(format!("5 parameter points, worst relative H1 error {worst:.2e}"))
    })());
}

fn h1_full(mesh: &TriMesh, u: &[f64]) -> f64 {
    let l2 = fem::l2_norm(mesh, u);
    let semi = fem::h1_seminorm(mesh, u);
    (l2 * l2 + semi * semi).sqrt()
}

#[test]
fn criterion_10_truncation_stability_bound() {
    report(10, "truncation stability bound", (|| {
        let options = KlOptions {
            truncation: Truncation::Fixed(6),
            delta: DeltaRule::FractionOfMax(1.0),
            ..KlOptions::default()
        };
        let kl = synthetic_kl(&options)?;
        let mesh = TriMesh::unit_square(8);
        let mut rng = ChaCha8Rng::seed_from_u64(1618);
        let mut worst_ratio = f64::INFINITY;
        for pair in 0..20 {
            let m_small = pair % 5 + 1;
            let y: Vec<f64> =
                (0..kl.order()).map(|_| rng.gen_range(-SQRT3..SQRT3)).collect();
            let check =
                kl_truncation_stability(&mesh, &kl, &y, m_small, KL_SQUARE_SOURCE, &newton())
                    .map_err(|e| e.to_string())?;
            if !(check.difference > 0.0) {
                return Err(format!("pair {pair} (M_small={m_small}): zero difference"));
            }
            let ratio = check.ratio();
            if !(ratio >= 1.0) {
                return Err(format!(
                    "pair {pair} (M_small={m_small}): bound {:.3e} below difference {:.3e}",
                    check.bound, check.difference
                ));
            }
            worst_ratio = worst_ratio.min(ratio);
        }
        Ok(format!("20 truncation pairs, smallest bound/actual ratio {worst_ratio:.2}"))
    })());
}
