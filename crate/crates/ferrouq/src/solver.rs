//! Nonlinear solves at a fixed parameter point.
//!
//! The discrete problem `(nu(|grad u|) grad u, grad v) = (J, v)` is solved
//! by iterative linearization: either successive substitution (the
//! coefficient frozen at the previous iterate) or damped Newton with the
//! differential reluctivity tensor. Both schemes start from a linear solve
//! with a constant coefficient and stop when the nodal increment drops
//! below the configured tolerance in the discrete maximum norm.

use crate::fem::{self, solve_spd, TriMesh};
use crate::material::MaterialLaw;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Successive substitution: freeze `nu(|grad u|)` at the last iterate.
    Kacanov,
    /// Damped Newton-Raphson with the differential reluctivity tensor.
    Newton,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveConfig {
    pub scheme: Scheme,
    /// Nodal maximum-norm increment tolerance.
    pub tol: f64,
    pub max_iter: usize,
    /// Residual-norm backtracking (halve the step until the residual
    /// drops, floor 1/64).
    pub damping: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig { scheme: Scheme::Kacanov, tol: 1e-12, max_iter: 200, damping: true }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Nodal maximum-norm increments, one per iteration.
    pub increments: Vec<f64>,
    /// Euclidean norm of the interior residual at the final iterate.
    pub final_residual: f64,
    pub converged: bool,
}

impl SolveReport {
    pub fn iterations(&self) -> usize {
        self.increments.len()
    }
}

const BACKTRACK_FLOOR: f64 = 1.0 / 64.0;

/// Solves the nonlinear problem with source density `source` and Dirichlet
/// data `boundary` (interpolated at boundary vertices).
///
/// Non-convergence within `max_iter` is reported through the `converged`
/// flag, not as an error; non-finite iterates are.
pub fn solve_nonlinear(
    mesh: &TriMesh,
    law: &MaterialLaw,
    source: impl Fn(f64, f64) -> f64,
    boundary: impl Fn(f64, f64) -> f64,
    config: &SolveConfig,
) -> Result<(Vec<f64>, SolveReport)> {
    let n = mesh.n_vertices();
    let b = fem::load_vector(mesh, &source);
    let g = mesh.interpolate(&boundary);
    let flags = mesh.boundary();
    let zeros = vec![0.0; n];

    let interior_residual_norm = |u: &[f64]| -> f64 {
        let r = fem::residual(mesh, law, u, &b);
        r.iter()
            .zip(flags)
            .filter(|&(_, bd)| !bd)
            .map(|(ri, _)| ri * ri)
            .sum::<f64>()
            .sqrt()
    };

    // Initial iterate: one linear solve with the coefficient frozen at the
    // interpolant of the boundary closure. With homogeneous data this is
    // the constant-nu(0) solve; with manufactured Dirichlet data it places
    // the coefficient in the operating range of the solution. Laws that
    // degenerate there (the power family at zero gradient) fall back to
    // the constant upper slope bound.
    let mut u = {
        let (lo, hi) = fem::gradient_range(mesh, &g);
        let degenerate = law.nu(lo).max(law.nu(hi)) <= 1e-8 * law.bounds().beta;
        let mut a = if degenerate {
            fem::stiffness_matrix(mesh, law.bounds().beta)
        } else {
            fem::kacanov_matrix(mesh, law, &g)
        };
        let mut rhs = b.clone();
        fem::apply_dirichlet(&mut a, &mut rhs, flags, &g);
        solve_spd(&a, &rhs)?
    };

    let mut increments = Vec::new();
    let mut converged = false;
    for _ in 0..config.max_iter {
        let delta: Vec<f64> = match config.scheme {
            Scheme::Kacanov => {
                let mut a = fem::kacanov_matrix(mesh, law, &u);
                let mut rhs = b.clone();
                fem::apply_dirichlet(&mut a, &mut rhs, flags, &g);
                let w = solve_spd(&a, &rhs)?;
                w.iter().zip(&u).map(|(wi, ui)| wi - ui).collect()
            }
            Scheme::Newton => {
                // The iterate satisfies the boundary data exactly, so the
                // Newton correction is zero there.
                let mut a = fem::newton_matrix(mesh, law, &u)?;
                let mut r = fem::residual(mesh, law, &u, &b);
                for (ri, &bd) in r.iter_mut().zip(flags) {
                    if bd {
                        *ri = 0.0;
                    }
                }
                fem::apply_dirichlet(&mut a, &mut r, flags, &zeros);
                solve_spd(&a, &r)?
            }
        };

        // Backtracking: take the full step when it reduces the interior
        // residual, otherwise the best of the halved steps down to the
        // floor.
        let mut step = 1.0;
        if config.damping {
            let before = interior_residual_norm(&u);
            let trial_norm = |t: f64| {
                let trial: Vec<f64> =
                    u.iter().zip(&delta).map(|(ui, di)| ui + t * di).collect();
                interior_residual_norm(&trial)
            };
            if trial_norm(1.0) >= before {
                let mut best = (1.0, trial_norm(1.0));
                let mut t = 0.5;
                while t >= BACKTRACK_FLOOR {
                    let norm = trial_norm(t);
                    if norm < best.1 {
                        best = (t, norm);
                    }
                    t *= 0.5;
                }
                step = best.0;
            }
        }

        let mut increment = 0.0f64;
        for (ui, di) in u.iter_mut().zip(&delta) {
            *ui += step * di;
            increment = increment.max((step * di).abs());
        }
        if !increment.is_finite() {
            return Err(Error::Data("nonlinear iteration produced non-finite values".into()));
        }
        increments.push(increment);
        if increment < config.tol {
            converged = true;
            break;
        }
    }

    let final_residual = interior_residual_norm(&u);
    Ok((u, SolveReport { increments, final_residual, converged }))
}

/// First-order sensitivity of the solution with respect to one parameter:
/// solves the Newton-matrix system with right-hand side
/// `-(nu_direction(|grad u|) grad u, grad v)` and homogeneous Dirichlet
/// data. `nu_direction` is the derivative of the reluctivity with respect
/// to the parameter; the boundary data must not depend on it.
pub fn sensitivity_solve(
    mesh: &TriMesh,
    law: &MaterialLaw,
    nu_direction: impl Fn(f64) -> f64,
    u: &[f64],
    base: &SolveReport,
) -> Result<Vec<f64>> {
    if !base.converged {
        return Err(Error::Config(
            "sensitivity solve requires a converged base solution".into(),
        ));
    }
    let mut a = fem::newton_matrix(mesh, law, u)?;
    let mut rhs = fem::sensitivity_rhs(mesh, &nu_direction, u);
    let zeros = vec![0.0; mesh.n_vertices()];
    fem::apply_dirichlet(&mut a, &mut rhs, mesh.boundary(), &zeros);
    solve_spd(&a, &rhs)
}
