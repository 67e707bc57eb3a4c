//! Deterministic p-Laplace benchmark with a known solution.
//!
//! Solves -div(|grad u|^(p-2) grad u) = 2 on the unit square with Dirichlet
//! data from the radially symmetric exact solution, for both linearization
//! schemes, and tabulates H1 errors under uniform refinement.

use ferrouq::fem::{self, TriMesh};
use ferrouq::material::MaterialLaw;
use ferrouq::solver::{solve_nonlinear, Scheme, SolveConfig};
use ferrouq::study::{plaplace_exact, plaplace_exact_gradient};

fn main() -> ferrouq::Result<()> {
    let p = 4.0;
    let law = MaterialLaw::power(p)?;

    for scheme in [Scheme::Kacanov, Scheme::Newton] {
        println!("{scheme:?} scheme:");
        println!("   n     H1 error      rate   iterations");
        let mut previous: Option<f64> = None;
        for n in [8, 16, 32, 64] {
            let mesh = TriMesh::unit_square(n);
            let config = SolveConfig { scheme, ..SolveConfig::default() };
            let (u, report) = solve_nonlinear(
                &mesh,
                &law,
                |_, _| 2.0,
                |x, y| plaplace_exact(p, x, y),
                &config,
            )?;
            let l2 = fem::l2_error(&mesh, &u, |x, y| plaplace_exact(p, x, y));
            let semi = fem::h1_semi_error(&mesh, &u, |x, y| plaplace_exact_gradient(p, x, y));
            let h1 = (l2 * l2 + semi * semi).sqrt();
            let rate = previous.map(|e: f64| (e / h1).log2());
            match rate {
                Some(r) => println!("  {n:3}   {h1:10.4e}   {r:5.2}   {:6}", report.iterations()),
                None => println!("  {n:3}   {h1:10.4e}       -   {:6}", report.iterations()),
            }
            previous = Some(h1);
        }
        println!();
    }

    // Newton converges superlinearly near the solution: the last increments
    // collapse fast.
    let mesh = TriMesh::unit_square(32);
    let config = SolveConfig { scheme: Scheme::Newton, ..SolveConfig::default() };
    let (_, report) =
        solve_nonlinear(&mesh, &law, |_, _| 2.0, |x, y| plaplace_exact(p, x, y), &config)?;
    println!("Newton increment history on n=32:");
    for (k, inc) in report.increments.iter().enumerate() {
        println!("  step {:2}: {inc:.3e}", k + 1);
    }
    Ok(())
}
