//! Tensor and Smolyak collocation grids on a parameter box.
//!
//! Compares point counts as the dimension grows, checks that both grids
//! integrate polynomials exactly, and interpolates a smooth function.

use ferrouq::grids::{smolyak_grid, tensor_grid};

fn main() {
    // Point-count growth: the tensor grid is exponential in M, the sparse
    // grid close to polynomial.
    println!("  M   tensor q=6   sparse q=3   sparse q=5");
    for m in 1..=4 {
        let domain = vec![(-1.0, 1.0); m];
        println!(
            "  {m}   {:10}   {:10}   {:10}",
            tensor_grid(6, &domain).len(),
            smolyak_grid(3, &domain).len(),
            smolyak_grid(5, &domain).len()
        );
    }

    // Both rules integrate low-degree polynomials exactly with probability
    // weights (expectation of uniform coordinates).
    let domain = vec![(0.0, 2.0), (-1.0, 1.0)];
    let f = |y: &[f64]| y[0].powi(3) * y[1].powi(2) + 0.5 * y[0];
    // E[y0^3] on U(0,2) is 2, E[y1^2] on U(-1,1) is 1/3; E[y0] = 1.
    let exact = 2.0 / 3.0 + 0.5;
    for (name, grid) in [
        ("tensor q=3", tensor_grid(3, &domain)),
        ("sparse q=3", smolyak_grid(3, &domain)),
    ] {
        let values: Vec<f64> = grid.points().iter().map(|y| f(y)).collect();
        let mean = grid.expectation(&values);
        println!(
            "\n{name}: {} points, E[f] = {mean:.15} (exact {exact:.15})",
            grid.len()
        );
        let weight_sum: f64 = grid.weights().iter().sum();
        println!("{name}: weights sum to {weight_sum:.15}");
    }

    // Grid values act as Lagrange interpolation data.
    let grid = tensor_grid(9, &domain);
    let values: Vec<f64> = grid.points().iter().map(|y| (y[0] + y[1]).sin()).collect();
    let probe = [1.37, -0.41];
    let interpolated = grid.interpolate(&values, &probe);
    let exact = (probe[0] + probe[1]).sin();
    println!(
        "\ninterpolation of sin(y0+y1) at ({}, {}): {interpolated:.12} vs {exact:.12}",
        probe[0], probe[1]
    );
}
