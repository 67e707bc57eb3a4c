//! Piecewise-linear finite elements for the quasilinear diffusion problem.
//!
//! The weak form is `(nu(|grad u|) grad u, grad v) = (J, v)` with Dirichlet
//! boundary. P1 gradients are constant per triangle, so the nonlinear
//! coefficient needs only one evaluation per element: fixed-point
//! (Kacanov) matrices use the scalar `nu`, Newton matrices the full
//! differential reluctivity tensor. Error norms against analytic solutions
//! integrate with a degree-4 rule; norms of nodal fields are exact.

pub mod mesh;
pub mod sparse;

pub use mesh::TriMesh;
pub use sparse::{solve_spd, SparseMatrix};

use crate::material::MaterialLaw;
use crate::Result;

/// Six-point degree-4 rule on the reference triangle: barycentric
/// coordinates with weights normalized to sum to one.
const QUAD_DEG4: [([f64; 3], f64); 6] = [
    (
        [0.108_103_018_168_070, 0.445_948_490_915_965, 0.445_948_490_915_965],
        0.223_381_589_678_011,
    ),
    (
        [0.445_948_490_915_965, 0.108_103_018_168_070, 0.445_948_490_915_965],
        0.223_381_589_678_011,
    ),
    (
        [0.445_948_490_915_965, 0.445_948_490_915_965, 0.108_103_018_168_070],
        0.223_381_589_678_011,
    ),
    (
        [0.816_847_572_980_459, 0.091_576_213_509_771, 0.091_576_213_509_771],
        0.109_951_743_655_322,
    ),
    (
        [0.091_576_213_509_771, 0.816_847_572_980_459, 0.091_576_213_509_771],
        0.109_951_743_655_322,
    ),
    (
        [0.091_576_213_509_771, 0.091_576_213_509_771, 0.816_847_572_980_459],
        0.109_951_743_655_322,
    ),
];

/// Constant gradient of a nodal field on one triangle.
pub fn tri_gradient(mesh: &TriMesh, u: &[f64], t: usize) -> [f64; 2] {
    let (_, grads) = mesh.tri_geometry(t);
    let idx = mesh.triangles()[t];
    let mut g = [0.0; 2];
    for k in 0..3 {
        g[0] += u[idx[k]] * grads[k][0];
        g[1] += u[idx[k]] * grads[k][1];
    }
    g
}

/// Stiffness matrix with a constant scalar coefficient.
pub fn stiffness_matrix(mesh: &TriMesh, nu: f64) -> SparseMatrix {
    let mut a = SparseMatrix::new(mesh.n_vertices());
    for t in 0..mesh.n_triangles() {
        let (area, grads) = mesh.tri_geometry(t);
        let idx = mesh.triangles()[t];
        for i in 0..3 {
            for j in 0..3 {
                let v = nu * area * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
                a.add(idx[i], idx[j], v);
            }
        }
    }
    a
}

/// Relative floor on the element coefficient in linearized matrices.
/// Degenerate laws (the power family near zero gradient) can otherwise
/// spread element coefficients over enough orders of magnitude to break
/// the Cholesky factorization; lifting them to 1e-10 of the largest
/// element coefficient bounds the condition number without measurably
/// perturbing linearizations whose coefficients are balanced.
const COEFF_FLOOR_REL: f64 = 1e-10;

fn element_coefficients(mesh: &TriMesh, law: &MaterialLaw, u_prev: &[f64]) -> (Vec<f64>, f64) {
    let nus: Vec<f64> = (0..mesh.n_triangles())
        .map(|t| {
            let g = tri_gradient(mesh, u_prev, t);
            law.nu((g[0] * g[0] + g[1] * g[1]).sqrt())
        })
        .collect();
    let nu_max = nus.iter().fold(0.0f64, |m, &v| m.max(v));
    (nus, nu_max * COEFF_FLOOR_REL)
}

/// Stiffness matrix with the scalar coefficient `nu(|grad u_prev|)` frozen
/// per triangle (the fixed-point linearization).
pub fn kacanov_matrix(mesh: &TriMesh, law: &MaterialLaw, u_prev: &[f64]) -> SparseMatrix {
    let (nus, floor) = element_coefficients(mesh, law, u_prev);
    let mut a = SparseMatrix::new(mesh.n_vertices());
    for t in 0..mesh.n_triangles() {
        let (area, grads) = mesh.tri_geometry(t);
        let nu = nus[t].max(floor);
        let idx = mesh.triangles()[t];
        for i in 0..3 {
            for j in 0..3 {
                let v = nu * area * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
                a.add(idx[i], idx[j], v);
            }
        }
    }
    a
}

/// Stiffness matrix with the differential reluctivity tensor at `u_prev`
/// (the Newton linearization). Elements whose scalar coefficient sits
/// below the conditioning floor fall back to the floored isotropic
/// coefficient.
pub fn newton_matrix(mesh: &TriMesh, law: &MaterialLaw, u_prev: &[f64]) -> Result<SparseMatrix> {
    let (nus, floor) = element_coefficients(mesh, law, u_prev);
    let mut a = SparseMatrix::new(mesh.n_vertices());
    for t in 0..mesh.n_triangles() {
        let (area, grads) = mesh.tri_geometry(t);
        let g = tri_gradient(mesh, u_prev, t);
        let idx = mesh.triangles()[t];
        if nus[t] < floor {
            for i in 0..3 {
                for j in 0..3 {
                    let v =
                        floor * area * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
                    a.add(idx[i], idx[j], v);
                }
            }
            continue;
        }
        let tensor = law.diff_reluctivity(&g)?;
        for i in 0..3 {
            let tg = tensor.apply(&grads[i]);
            for j in 0..3 {
                a.add(idx[i], idx[j], area * (tg[0] * grads[j][0] + tg[1] * grads[j][1]));
            }
        }
    }
    Ok(a)
}

/// P1 mass matrix (exact).
pub fn mass_matrix(mesh: &TriMesh) -> SparseMatrix {
    let mut m = SparseMatrix::new(mesh.n_vertices());
    for t in 0..mesh.n_triangles() {
        let (area, _) = mesh.tri_geometry(t);
        let idx = mesh.triangles()[t];
        for i in 0..3 {
            for j in 0..3 {
                let v = area / 12.0 * if i == j { 2.0 } else { 1.0 };
                m.add(idx[i], idx[j], v);
            }
        }
    }
    m
}

/// Load vector of a source density, integrated with the edge-midpoint rule
/// (exact for quadratic sources, in particular for constants).
pub fn load_vector(mesh: &TriMesh, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let mut b = vec![0.0; mesh.n_vertices()];
    for t in 0..mesh.n_triangles() {
        let (area, _) = mesh.tri_geometry(t);
        let idx = mesh.triangles()[t];
        let p: Vec<[f64; 2]> = idx.iter().map(|&v| mesh.vertices()[v]).collect();
        for (i, j) in [(0, 1), (1, 2), (2, 0)] {
            let mx = 0.5 * (p[i][0] + p[j][0]);
            let my = 0.5 * (p[i][1] + p[j][1]);
            let fv = f(mx, my) * area / 3.0;
            // The P1 hat of each endpoint is 1/2 at the midpoint.
            b[idx[i]] += 0.5 * fv;
            b[idx[j]] += 0.5 * fv;
        }
    }
    b
}

/// Residual of the nonlinear system, `b - A(u) u`, assembled directly from
/// the flux.
pub fn residual(mesh: &TriMesh, law: &MaterialLaw, u: &[f64], b: &[f64]) -> Vec<f64> {
    let mut r = b.to_vec();
    for t in 0..mesh.n_triangles() {
        let (area, grads) = mesh.tri_geometry(t);
        let g = tri_gradient(mesh, u, t);
        let nu = law.nu((g[0] * g[0] + g[1] * g[1]).sqrt());
        let idx = mesh.triangles()[t];
        for i in 0..3 {
            r[idx[i]] -= nu * area * (g[0] * grads[i][0] + g[1] * grads[i][1]);
        }
    }
    r
}

/// Right-hand side of a first-order sensitivity problem:
/// `-(nu_dir(|grad u|) grad u, grad v)`, where `nu_dir` is the derivative
/// of the reluctivity with respect to the perturbed parameter.
pub fn sensitivity_rhs(mesh: &TriMesh, nu_dir: impl Fn(f64) -> f64, u: &[f64]) -> Vec<f64> {
    let mut r = vec![0.0; mesh.n_vertices()];
    for t in 0..mesh.n_triangles() {
        let (area, grads) = mesh.tri_geometry(t);
        let g = tri_gradient(mesh, u, t);
        let nd = nu_dir((g[0] * g[0] + g[1] * g[1]).sqrt());
        let idx = mesh.triangles()[t];
        for i in 0..3 {
            r[idx[i]] -= nd * area * (g[0] * grads[i][0] + g[1] * grads[i][1]);
        }
    }
    r
}

/// Symmetric Dirichlet elimination: constrained rows become identity rows,
/// their couplings move to the right-hand side, and `rhs` gets the
/// prescribed values.
pub fn apply_dirichlet(a: &mut SparseMatrix, rhs: &mut [f64], flags: &[bool], values: &[f64]) {
    let n = a.n();
    assert_eq!(flags.len(), n);
    assert_eq!(values.len(), n);
    for i in 0..n {
        if flags[i] {
            continue;
        }
        let row: Vec<(usize, f64)> = a
            .row(i)
            .iter()
            .copied()
            .filter(|&(j, _)| flags[j])
            .collect();
        for (j, _) in &row {
            let v = a.take(i, *j);
            rhs[i] -= v * values[*j];
        }
    }
    for i in 0..n {
        if flags[i] {
            a.set_unit_row(i);
            rhs[i] = values[i];
        }
    }
}

/// Exact L2 norm of a nodal field.
pub fn l2_norm(mesh: &TriMesh, u: &[f64]) -> f64 {
    let mut acc = 0.0;
    for t in 0..mesh.n_triangles() {
        let (area, _) = mesh.tri_geometry(t);
        let [a, b, c] = mesh.triangles()[t];
        let (ua, ub, uc) = (u[a], u[b], u[c]);
        acc += area / 6.0 * (ua * ua + ub * ub + uc * uc + ua * ub + ub * uc + uc * ua);
    }
    acc.sqrt()
}

/// Exact H1 seminorm of a nodal field.
pub fn h1_seminorm(mesh: &TriMesh, u: &[f64]) -> f64 {
    let mut acc = 0.0;
    for t in 0..mesh.n_triangles() {
        let (area, _) = mesh.tri_geometry(t);
        let g = tri_gradient(mesh, u, t);
        acc += area * (g[0] * g[0] + g[1] * g[1]);
    }
    acc.sqrt()
}

/// L2 distance between a nodal field and an analytic function (degree-4
/// quadrature).
pub fn l2_error(mesh: &TriMesh, u: &[f64], exact: impl Fn(f64, f64) -> f64) -> f64 {
    let mut acc = 0.0;
    for t in 0..mesh.n_triangles() {
        let (area, _) = mesh.tri_geometry(t);
        let idx = mesh.triangles()[t];
        let p: Vec<[f64; 2]> = idx.iter().map(|&v| mesh.vertices()[v]).collect();
        for (bary, w) in QUAD_DEG4 {
            let x = bary[0] * p[0][0] + bary[1] * p[1][0] + bary[2] * p[2][0];
            let y = bary[0] * p[0][1] + bary[1] * p[1][1] + bary[2] * p[2][1];
            let uh = bary[0] * u[idx[0]] + bary[1] * u[idx[1]] + bary[2] * u[idx[2]];
            let d = uh - exact(x, y);
            acc += w * area * d * d;
        }
    }
    acc.sqrt()
}

/// H1-seminorm distance between a nodal field and an analytic gradient.
pub fn h1_semi_error(mesh: &TriMesh, u: &[f64], grad: impl Fn(f64, f64) -> [f64; 2]) -> f64 {
    let mut acc = 0.0;
    for t in 0..mesh.n_triangles() {
        let (area, _) = mesh.tri_geometry(t);
        let idx = mesh.triangles()[t];
        let p: Vec<[f64; 2]> = idx.iter().map(|&v| mesh.vertices()[v]).collect();
        let gh = tri_gradient(mesh, u, t);
        for (bary, w) in QUAD_DEG4 {
            let x = bary[0] * p[0][0] + bary[1] * p[1][0] + bary[2] * p[2][0];
            let y = bary[0] * p[0][1] + bary[1] * p[1][1] + bary[2] * p[2][1];
            let ge = grad(x, y);
            let (dx, dy) = (gh[0] - ge[0], gh[1] - ge[1]);
            acc += w * area * (dx * dx + dy * dy);
        }
    }
    acc.sqrt()
}

/// Range of gradient magnitudes over the mesh (used to place the operating
/// region of a material law).
pub fn gradient_range(mesh: &TriMesh, u: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for t in 0..mesh.n_triangles() {
        let g = tri_gradient(mesh, u, t);
        let m = (g[0] * g[0] + g[1] * g[1]).sqrt();
        lo = lo.min(m);
        hi = hi.max(m);
    }
    (lo, hi)
}
