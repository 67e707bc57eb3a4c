//! Conforming triangle meshes for the model domains.
//!
//! Meshes are structured: a diagonally split square grid on the unit
//! square, and the same construction on the L-shaped domain (the square
//! [-1,1]^2 with its upper-right quadrant removed, reentrant corner at the
//! origin). Uniform refinement quadrisects every triangle through edge
//! midpoints. Boundary vertices are recomputed from edge incidence, so
//! refinement and ad-hoc constructions stay consistent.

use std::collections::HashMap;

#[derive(Debug, Clone)]
pub struct TriMesh {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<bool>,
}

impl TriMesh {
    /// Builds a mesh from raw arrays; triangles must be counterclockwise.
    /// Boundary flags are derived from edge incidence (an edge belonging to
    /// exactly one triangle is a boundary edge).
    pub fn from_raw(vertices: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>) -> Self {
        let boundary = boundary_flags(vertices.len(), &triangles);
        TriMesh { vertices, triangles, boundary }
    }

    /// Unit square (0,1)^2 with an n x n grid, each cell split along the
    /// diagonal toward the upper right: 2 n^2 triangles.
    pub fn unit_square(n: usize) -> Self {
        assert!(n >= 1);
        let idx = |i: usize, j: usize| j * (n + 1) + i;
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([i as f64 / n as f64, j as f64 / n as f64]);
            }
        }
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (v00, v10) = (idx(i, j), idx(i + 1, j));
                let (v01, v11) = (idx(i, j + 1), idx(i + 1, j + 1));
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }
        Self::from_raw(vertices, triangles)
    }

    /// L-shaped domain [-1,1]^2 minus the (open) upper-right unit square,
    /// reentrant corner at the origin; cell width 1/n, 6 n^2 triangles.
    pub fn l_shape(n: usize) -> Self {
        assert!(n >= 1);
        let m = 2 * n;
        let coord = |k: usize| -1.0 + k as f64 / n as f64;
        let keep = |i: usize, j: usize| !(i >= n && j >= n);
        let mut index = HashMap::new();
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for j in 0..m {
            for i in 0..m {
                if !keep(i, j) {
                    continue;
                }
                let mut corner = |ci: usize, cj: usize| -> usize {
                    *index.entry((ci, cj)).or_insert_with(|| {
                        vertices.push([coord(ci), coord(cj)]);
                        vertices.len() - 1
                    })
                };
                let (v00, v10) = (corner(i, j), corner(i + 1, j));
                let (v01, v11) = (corner(i, j + 1), corner(i + 1, j + 1));
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }
        Self::from_raw(vertices, triangles)
    }

    /// Uniform refinement: every triangle is split into four through its
    /// edge midpoints.
    pub fn refine(&self) -> Self {
        let mut vertices = self.vertices.clone();
        let mut midpoint = HashMap::new();
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<[f64; 2]>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoint.entry(key).or_insert_with(|| {
                let (p, q) = (vertices[a], vertices[b]);
                vertices.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
                vertices.len() - 1
            })
        };
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for &[a, b, c] in &self.triangles {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            triangles.push([a, ab, ca]);
            triangles.push([ab, b, bc]);
            triangles.push([ca, bc, c]);
            triangles.push([ab, bc, ca]);
        }
        Self::from_raw(vertices, triangles)
    }

    /// Refines `times` levels.
    pub fn refined(&self, times: usize) -> Self {
        let mut mesh = self.clone();
        for _ in 0..times {
            mesh = mesh.refine();
        }
        mesh
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Per-vertex boundary flags.
    pub fn boundary(&self) -> &[bool] {
        &self.boundary
    }

    pub fn n_interior(&self) -> usize {
        self.boundary.iter().filter(|&&b| !b).count()
    }

    /// Signed doubled area and the constant barycentric gradients of a
    /// triangle.
    pub fn tri_geometry(&self, t: usize) -> (f64, [[f64; 2]; 3]) {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        let det = (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]);
        let grads = [
            [(pb[1] - pc[1]) / det, (pc[0] - pb[0]) / det],
            [(pc[1] - pa[1]) / det, (pa[0] - pc[0]) / det],
            [(pa[1] - pb[1]) / det, (pb[0] - pa[0]) / det],
        ];
        (0.5 * det, grads)
    }

    pub fn area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.tri_geometry(t).0).sum()
    }

    /// Longest edge in the mesh.
    pub fn h_max(&self) -> f64 {
        let mut h: f64 = 0.0;
        for &[a, b, c] in &self.triangles {
            for (i, j) in [(a, b), (b, c), (c, a)] {
                let (p, q) = (self.vertices[i], self.vertices[j]);
                h = h.max(((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt());
            }
        }
        h
    }

    /// Smallest triangle shape quality 2 r_in / r_circ over the mesh
    /// (equilateral = 1); the structured right-isosceles cells sit at
    /// about 0.83.
    pub fn min_quality(&self) -> f64 {
        let mut q = f64::INFINITY;
        for &[a, b, c] in &self.triangles {
            let edge = |i: usize, j: usize| {
                let (p, r) = (self.vertices[i], self.vertices[j]);
                ((p[0] - r[0]).powi(2) + (p[1] - r[1]).powi(2)).sqrt()
            };
            let (la, lb, lc) = (edge(b, c), edge(c, a), edge(a, b));
            let s = 0.5 * (la + lb + lc);
            let area2 = (s * (s - la) * (s - lb) * (s - lc)).max(0.0);
            let area = area2.sqrt();
            let r_in = area / s;
            let r_circ = la * lb * lc / (4.0 * area);
            q = q.min(2.0 * r_in / r_circ);
        }
        q
    }

    /// Nodal interpolation of a function.
    pub fn interpolate(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        self.vertices.iter().map(|p| f(p[0], p[1])).collect()
    }
}

fn boundary_flags(n_vertices: usize, triangles: &[[usize; 3]]) -> Vec<bool> {
    let mut edge_count: HashMap<(usize, usize), u32> = HashMap::new();
    for &[a, b, c] in triangles {
        for (i, j) in [(a, b), (b, c), (c, a)] {
            *edge_count.entry((i.min(j), i.max(j))).or_insert(0) += 1;
        }
    }
    let mut flags = vec![false; n_vertices];
    for ((i, j), count) in edge_count {
        debug_assert!(count <= 2, "edge shared by more than two triangles");
        if count == 1 {
            flags[i] = true;
            flags[j] = true;
        }
    }
    flags
}
