//! Sparse symmetric linear algebra for the P1 systems.
//!
//! Assembly accumulates into sorted row vectors (both triangles stored, so
//! matrix-vector products need no symmetry bookkeeping). Solves use an
//! envelope Cholesky factorization after reverse Cuthill-McKee reordering;
//! on the structured meshes here the envelope stays near the grid
//! bandwidth, which keeps the direct solve cheap up to the finest study
//! meshes. A solve runs two steps of iterative refinement and verifies the
//! final residual, so a returned solution is always certified.

use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct SparseMatrix {
    n: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseMatrix {
    pub fn new(n: usize) -> Self {
        SparseMatrix { n, rows: vec![Vec::new(); n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Accumulates `v` into entry (i, j).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let row = &mut self.rows[i];
        match row.binary_search_by_key(&j, |e| e.0) {
            Ok(pos) => row[pos].1 += v,
            Err(pos) => row.insert(pos, (j, v)),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self.rows[i].binary_search_by_key(&j, |e| e.0) {
            Ok(pos) => self.rows[i][pos].1,
            Err(_) => 0.0,
        }
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(j, v)| v * x[j]).sum())
            .collect()
    }

    /// Replaces row `i` by the identity row.
    pub fn set_unit_row(&mut self, i: usize) {
        self.rows[i] = vec![(i, 1.0)];
    }

    /// Zeroes the entry (i, j) and returns its previous value.
    pub fn take(&mut self, i: usize, j: usize) -> f64 {
        match self.rows[i].binary_search_by_key(&j, |e| e.0) {
            Ok(pos) => std::mem::take(&mut self.rows[i][pos].1),
            Err(_) => 0.0,
        }
    }

    fn max_abs(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|r| r.iter().map(|e| e.1.abs()))
            .fold(0.0, f64::max)
    }
}

/// Reverse Cuthill-McKee ordering of the matrix graph; returns the
/// permutation as `perm[new] = old`. Components are processed from
/// pseudo-peripheral starting vertices found by repeated breadth-first
/// sweeps.
fn reverse_cuthill_mckee(a: &SparseMatrix) -> Vec<usize> {
    let n = a.n();
    let degree = |v: usize| a.row(v).len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    let bfs = |start: usize, visited_in: &[bool]| -> Vec<usize> {
        let mut seen = visited_in.to_vec();
        let mut queue = std::collections::VecDeque::new();
        let mut out = Vec::new();
        seen[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            out.push(v);
            let mut nbrs: Vec<usize> = a
                .row(v)
                .iter()
                .map(|e| e.0)
                .filter(|&u| u != v && !seen[u])
                .collect();
            nbrs.sort_by_key(|&u| (degree(u), u));
            for u in nbrs {
                seen[u] = true;
                queue.push_back(u);
            }
        }
        out
    };

    while order.len() < n {
        let start = (0..n)
            .filter(|&v| !visited[v])
            .min_by_key(|&v| (degree(v), v))
            .unwrap();
        // Two sweeps toward a pseudo-peripheral vertex shrink the level
        // width, then the final sweep defines the ordering.
        let sweep1 = bfs(start, &visited);
        let far = *sweep1.last().unwrap();
        let component = bfs(far, &visited);
        for &v in &component {
            visited[v] = true;
        }
        order.extend(component);
    }
    order.reverse();
    order
}

/// Envelope (skyline) Cholesky factor of an RCM-permuted SPD matrix.
#[derive(Debug)]
pub struct SkylineCholesky {
    /// perm[new] = old.
    perm: Vec<usize>,
    jmin: Vec<usize>,
    offsets: Vec<usize>,
    data: Vec<f64>,
}

impl SkylineCholesky {
    pub fn factor(a: &SparseMatrix) -> Result<Self> {
        let n = a.n();
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut jmin = vec![0usize; n];
        for new in 0..n {
            let mut lo = new;
            for &(j_old, _) in a.row(perm[new]) {
                lo = lo.min(inv[j_old]);
            }
            jmin[new] = lo;
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + (i - jmin[i] + 1);
        }
        let mut data = vec![0.0f64; offsets[n]];
        for new in 0..n {
            for &(j_old, v) in a.row(perm[new]) {
                let j = inv[j_old];
                if j <= new {
                    data[offsets[new] + (j - jmin[new])] = v;
                }
            }
        }
        // In-place row-oriented factorization.
        for i in 0..n {
            let (done, row_i) = data.split_at_mut(offsets[i]);
            let row_i = &mut row_i[..(i - jmin[i] + 1)];
            for j in jmin[i]..i {
                let row_j = &done[offsets[j]..offsets[j + 1]];
                let lo = jmin[i].max(jmin[j]);
                let mut s = row_i[j - jmin[i]];
                for k in lo..j {
                    s -= row_i[k - jmin[i]] * row_j[k - jmin[j]];
                }
                row_i[j - jmin[i]] = s / row_j[j - jmin[j]];
            }
            let mut d = row_i[i - jmin[i]];
            for k in jmin[i]..i {
                let v = row_i[k - jmin[i]];
                d -= v * v;
            }
            if !(d > 0.0) {
                return Err(Error::Data(format!(
                    "matrix is not positive definite (pivot {d:.3e} at reordered row {i})"
                )));
            }
            row_i[i - jmin[i]] = d.sqrt();
        }
        Ok(SkylineCholesky { perm, jmin, offsets, data })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.perm.len();
        assert_eq!(b.len(), n);
        let mut y: Vec<f64> = (0..n).map(|i| b[self.perm[i]]).collect();
        for i in 0..n {
            let row = &self.data[self.offsets[i]..self.offsets[i + 1]];
            let mut s = y[i];
            for k in self.jmin[i]..i {
                s -= row[k - self.jmin[i]] * y[k];
            }
            y[i] = s / row[i - self.jmin[i]];
        }
        for i in (0..n).rev() {
            let row = &self.data[self.offsets[i]..self.offsets[i + 1]];
            let xi = y[i] / row[i - self.jmin[i]];
            y[i] = xi;
            for k in self.jmin[i]..i {
                y[k] -= row[k - self.jmin[i]] * xi;
            }
        }
        let mut x = vec![0.0; n];
        for i in 0..n {
            x[self.perm[i]] = y[i];
        }
        x
    }
}

/// Direct SPD solve with two steps of iterative refinement and a residual
/// certificate: the final residual must not exceed 1e-12 of the problem
/// scale `|A| |x| + |b|` (infinity norms).
pub fn solve_spd(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let chol = SkylineCholesky::factor(a)?;
    let mut x = chol.solve(b);
    for _ in 0..2 {
        let ax = a.matvec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let correction = chol.solve(&r);
        for (xi, ci) in x.iter_mut().zip(&correction) {
            *xi += ci;
        }
    }
    let ax = a.matvec(&x);
    let res = b
        .iter()
        .zip(&ax)
        .map(|(bi, ai)| (bi - ai).abs())
        .fold(0.0, f64::max);
    let xinf = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let binf = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let scale = a.max_abs() * xinf + binf;
    if res > 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NoConvergence(format!(
            "linear solve residual {res:.3e} exceeds 1e-12 of scale {scale:.3e}"
        )));
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn laplacian_1d(n: usize) -> SparseMatrix {
        let mut a = SparseMatrix::new(n);
        for i in 0..n {
            a.add(i, i, 2.0);
            if i + 1 < n {
                a.add(i, i + 1, -1.0);
                a.add(i + 1, i, -1.0);
            }
        }
        a
    }

    #[test]
    fn accumulation_and_matvec() {
        let mut a = SparseMatrix::new(3);
        a.add(0, 1, 2.0);
        a.add(0, 1, 0.5);
        a.add(2, 0, 1.0);
        assert_eq!(a.get(0, 1), 2.5);
        assert_eq!(a.get(1, 0), 0.0);
        let y = a.matvec(&[1.0, 2.0, 3.0]);
        assert_eq!(y, vec![5.0, 0.0, 1.0]);
    }

    #[test]
    fn solves_tridiagonal_system_exactly() {
        let n = 50;
        let a = laplacian_1d(n);
        // Exact solution of -u'' = 0 with u(0)=0, u(n+1)=1 discretized:
        // linear profile; rhs is zero except the last entry.
        let mut b = vec![0.0; n];
        b[n - 1] = 1.0;
        let x = solve_spd(&a, &b).unwrap();
        for (i, xi) in x.iter().enumerate() {
            assert_relative_eq!(*xi, (i + 1) as f64 / (n + 1) as f64, epsilon = 1e-12);
        }
    }

    #[test]
    fn matches_dense_solver_on_random_spd_system() {
        let n = 40;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // Random sparse SPD matrix: diagonally dominant with random sparse
        // couplings.
        let mut a = SparseMatrix::new(n);
        for i in 0..n {
            a.add(i, i, 10.0 + rng.gen_range(0.0..1.0));
        }
        for _ in 0..3 * n {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            if i != j {
                let v = rng.gen_range(-0.5..0.5);
                a.add(i, j, v);
                a.add(j, i, v);
            }
        }
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = solve_spd(&a, &b).unwrap();

        let mut dense = nalgebra::DMatrix::zeros(n, n);
        for i in 0..n {
            for &(j, v) in a.row(i) {
                dense[(i, j)] = v;
            }
        }
        let xd = nalgebra::Cholesky::new(dense)
            .unwrap()
            .solve(&nalgebra::DVector::from_vec(b.clone()));
        for i in 0..n {
            assert_relative_eq!(x[i], xd[i], epsilon = 1e-10);
        }
    }

    #[test]
    fn rejects_indefinite_matrix() {
        let mut a = SparseMatrix::new(2);
        a.add(0, 0, 1.0);
        a.add(1, 1, -1.0);
        assert!(matches!(SkylineCholesky::factor(&a), Err(Error::Data(_))));
    }

    #[test]
    fn rcm_reduces_envelope_on_grid_graph() {
        // 2D 5-point grid numbered randomly: RCM should bring the envelope
        // near the grid bandwidth.
        let n = 15usize;
        let id = |i: usize, j: usize| j * n + i;
        let mut a = SparseMatrix::new(n * n);
        for j in 0..n {
            for i in 0..n {
                a.add(id(i, j), id(i, j), 4.0);
                if i + 1 < n {
                    a.add(id(i, j), id(i + 1, j), -1.0);
                    a.add(id(i + 1, j), id(i, j), -1.0);
                }
                if j + 1 < n {
                    a.add(id(i, j), id(i, j + 1), -1.0);
                    a.add(id(i, j + 1), id(i, j), -1.0);
                }
            }
        }
        let chol = SkylineCholesky::factor(&a).unwrap();
        let envelope = chol.data.len();
        // Bandwidth-n storage would be about n^2 * (n + 1) entries.
        assert!(
            envelope <= n * n * (n + 2),
            "envelope {envelope} too large for {} unknowns",
            n * n
        );
        // And the factorization actually solves.
        let b = vec![1.0; n * n];
        let x = solve_spd(&a, &b).unwrap();
        let r = a.matvec(&x);
        for (ri, bi) in r.iter().zip(&b) {
            assert_relative_eq!(*ri, *bi, epsilon = 1e-11);
        }
    }

    #[test]
    fn handles_disconnected_components() {
        let mut a = SparseMatrix::new(4);
        a.add(0, 0, 2.0);
        a.add(1, 1, 3.0);
        a.add(2, 2, 4.0);
        a.add(3, 3, 5.0);
        a.add(0, 1, -1.0);
        a.add(1, 0, -1.0);
        let b = vec![1.0, 1.0, 4.0, 10.0];
        let x = solve_spd(&a, &b).unwrap();
        assert_relative_eq!(x[2], 1.0, epsilon = 1e-13);
        assert_relative_eq!(x[3], 2.0, epsilon = 1e-13);
        assert_relative_eq!(2.0 * x[0] - x[1], 1.0, epsilon = 1e-12);
    }
}
