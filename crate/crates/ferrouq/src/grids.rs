//! Collocation grids on boxes with uniform probability measure.
//!
//! One-dimensional rules are Gauss-Legendre; multi-dimensional grids are
//! either full tensor products (level q gives q+1 points per dimension) or
//! Smolyak sparse constructions built from rules with 1, 2^j + 1, ... points
//! per level. Weights are normalized to the uniform probability measure, so
//! expectations are plain weighted sums. Gauss-Legendre nodes are not
//! nested, so the sparse construction keeps every component grid for
//! interpolation and merges only bitwise-coinciding points (the shared zero
//! node of odd rules) in the flattened point list.

use crate::{Error, Result};
use std::collections::HashMap;

/// Gauss-Legendre nodes and weights on [-1, 1]; weights sum to 2. Nodes are
/// found by Newton iteration on P_n from Chebyshev initial guesses and
/// symmetrized, so the zero node of odd rules is exact.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "empty quadrature rule");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n / 2 {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut converged = false;
        for _ in 0..100 {
            let (p, d) = legendre_with_deriv(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-15 {
                converged = true;
                break;
            }
        }
        assert!(converged, "Gauss-Legendre Newton iteration stalled for n = {n}");
        let (_, dp) = legendre_with_deriv(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        let (_, dp) = legendre_with_deriv(n, 0.0);
        nodes[n / 2] = 0.0;
        weights[n / 2] = 2.0 / (dp * dp);
    }
    (nodes, weights)
}

/// Value and derivative of the Legendre polynomial P_n via the three-term
/// recurrence; the derivative uses n (x P_n - P_{n-1}) / (x^2 - 1).
fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// One-dimensional collocation rule on [a, b] with weights normalized to
/// the uniform probability measure (weights sum to 1).
#[derive(Debug, Clone)]
pub struct Rule1d {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule1d {
    pub fn gauss_uniform(n: usize, a: f64, b: f64) -> Self {
        let (x, w) = gauss_legendre(n);
        let c = 0.5 * (a + b);
        let r = 0.5 * (b - a);
        Rule1d {
            nodes: x.iter().map(|&t| c + r * t).collect(),
            weights: w.iter().map(|&t| 0.5 * t).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Barycentric weights for Lagrange interpolation on this rule's nodes,
    /// normalized to unit maximum magnitude.
    fn barycentric(&self) -> Vec<f64> {
        let n = self.nodes.len();
        let mut w = vec![1.0; n];
        for j in 0..n {
            for k in 0..n {
                if k != j {
                    w[j] /= self.nodes[j] - self.nodes[k];
                }
            }
        }
        let scale = w.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for v in w.iter_mut() {
            *v /= scale;
        }
        w
    }
}

/// Values that can be averaged over grid points: scalars and nodal vectors.
pub trait GridValue: Clone {
    fn zero_like(&self) -> Self;
    fn axpy(&mut self, c: f64, other: &Self);
}

impl GridValue for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn axpy(&mut self, c: f64, other: &Self) {
        *self += c * other;
    }
}

impl GridValue for Vec<f64> {
    fn zero_like(&self) -> Self {
        vec![0.0; self.len()]
    }
    fn axpy(&mut self, c: f64, other: &Self) {
        assert_eq!(self.len(), other.len());
        for (a, b) in self.iter_mut().zip(other) {
            *a += c * b;
        }
    }
}

/// One term of the combination formula: a full tensor grid with a signed
/// coefficient, mapping its local (lexicographic) points into the merged
/// point list of the parent grid.
#[derive(Debug, Clone)]
struct Component {
    coeff: f64,
    rules: Vec<Rule1d>,
    bary: Vec<Vec<f64>>,
    point_map: Vec<usize>,
}

impl Component {
    fn local_len(&self) -> usize {
        self.rules.iter().map(Rule1d::len).product()
    }

    /// Decodes a local lexicographic index (first dimension slowest) into
    /// per-dimension node indices.
    fn decode(&self, mut idx: usize, out: &mut [usize]) {
        for (m, rule) in self.rules.iter().enumerate().rev() {
            out[m] = idx % rule.len();
            idx /= rule.len();
        }
    }
}

/// Collocation grid on a box: merged points with signed weights summing to
/// one, plus the component tensor grids of the combination formula (a full
/// tensor grid is a single component with coefficient one).
#[derive(Debug, Clone)]
pub struct CollocationGrid {
    domain: Vec<(f64, f64)>,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
    components: Vec<Component>,
}

/// Number of points of the 1D rule at sparse-grid level j: 1, 3, 5, 9, ...
fn sparse_level_points(j: usize) -> usize {
    if j == 0 {
        1
    } else {
        (1usize << j) + 1
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Multi-indices of fixed dimension with given l1 norm, in lexicographic
/// order.
fn multi_indices_with_sum(dim: usize, sum: usize) -> Vec<Vec<usize>> {
    fn rec(dim: usize, sum: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if dim == 1 {
            prefix.push(sum);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for head in 0..=sum {
            prefix.push(head);
            rec(dim - 1, sum - head, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, sum, &mut Vec::new(), &mut out);
    out
}

/// Full tensor grid at level q: q + 1 Gauss-Legendre points per dimension.
pub fn tensor_grid(q: usize, domain: &[(f64, f64)]) -> CollocationGrid {
    let rules: Vec<Rule1d> =
        domain.iter().map(|&(a, b)| Rule1d::gauss_uniform(q + 1, a, b)).collect();
    CollocationGrid::from_components(domain, vec![(1.0, rules)])
}

/// Smolyak sparse grid at level q: the combination formula over component
/// tensor grids with level sums between q - dim + 1 and q, the component at
/// level j using 2^j + 1 points (one point at level zero).
pub fn smolyak_grid(q: usize, domain: &[(f64, f64)]) -> CollocationGrid {
    let dim = domain.len();
    assert!(dim >= 1);
    let mut components = Vec::new();
    let lo = q.saturating_sub(dim - 1);
    for level_sum in lo..=q {
        let sign = if (q - level_sum) % 2 == 0 { 1.0 } else { -1.0 };
        let coeff = sign * binomial(dim - 1, q - level_sum);
        if coeff == 0.0 {
            continue;
        }
        for j in multi_indices_with_sum(dim, level_sum) {
            let rules: Vec<Rule1d> = j
                .iter()
                .zip(domain)
                .map(|(&jm, &(a, b))| Rule1d::gauss_uniform(sparse_level_points(jm), a, b))
                .collect();
            components.push((coeff, rules));
        }
    }
    CollocationGrid::from_components(domain, components)
}

impl CollocationGrid {
    fn from_components(domain: &[(f64, f64)], parts: Vec<(f64, Vec<Rule1d>)>) -> Self {
        let dim = domain.len();
        let mut points: Vec<Vec<f64>> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        let mut seen: HashMap<Vec<i64>, usize> = HashMap::new();
        let mut components = Vec::new();

        for (coeff, rules) in parts {
            let bary = rules.iter().map(Rule1d::barycentric).collect();
            let mut comp =
                Component { coeff, rules, bary, point_map: Vec::new() };
            let mut idx = vec![0usize; dim];
            for local in 0..comp.local_len() {
                comp.decode(local, &mut idx);
                let point: Vec<f64> =
                    idx.iter().zip(&comp.rules).map(|(&i, r)| r.nodes[i]).collect();
                let w: f64 = idx.iter().zip(&comp.rules).map(|(&i, r)| r.weights[i]).product();
                // Points merge only when coordinates agree to 1e-14; the
                // rules are deterministic so true duplicates are bitwise
                // equal and land on the same key.
                let key: Vec<i64> = point.iter().map(|&x| (x * 1e14).round() as i64).collect();
                let merged = *seen.entry(key).or_insert_with(|| {
                    points.push(point);
                    weights.push(0.0);
                    points.len() - 1
                });
                weights[merged] += coeff * w;
                comp.point_map.push(merged);
            }
            components.push(comp);
        }

        // Sort the merged points lexicographically so identical inputs
        // always produce identical orderings.
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| {
            points[a]
                .iter()
                .zip(&points[b])
                .map(|(x, y)| x.total_cmp(y))
                .find(|c| c.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut rank = vec![0usize; points.len()];
        for (new, &old) in order.iter().enumerate() {
            rank[old] = new;
        }
        let points = order.iter().map(|&i| std::mem::take(&mut points[i])).collect();
        let weights = order.iter().map(|&i| weights[i]).collect();
        let mut components = components;
        for comp in components.iter_mut() {
            for m in comp.point_map.iter_mut() {
                *m = rank[*m];
            }
        }

        CollocationGrid { domain: domain.to_vec(), points, weights, components }
    }

    pub fn dim(&self) -> usize {
        self.domain.len()
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Signed merged weights; they sum to one.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Expectation of a quantity given its values at the grid points.
    pub fn expectation<T: GridValue>(&self, values: &[T]) -> T {
        assert_eq!(values.len(), self.points.len());
        let mut acc = values[0].zero_like();
        for (w, v) in self.weights.iter().zip(values) {
            acc.axpy(*w, v);
        }
        acc
    }

    /// Variance of a scalar quantity: E[v^2] - E[v]^2, clamped nonnegative
    /// (sparse-grid weights are signed, so roundoff may dip below zero).
    pub fn variance_scalar(&self, values: &[f64]) -> f64 {
        let sq: Vec<f64> = values.iter().map(|v| v * v).collect();
        let m: f64 = self.expectation(&values.to_vec());
        let m2: f64 = self.expectation(&sq);
        (m2 - m * m).max(0.0)
    }

    /// Pointwise variance of a nodal field.
    pub fn variance_field(&self, values: &[Vec<f64>]) -> Vec<f64> {
        assert_eq!(values.len(), self.points.len());
        let n = values[0].len();
        let mut mean = vec![0.0; n];
        let mut mean_sq = vec![0.0; n];
        for (w, v) in self.weights.iter().zip(values) {
            for k in 0..n {
                mean[k] += w * v[k];
                mean_sq[k] += w * v[k] * v[k];
            }
        }
        (0..n).map(|k| (mean_sq[k] - mean[k] * mean[k]).max(0.0)).collect()
    }

    /// Evaluates the grid's polynomial interpolant at `y`: per component, a
    /// tensor-product barycentric Lagrange interpolation of the nodal
    /// values, combined with the component coefficients.
    pub fn interpolate<T: GridValue>(&self, values: &[T], y: &[f64]) -> T {
        assert_eq!(values.len(), self.points.len());
        assert_eq!(y.len(), self.dim());
        let mut acc = values[0].zero_like();
        let mut idx = vec![0usize; self.dim()];
        for comp in &self.components {
            let cards: Vec<Vec<f64>> = comp
                .rules
                .iter()
                .zip(&comp.bary)
                .zip(y)
                .map(|((rule, bw), &ym)| cardinal_values(&rule.nodes, bw, ym))
                .collect();
            for local in 0..comp.local_len() {
                comp.decode(local, &mut idx);
                let weight: f64 = idx.iter().zip(&cards).map(|(&i, c)| c[i]).product();
                if weight != 0.0 {
                    acc.axpy(comp.coeff * weight, &values[comp.point_map[local]]);
                }
            }
        }
        acc
    }

    /// Checks the merged-point bookkeeping: for every component, the
    /// component's own interpolant evaluated at each of its points must
    /// reproduce the nodal value stored behind the merged index. Returns the
    /// largest mismatch over scalar probe values.
    pub fn merge_consistency_error(&self) -> f64 {
        // Probe with a fixed smooth scalar so distinct points get distinct
        // values.
        let probe: Vec<f64> = self
            .points
            .iter()
            .map(|p| p.iter().enumerate().map(|(m, x)| (m as f64 + 1.3) * x).sum::<f64>().sin())
            .collect();
        let mut idx = vec![0usize; self.dim()];
        let mut worst = 0.0f64;
        for comp in &self.components {
            for local in 0..comp.local_len() {
                comp.decode(local, &mut idx);
                let point: Vec<f64> =
                    idx.iter().zip(&comp.rules).map(|(&i, r)| r.nodes[i]).collect();
                let cards: Vec<Vec<f64>> = comp
                    .rules
                    .iter()
                    .zip(&comp.bary)
                    .zip(&point)
                    .map(|((rule, bw), &ym)| cardinal_values(&rule.nodes, bw, ym))
                    .collect();
                let mut value = 0.0;
                let mut jdx = vec![0usize; self.dim()];
                for l2 in 0..comp.local_len() {
                    comp.decode(l2, &mut jdx);
                    let w: f64 = jdx.iter().zip(&cards).map(|(&i, c)| c[i]).product();
                    value += w * probe[comp.point_map[l2]];
                }
                worst = worst.max((value - probe[comp.point_map[local]]).abs());
            }
        }
        worst
    }
}

/// Lagrange cardinal values l_j(y) on the given nodes via the barycentric
/// formula, with an exact branch when y coincides with a node.
fn cardinal_values(nodes: &[f64], bary: &[f64], y: f64) -> Vec<f64> {
    let n = nodes.len();
    if n == 1 {
        return vec![1.0];
    }
    let scale = nodes[n - 1] - nodes[0];
    for (j, &x) in nodes.iter().enumerate() {
        if (y - x).abs() < 1e-14 * scale.abs().max(1.0) {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            return e;
        }
    }
    let terms: Vec<f64> = nodes.iter().zip(bary).map(|(&x, &w)| w / (y - x)).collect();
    let total: f64 = terms.iter().sum();
    terms.iter().map(|t| t / total).collect()
}

/// Validates a requested grid kind string from configuration.
pub fn parse_grid_kind(s: &str) -> Result<GridKind> {
    match s {
        "tensor" => Ok(GridKind::Tensor),
        "sparse" | "smolyak" => Ok(GridKind::Sparse),
        other => Err(Error::Config(format!(
            "unknown grid kind '{other}', expected 'tensor' or 'sparse'"
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    Tensor,
    Sparse,
}

impl GridKind {
    pub fn build(self, q: usize, domain: &[(f64, f64)]) -> CollocationGrid {
        match self {
            GridKind::Tensor => tensor_grid(q, domain),
            GridKind::Sparse => smolyak_grid(q, domain),
        }
    }
}
