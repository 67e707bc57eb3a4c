//! Measured B-H sample tables: a shared grid of field magnitudes and one
//! monotone curve sample per measurement column.

use super::spline::{monotone_interpolate, three_point_hermite, CubicHermite};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Measured samples of a B-H curve: `columns[j][i]` is the j-th measured
/// curve at field magnitude `locations[i]`.
#[derive(Debug, Clone)]
pub struct MeasuredBhTable {
    locations: Vec<f64>,
    columns: Vec<Vec<f64>>,
}

impl MeasuredBhTable {
    /// Validates locations (finite, strictly increasing, positive) and
    /// columns (matching length, finite, nondecreasing).
    pub fn new(locations: Vec<f64>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if locations.len() < 2 {
            return Err(Error::Data("table needs at least two locations".into()));
        }
        if columns.is_empty() {
            return Err(Error::Data("table needs at least one sample column".into()));
        }
        if locations.iter().any(|s| !s.is_finite()) || locations[0] < 0.0 {
            return Err(Error::Data("locations must be finite and nonnegative".into()));
        }
        for i in 1..locations.len() {
            if locations[i] <= locations[i - 1] {
                return Err(Error::Data(format!(
                    "locations must be strictly increasing, violated at indices {} and {}",
                    i - 1,
                    i
                )));
            }
        }
        for (j, col) in columns.iter().enumerate() {
            if col.len() != locations.len() {
                return Err(Error::Data(format!(
                    "sample column {} has {} entries, expected {}",
                    j,
                    col.len(),
                    locations.len()
                )));
            }
            for (i, v) in col.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::Data(format!(
                        "sample column {j} has a non-finite entry at row {i}"
                    )));
                }
                if i > 0 && col[i] < col[i - 1] {
                    return Err(Error::Data(format!(
                        "sample column {} must be nondecreasing, violated at rows {} and {}",
                        j,
                        i - 1,
                        i
                    )));
                }
            }
        }
        Ok(Self { locations, columns })
    }

    pub fn locations(&self) -> &[f64] {
        &self.locations
    }

    pub fn n_points(&self) -> usize {
        self.locations.len()
    }

    pub fn n_samples(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    /// Per-location sample mean across columns.
    pub fn mean_values(&self) -> Vec<f64> {
        let q = self.columns.len() as f64;
        (0..self.locations.len())
            .map(|i| self.columns.iter().map(|c| c[i]).sum::<f64>() / q)
            .collect()
    }

    /// Per-location unbiased sample variance across columns; zero when only
    /// a single column is available.
    pub fn variance_values(&self) -> Vec<f64> {
        if self.columns.len() < 2 {
            return vec![0.0; self.locations.len()];
        }
        let q = self.columns.len() as f64;
        let means = self.mean_values();
        (0..self.locations.len())
            .map(|i| {
                self.columns.iter().map(|c| (c[i] - means[i]).powi(2)).sum::<f64>() / (q - 1.0)
            })
            .collect()
    }

    /// Monotone C^1 interpolant of the sample mean.
    pub fn mean_curve(&self) -> Result<CubicHermite> {
        monotone_interpolate(&self.locations, &self.mean_values())
    }

    /// C^1 interpolant of the sample variance (no shape constraint; consumers
    /// clamp it nonnegative when used as a variance). Needs at least two
    /// columns — a single measurement carries no spread information.
    pub fn variance_curve(&self) -> Result<CubicHermite> {
        if self.columns.len() < 2 {
            return Err(Error::Data(
                "variance estimation needs at least two sample columns".into(),
            ));
        }
        three_point_hermite(&self.locations, &self.variance_values())
    }

    /// Synthetic saturation-region table shaped like measured machine-steel
    /// data: the mean follows the rational reference law on [1, 1.55] and
    /// each column perturbs the increments of the mean by a smooth random
    /// profile, which keeps every column monotone by construction.
    pub fn synthetic(n_points: usize, n_samples: usize, seed: u64) -> Self {
        assert!(n_points >= 2 && n_samples >= 1);
        let (lo, hi) = (1.0, 1.55);
        let locations: Vec<f64> = (0..n_points)
            .map(|i| lo + (hi - lo) * i as f64 / (n_points - 1) as f64)
            .collect();
        let nu = |s: f64| 245.0 + 6000.0 / (1.0 + (1.78 / (s * s)).powf(14.0));
        let mean: Vec<f64> = locations.iter().map(|&s| nu(s) * s).collect();

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut columns = Vec::with_capacity(n_samples);
        for _ in 0..n_samples {
            let a = rng.gen_range(-0.06..0.06);
            let b = rng.gen_range(-0.08..0.08);
            let c = rng.gen_range(-0.06..0.06);
            let profile = |s: f64| {
                let t = (s - lo) / (hi - lo);
                a + b * (std::f64::consts::PI * t).sin() + c * t
            };
            let mut col = Vec::with_capacity(n_points);
            col.push(mean[0] * (1.0 + profile(locations[0])));
            for i in 1..n_points {
                let mid = 0.5 * (locations[i - 1] + locations[i]);
                let inc = (mean[i] - mean[i - 1]) * (1.0 + profile(mid));
                col.push(col[i - 1] + inc);
            }
            columns.push(col);
        }
        Self::new(locations, columns).expect("synthetic table is monotone by construction")
    }
}
