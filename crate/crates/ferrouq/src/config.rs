//! Flat key-value run configuration.
//!
//! The format is one `key=value` pair per line, `#` comments, no nesting —
//! easy to diff and to generate. Values given on the command line override
//! values from the file; everything else falls back to documented defaults.
//! The resolved configuration can be echoed back as text that re-parses to
//! an equal [`RunConfig`].

use crate::grids::{parse_grid_kind, GridKind};
use crate::solver::Scheme;
use crate::{Error, Result};
use std::fmt::Write as _;
use std::path::PathBuf;

/// Which problem family a run works on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    /// Power-law problem on the unit square with random exponent.
    PLaplace,
    /// Saturating rational law on the L-shaped domain with two perturbed
    /// parameters.
    LShape,
    /// Table-derived random law (KL sampled) on the unit square.
    KlSquare,
}

impl StudyKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "plaplace" => Ok(StudyKind::PLaplace),
            "lshape" => Ok(StudyKind::LShape),
            "kl-square" => Ok(StudyKind::KlSquare),
            other => Err(Error::Config(format!(
                "unknown study '{other}', expected 'plaplace', 'lshape' or 'kl-square'"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            StudyKind::PLaplace => "plaplace",
            StudyKind::LShape => "lshape",
            StudyKind::KlSquare => "kl-square",
        }
    }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub study: StudyKind,
    /// Output directory for CSV emission.
    pub out: PathBuf,
    /// Measured B-H table; when absent, table-driven runs use a built-in
    /// synthetic table with `samples` columns drawn from `seed`.
    pub bh_csv: Option<PathBuf>,
    /// Unit-square subdivisions per side.
    pub mesh_n: usize,
    /// L-shape refinement level (1 is the coarsest structured mesh).
    pub mesh_level: usize,
    pub grid: GridKind,
    pub q_min: usize,
    pub q_max: usize,
    /// Tensor reference level for the error estimator; successive
    /// differences are used when unset.
    pub q_ref: Option<usize>,
    pub scheme: Scheme,
    pub tol: f64,
    pub max_iter: usize,
    /// Worker threads for the collocation sweep; 0 means all cores.
    pub workers: usize,
    pub seed: u64,
    /// Columns of the synthetic B-H table.
    pub samples: usize,
    /// Number of sampled curves emitted by the expansion study.
    pub draws: usize,
    pub kl_length: f64,
    pub kl_dim: usize,
    /// Information-content threshold picking the truncation order.
    pub kl_info: f64,
    /// Deviation amplitude as a fraction of the monotonicity bound.
    pub kl_delta: f64,
    /// Constant source density; unset means the study's documented default.
    pub source_j: Option<f64>,
}

const KEYS: &[&str] = &[
    "study", "out", "bh_csv", "mesh_n", "mesh_level", "grid", "q_min", "q_max", "q_ref",
    "scheme", "tol", "max_iter", "workers", "seed", "samples", "draws", "kl_length", "kl_dim",
    "kl_info", "kl_delta", "source_j",
];

fn edit_distance(a: &str, b: &str) -> usize {
    let (a, b): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut row = vec![0usize; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            row[j + 1] = sub.min(prev[j + 1] + 1).min(row[j] + 1);
        }
        std::mem::swap(&mut prev, &mut row);
    }
    prev[b.len()]
}

fn unknown_key_error(key: &str) -> Error {
    let closest = KEYS
        .iter()
        .map(|k| (edit_distance(key, k), *k))
        .min()
        .expect("key list is nonempty");
    let hint = if closest.0 <= 4 {
        format!("; did you mean '{}'?", closest.1)
    } else {
        String::new()
    };
    Error::Config(format!("unknown key '{key}'{hint} (valid keys: {})", KEYS.join(", ")))
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse::<T>()
        .map_err(|_| Error::Config(format!("key '{key}': cannot parse '{value}'")))
}

impl RunConfig {
    /// Defaults for every key except the required `study`.
    pub fn defaults(study: StudyKind) -> Self {
        RunConfig {
            study,
            out: PathBuf::from("out"),
            bh_csv: None,
            mesh_n: 64,
            mesh_level: 2,
            grid: GridKind::Tensor,
            q_min: 1,
            q_max: 8,
            q_ref: None,
            scheme: Scheme::Newton,
            tol: 1e-12,
            max_iter: 200,
            workers: 0,
            seed: 42,
            samples: 28,
            draws: 5,
            kl_length: 0.5,
            kl_dim: 60,
            kl_info: 0.95,
            kl_delta: 1.0,
            source_j: None,
        }
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "study" => self.study = StudyKind::parse(value)?,
            "out" => self.out = PathBuf::from(value),
            "bh_csv" => self.bh_csv = Some(PathBuf::from(value)),
            "mesh_n" => self.mesh_n = parse_num(key, value)?,
            "mesh_level" => self.mesh_level = parse_num(key, value)?,
            "grid" => self.grid = parse_grid_kind(value)?,
            "q_min" => self.q_min = parse_num(key, value)?,
            "q_max" => self.q_max = parse_num(key, value)?,
            "q_ref" => self.q_ref = Some(parse_num(key, value)?),
            "scheme" => {
                self.scheme = match value {
                    "kacanov" => Scheme::Kacanov,
                    "newton" => Scheme::Newton,
                    other => {
                        return Err(Error::Config(format!(
                            "unknown scheme '{other}', expected 'kacanov' or 'newton'"
                        )))
                    }
                }
            }
            "tol" => self.tol = parse_num(key, value)?,
            "max_iter" => self.max_iter = parse_num(key, value)?,
            "workers" => self.workers = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "samples" => self.samples = parse_num(key, value)?,
            "draws" => self.draws = parse_num(key, value)?,
            "kl_length" => self.kl_length = parse_num(key, value)?,
            "kl_dim" => self.kl_dim = parse_num(key, value)?,
            "kl_info" => self.kl_info = parse_num(key, value)?,
            "kl_delta" => self.kl_delta = parse_num(key, value)?,
            "source_j" => self.source_j = Some(parse_num(key, value)?),
            _ => return Err(unknown_key_error(key)),
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.mesh_n < 2 {
            return fail(format!("mesh_n must be at least 2, got {}", self.mesh_n));
        }
        if self.mesh_level < 1 {
            return fail("mesh_level must be at least 1".into());
        }
        if self.q_min > self.q_max {
            return fail(format!("q_min {} exceeds q_max {}", self.q_min, self.q_max));
        }
        if let Some(q_ref) = self.q_ref {
            if q_ref <= self.q_max {
                return fail(format!(
                    "q_ref {q_ref} must exceed q_max {} to serve as a reference",
                    self.q_max
                ));
            }
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return fail(format!("tol must be positive, got {}", self.tol));
        }
        if self.max_iter == 0 {
            return fail("max_iter must be positive".into());
        }
        if self.samples == 0 {
            return fail("samples must be positive".into());
        }
        if !(self.kl_length > 0.0 && self.kl_length.is_finite()) {
            return fail(format!("kl_length must be positive, got {}", self.kl_length));
        }
        if self.kl_dim < 8 {
            return fail(format!("kl_dim must be at least 8, got {}", self.kl_dim));
        }
        if !(self.kl_info > 0.0 && self.kl_info <= 1.0) {
            return fail(format!("kl_info must lie in (0, 1], got {}", self.kl_info));
        }
        if !(self.kl_delta > 0.0 && self.kl_delta <= 1.0) {
            return fail(format!("kl_delta must lie in (0, 1], got {}", self.kl_delta));
        }
        if let Some(j) = self.source_j {
            if !j.is_finite() {
                return fail(format!("source_j must be finite, got {j}"));
            }
        }
        Ok(())
    }

    /// Serializes the resolved configuration; parsing the text back yields
    /// an equal configuration.
    pub fn to_echo(&self) -> String {
        let mut text = String::new();
        writeln!(text, "study={}", self.study.name()).unwrap();
        writeln!(text, "out={}", self.out.display()).unwrap();
        if let Some(p) = &self.bh_csv {
            writeln!(text, "bh_csv={}", p.display()).unwrap();
        }
        writeln!(text, "mesh_n={}", self.mesh_n).unwrap();
        writeln!(text, "mesh_level={}", self.mesh_level).unwrap();
        let grid = match self.grid {
            GridKind::Tensor => "tensor",
            GridKind::Sparse => "sparse",
        };
        writeln!(text, "grid={grid}").unwrap();
        writeln!(text, "q_min={}", self.q_min).unwrap();
        writeln!(text, "q_max={}", self.q_max).unwrap();
        if let Some(q) = self.q_ref {
            writeln!(text, "q_ref={q}").unwrap();
        }
        let scheme = match self.scheme {
            Scheme::Kacanov => "kacanov",
            Scheme::Newton => "newton",
        };
        writeln!(text, "scheme={scheme}").unwrap();
        writeln!(text, "tol={}", self.tol).unwrap();
        writeln!(text, "max_iter={}", self.max_iter).unwrap();
        writeln!(text, "workers={}", self.workers).unwrap();
        writeln!(text, "seed={}", self.seed).unwrap();
        writeln!(text, "samples={}", self.samples).unwrap();
        writeln!(text, "draws={}", self.draws).unwrap();
        writeln!(text, "kl_length={}", self.kl_length).unwrap();
        writeln!(text, "kl_dim={}", self.kl_dim).unwrap();
        writeln!(text, "kl_info={}", self.kl_info).unwrap();
        writeln!(text, "kl_delta={}", self.kl_delta).unwrap();
        if let Some(j) = self.source_j {
            writeln!(text, "source_j={j}").unwrap();
        }
        text
    }
}

/// Splits one `key=value` line; `#` starts a comment.
fn split_pair(line: &str, lineno: usize) -> Result<Option<(&str, &str)>> {
    let line = line.split('#').next().unwrap_or("").trim();
    if line.is_empty() {
        return Ok(None);
    }
    match line.split_once('=') {
        Some((k, v)) => Ok(Some((k.trim(), v.trim()))),
        None => Err(Error::Config(format!(
            "line {lineno}: expected 'key=value', found '{line}'"
        ))),
    }
}

/// Resolves a configuration from optional file text plus command-line
/// overrides (applied last, so they win over the file).
pub fn resolve(file_text: Option<&str>, overrides: &[(String, String)]) -> Result<RunConfig> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    if let Some(text) = file_text {
        for (i, line) in text.lines().enumerate() {
            if let Some((k, v)) = split_pair(line, i + 1)? {
                pairs.push((k.to_string(), v.to_string()));
            }
        }
    }
    pairs.extend(overrides.iter().cloned());

    let study_value = pairs
        .iter()
        .rev()
        .find(|(k, _)| k == "study")
        .map(|(_, v)| v.clone())
        .ok_or_else(|| Error::Config("missing required key 'study'".into()))?;
    let mut config = RunConfig::defaults(StudyKind::parse(&study_value)?);
    for (k, v) in &pairs {
        config.apply(k, v)?;
    }
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_documented_defaults() {
        let config = resolve(Some("study=plaplace\n"), &[]).unwrap();
        assert_eq!(config.study, StudyKind::PLaplace);
        assert_eq!((config.q_min, config.q_max), (1, 8));
        assert_eq!(config.mesh_n, 64);
        assert_eq!(config.tol, 1e-12);
        assert_eq!(config.grid, GridKind::Tensor);
        assert_eq!(config.scheme, Scheme::Newton);
        assert_eq!(config.workers, 0);
        assert!(config.q_ref.is_none() && config.bh_csv.is_none() && config.source_j.is_none());
    }

    #[test]
    fn unknown_key_suggests_the_closest_valid_one() {
        let err = resolve(Some("study=plaplace\nmeshsize=32\n"), &[]).unwrap_err().to_string();
        assert!(err.contains("unknown key 'meshsize'"), "{err}");
        assert!(err.contains("did you mean 'mesh_n'?"), "{err}");
        assert!(err.contains("valid keys:"), "{err}");
    }

    #[test]
    fn missing_study_is_reported() {
        let err = resolve(Some("mesh_n=32\n"), &[]).unwrap_err().to_string();
        assert!(err.contains("missing required key 'study'"), "{err}");
    }

    #[test]
    fn command_line_overrides_beat_the_file() {
        let overrides = vec![("mesh_n".to_string(), "128".to_string())];
        let config = resolve(Some("study=plaplace\nmesh_n=32\n"), &overrides).unwrap();
        assert_eq!(config.mesh_n, 128);
        // Later file entries also beat earlier ones.
        let config = resolve(Some("study=plaplace\nmesh_n=32\nmesh_n=16\n"), &[]).unwrap();
        assert_eq!(config.mesh_n, 16);
    }

    #[test]
    fn echo_round_trips_to_an_equal_config() {
        let text = "study=kl-square\nout=results/run1\nbh_csv=data/bh.csv\nmesh_n=48\n\
                    grid=sparse\nq_min=2\nq_max=5\nq_ref=7\nscheme=kacanov\ntol=1e-10\n\
                    max_iter=77\nworkers=3\nseed=7\nsamples=12\ndraws=9\nkl_length=0.25\n\
                    kl_dim=40\nkl_info=0.99\nkl_delta=0.5\nsource_j=6500\n";
        let config = resolve(Some(text), &[]).unwrap();
        let echoed = resolve(Some(&config.to_echo()), &[]).unwrap();
        assert_eq!(config, echoed);

        let minimal = resolve(Some("study=lshape"), &[]).unwrap();
        assert_eq!(minimal, resolve(Some(&minimal.to_echo()), &[]).unwrap());
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = "# run setup\nstudy=plaplace\n\nmesh_n=32 # coarse\n";
        let config = resolve(Some(text), &[]).unwrap();
        assert_eq!(config.mesh_n, 32);
    }

    #[test]
    fn bad_values_name_the_key() {
        for (text, needle) in [
            ("study=plaplace\ntol=fast\n", "key 'tol'"),
            ("study=plaplace\ntol=0\n", "tol must be positive"),
            ("study=plaplace\nq_min=5\nq_max=3\n", "q_min 5 exceeds q_max 3"),
            ("study=plaplace\nq_ref=8\n", "q_ref 8 must exceed q_max 8"),
            ("study=plaplace\nkl_info=1.5\n", "kl_info"),
            ("study=warp\n", "unknown study 'warp'"),
            ("study=plaplace\ngrid=dense\n", "unknown grid kind 'dense'"),
            ("study=plaplace\nscheme=picard\n", "unknown scheme 'picard'"),
            ("study=plaplace\nmesh_n\n", "expected 'key=value'"),
        ] {
            let err = resolve(Some(text), &[]).unwrap_err().to_string();
            assert!(err.contains(needle), "{text:?} -> {err}");
        }
    }
}
