//! CSV formats shared by the command line driver and the examples.
//!
//! All files are UTF-8 and comma-separated with a mandatory header row.
//! Floats are serialized with Rust's shortest round-trip decimal formatting,
//! so emitting and re-ingesting a file reproduces every value bit-exactly.

use crate::fem::TriMesh;
use crate::kl::KlExpansion;
use crate::material::MeasuredBhTable;
use crate::study::StudyRow;
use crate::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))
}

/// Writes UTF-8 text, creating parent directories as needed.
pub fn write_text_file(path: impl AsRef<Path>, text: &str) -> Result<()> {
    write_text(path.as_ref(), text)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)
                .map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))?;
        }
    }
    std::fs::write(path, text)
        .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

fn parse_cell(cell: &str, path: &Path, line: usize, column: usize) -> Result<f64> {
    cell.trim().parse::<f64>().map_err(|_| {
        Error::Data(format!(
            "{}:{line}: column {column}: cannot parse '{}' as a number",
            path.display(),
            cell.trim()
        ))
    })
}

/// Splits CSV text into header and data rows, validating a uniform column
/// count. Line numbers in errors are 1-based including the header.
fn split_rows<'a>(text: &'a str, path: &Path) -> Result<(Vec<&'a str>, Vec<Vec<&'a str>>)> {
    let mut lines = text.lines().map(str::trim_end).filter(|l| !l.is_empty());
    let header: Vec<&str> = match lines.next() {
        Some(h) => h.split(',').map(str::trim).collect(),
        None => return Err(Error::Data(format!("{}: empty file", path.display()))),
    };
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != header.len() {
            return Err(Error::Data(format!(
                "{}:{}: expected {} columns, found {}",
                path.display(),
                k + 2,
                header.len(),
                cells.len()
            )));
        }
        rows.push(cells);
    }
    Ok((header, rows))
}

/// Reads a measured B-H table: header row, first column the field magnitudes
/// `s`, each further column one measured curve. Validation (strictly
/// increasing locations, nondecreasing columns) happens on construction and
/// reports offending rows and columns.
pub fn ingest_bh_csv(path: impl AsRef<Path>) -> Result<MeasuredBhTable> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let (header, rows) = split_rows(&text, path)?;
    if header.len() < 2 {
        return Err(Error::Data(format!(
            "{}: need at least two columns (s plus one sample), found {}",
            path.display(),
            header.len()
        )));
    }
    if rows.is_empty() {
        return Err(Error::Data(format!("{}: no data rows", path.display())));
    }
    let mut locations = Vec::with_capacity(rows.len());
    let mut columns = vec![Vec::with_capacity(rows.len()); header.len() - 1];
    for (i, cells) in rows.iter().enumerate() {
        locations.push(parse_cell(cells[0], path, i + 2, 1)?);
        for (j, cell) in cells[1..].iter().enumerate() {
            columns[j].push(parse_cell(cell, path, i + 2, j + 2)?);
        }
    }
    MeasuredBhTable::new(locations, columns)
}

/// Writes a measured B-H table with columns `s, f_sample_1, ...`.
pub fn write_bh_csv(path: impl AsRef<Path>, table: &MeasuredBhTable) -> Result<()> {
    let mut text = String::from("s");
    for j in 1..=table.n_samples() {
        write!(text, ",f_sample_{j}").unwrap();
    }
    text.push('\n');
    for i in 0..table.n_points() {
        write!(text, "{}", table.locations()[i]).unwrap();
        for j in 0..table.n_samples() {
            write!(text, ",{}", table.column(j)[i]).unwrap();
        }
        text.push('\n');
    }
    write_text(path.as_ref(), &text)
}

/// A nodal field read back from CSV.
#[derive(Debug)]
pub struct FieldCsv {
    pub coords: Vec<[f64; 2]>,
    pub values: Vec<f64>,
}

/// Writes a nodal field as `vertex_id,x1,x2,value` rows in vertex order.
pub fn write_field_csv(path: impl AsRef<Path>, mesh: &TriMesh, values: &[f64]) -> Result<()> {
    assert_eq!(values.len(), mesh.n_vertices(), "field length must match the mesh");
    let mut text = String::from("vertex_id,x1,x2,value\n");
    for (i, (v, u)) in mesh.vertices().iter().zip(values).enumerate() {
        writeln!(text, "{i},{},{},{u}", v[0], v[1]).unwrap();
    }
    write_text(path.as_ref(), &text)
}

/// Reads a nodal field written by [`write_field_csv`], checking that the
/// vertex ids are consecutive from zero.
pub fn read_field_csv(path: impl AsRef<Path>) -> Result<FieldCsv> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let (header, rows) = split_rows(&text, path)?;
    if header.len() != 4 {
        return Err(Error::Data(format!(
            "{}: expected 4 columns (vertex_id,x1,x2,value), found {}",
            path.display(),
            header.len()
        )));
    }
    let mut coords = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(rows.len());
    for (i, cells) in rows.iter().enumerate() {
        let id = parse_cell(cells[0], path, i + 2, 1)?;
        if id != i as f64 {
            return Err(Error::Data(format!(
                "{}:{}: vertex ids must count up from 0, found {id}",
                path.display(),
                i + 2
            )));
        }
        coords.push([
            parse_cell(cells[1], path, i + 2, 2)?,
            parse_cell(cells[2], path, i + 2, 3)?,
        ]);
        values.push(parse_cell(cells[3], path, i + 2, 4)?);
    }
    Ok(FieldCsv { coords, values })
}

/// Writes the discretized spectrum: mode index, eigenvalue, and cumulative
/// information content.
pub fn write_spectrum_csv(path: impl AsRef<Path>, kl: &KlExpansion) -> Result<()> {
    let mut text = String::from("n,lambda_n,info_content\n");
    for n in 1..=kl.reference_len() {
        writeln!(text, "{n},{},{}", kl.eigenvalues()[n - 1], kl.info_content(n)).unwrap();
    }
    write_text(path.as_ref(), &text)
}

/// Writes sampled material-law curves on a probe grid over `[0, s_max]`:
/// columns `s, f_mean, f_sample_1, ...` with one sample column per row of
/// `ys`.
pub fn write_samples_csv(
    path: impl AsRef<Path>,
    kl: &KlExpansion,
    ys: &[Vec<f64>],
    s_max: f64,
    n_probe: usize,
) -> Result<()> {
    let mean = kl.mean_law()?;
    let laws = ys.iter().map(|y| kl.sample_law(y)).collect::<Result<Vec<_>>>()?;
    let mut text = String::from("s,f_mean");
    for j in 1..=laws.len() {
        write!(text, ",f_sample_{j}").unwrap();
    }
    text.push('\n');
    for i in 0..=n_probe {
        let s = s_max * i as f64 / n_probe as f64;
        write!(text, "{s},{}", mean.f(s)).unwrap();
        for law in &laws {
            write!(text, ",{}", law.f(s)).unwrap();
        }
        text.push('\n');
    }
    write_text(path.as_ref(), &text)
}

/// Writes the per-level study summary. The first row's slope has no
/// predecessor and is serialized as `NaN`.
pub fn write_summary_csv(path: impl AsRef<Path>, rows: &[StudyRow]) -> Result<()> {
    let mut text = String::from("level,N_q,error,slope_estimate,time_s\n");
    for r in rows {
        writeln!(text, "{},{},{},{},{}", r.level, r.points, r.error, r.slope, r.time_s).unwrap();
    }
    write_text(path.as_ref(), &text)
}

/// Writes a two-column table of the stochastic error against the quantity
/// in `x` (level or point count) — ready for gnuplot's `plot ... with lp`.
pub fn write_error_table_csv(
    path: impl AsRef<Path>,
    x_name: &str,
    table: &[(f64, f64)],
) -> Result<()> {
    let mut text = format!("{x_name},error\n");
    for (x, e) in table {
        writeln!(text, "{x},{e}").unwrap();
    }
    write_text(path.as_ref(), &text)
}

/// Emits the full output set of a study into `dir`: `summary.csv`, the
/// gnuplot error tables against level and point count, and per-level
/// expectation/variance fields. File contents are deterministic except for
/// the wall-time column of the summary.
pub fn emit_study(dir: impl AsRef<Path>, mesh: &TriMesh, rows: &[StudyRow]) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))?;
    write_summary_csv(dir.join("summary.csv"), rows)?;
    let by_level: Vec<(f64, f64)> = rows.iter().map(|r| (r.level as f64, r.error)).collect();
    let by_points: Vec<(f64, f64)> = rows.iter().map(|r| (r.points as f64, r.error)).collect();
    write_error_table_csv(dir.join("error_vs_level.csv"), "q", &by_level)?;
    write_error_table_csv(dir.join("error_vs_points.csv"), "N_q", &by_points)?;
    for r in rows {
        write_field_csv(dir.join(format!("expectation_q{}.csv", r.level)), mesh, &r.expectation)?;
        write_field_csv(dir.join(format!("variance_q{}.csv", r.level)), mesh, &r.variance)?;
    }
    Ok(())
}
