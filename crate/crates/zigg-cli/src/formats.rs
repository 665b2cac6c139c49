//! File formats. All of them are CSV with `\n` line endings and floats
//! printed in Rust's shortest round-trip notation, so identical inputs
//! always produce byte-identical files.
//!
//! - data files: headerless, one row per observation, one column per
//!   variable; a literal `0` marks a censored cell (an uncensored value of
//!   exactly 0.0 is indistinguishable by construction — it is an event of
//!   probability zero under the model).
//! - scheme files: columns `index,a,b` with 1-based consecutive indices
//!   (the header row is optional on input).
//! - matrix files: headerless p x p numeric grids.
//! - edge / flag / detection files: headered, 1-based indices.

use nalgebra::DMatrix;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use zigg::diagnostics::DetectionReport;
use zigg::glasso::EdgeSet;
use zigg::pairlik::{FlaggedPair, PairFlag, ZeroInflatedMatrix};
use zigg::truncdist::TruncationScheme;

use crate::error::CliError;

/// Shortest decimal that parses back to exactly the same f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

fn parse_cell(field: &str, path: &Path, row: usize, col: usize) -> Result<f64, CliError> {
    let v: f64 = field.trim().parse().map_err(|_| {
        CliError::Validation(format!(
            "{}: row {row}, column {col}: cannot parse {field:?} as a real number",
            path.display()
        ))
    })?;
    if !v.is_finite() {
        return Err(CliError::Validation(format!(
            "{}: row {row}, column {col}: non-finite value",
            path.display()
        )));
    }
    Ok(v)
}

/// Reads a headerless rectangular numeric CSV.
pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_path(path)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            CliError::Validation(format!("{}: row {}: {e}", path.display(), i + 1))
        })?;
        let mut row = Vec::with_capacity(record.len());
        for (j, field) in record.iter().enumerate() {
            row.push(parse_cell(field, path, i + 1, j + 1)?);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Validation(format!(
            "{}: file holds no rows",
            path.display()
        )));
    }
    let ncols = rows[0].len();
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(rows.len(), ncols, &flat))
}

pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<(), CliError> {
    let mut out = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", m[(i, j)]);
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| CliError::io(path, e))
}

/// Reads observation data and validates the zero-inflation invariants.
pub fn read_data_csv(path: &Path) -> Result<ZeroInflatedMatrix, CliError> {
    let m = read_matrix_csv(path)?;
    ZeroInflatedMatrix::new(m).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

pub fn write_data_csv(path: &Path, data: &ZeroInflatedMatrix) -> Result<(), CliError> {
    write_matrix_csv(path, data.values())
}

/// Reads a truncation scheme (`index,a,b` rows, header optional).
pub fn read_scheme_csv(path: &Path) -> Result<TruncationScheme, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let mut expect = 1usize;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if lineno == 0 && line.eq_ignore_ascii_case("index,a,b") {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(CliError::Validation(format!(
                "{}: line {}: expected 3 fields (index,a,b), got {}",
                path.display(),
                lineno + 1,
                fields.len()
            )));
        }
        let idx: usize = fields[0].trim().parse().map_err(|_| {
            CliError::Validation(format!(
                "{}: line {}: bad index {:?}",
                path.display(),
                lineno + 1,
                fields[0]
            ))
        })?;
        if idx != expect {
            return Err(CliError::Validation(format!(
                "{}: line {}: indices must run 1..p consecutively, expected {expect} got {idx}",
                path.display(),
                lineno + 1
            )));
        }
        lower.push(parse_cell(fields[1], path, lineno + 1, 2)?);
        upper.push(parse_cell(fields[2], path, lineno + 1, 3)?);
        expect += 1;
    }
    TruncationScheme::new(lower, upper)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

pub fn write_scheme_csv(path: &Path, scheme: &TruncationScheme) -> Result<(), CliError> {
    let mut out = String::from("index,a,b\n");
    for j in 0..scheme.p() {
        let _ = writeln!(out, "{},{},{}", j + 1, scheme.lower()[j], scheme.upper()[j]);
    }
    fs::write(path, out).map_err(|e| CliError::io(path, e))
}

/// Writes an edge list, 1-based, ascending.
pub fn write_edges_csv(path: &Path, edges: &EdgeSet) -> Result<(), CliError> {
    let mut out = String::from("j,k\n");
    for (j, k) in edges.iter() {
        let _ = writeln!(out, "{},{}", j + 1, k + 1);
    }
    fs::write(path, out).map_err(|e| CliError::io(path, e))
}

pub fn flag_name(flag: PairFlag) -> &'static str {
    match flag {
        PairFlag::DegenerateData => "degenerate-data",
        PairFlag::TieBroken => "tie-broken",
    }
}

/// Writes Step-1 per-pair flags, 1-based.
pub fn write_flags_csv(path: &Path, flags: &[FlaggedPair]) -> Result<(), CliError> {
    let mut out = String::from("j,k,flag\n");
    for f in flags {
        let _ = writeln!(out, "{},{},{}", f.j + 1, f.k + 1, flag_name(f.flag));
    }
    fs::write(path, out).map_err(|e| CliError::io(path, e))
}

/// Writes per-pair detection rates. Rows follow the upper-triangle
/// unfolding in column-major order — (1,2), (1,3), (2,3), (1,4), ... — the
/// order R's `upper.tri` produces, so downstream plotting scripts line up.
/// One `rate_<method>` column per report; indices are 1-based.
pub fn write_detection_csv(path: &Path, reports: &[&DetectionReport]) -> Result<(), CliError> {
    assert!(!reports.is_empty(), "nothing to write");
    let p = reports[0].p();
    for r in reports {
        assert_eq!(r.p(), p, "reports disagree on dimension");
    }
    let mut out = String::from("j,k,label");
    for r in reports {
        let _ = write!(out, ",rate_{}", r.method());
    }
    out.push('\n');
    for k in 1..p {
        for j in 0..k {
            let _ = write!(out, "{},{},{}", j + 1, k + 1, reports[0].label(j, k));
            for r in reports {
                let _ = write!(out, ",{}", r.rate(j, k));
            }
            out.push('\n');
        }
    }
    fs::write(path, out).map_err(|e| CliError::io(path, e))
}
