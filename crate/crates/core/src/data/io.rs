//! Plain CSV matrix files: one vector per row, shortest round-trip decimal
//! formatting, optional first line `# d=<d> n=<n>`.

use std::fmt::Display;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

fn parse_error(path: &Path, row: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        row,
        column,
        message: message.into(),
    }
}

/// Writes `rows` as CSV, preceded by an optional `# ...` header line.
pub fn write_rows<T, I, R>(path: &Path, header: Option<&str>, rows: I) -> Result<()>
where
    T: Display,
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = T>,
{
    let mut out = String::new();
    if let Some(h) = header {
        out.push_str("# ");
        out.push_str(h);
        out.push('\n');
    }
    for row in rows {
        let fields: Vec<String> = row.into_iter().map(|v| v.to_string()).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Parsed rows plus the `key=value` pairs of the optional header line.
#[derive(Debug)]
pub struct Rows<T> {
    pub header: Vec<(String, String)>,
    pub rows: Vec<Vec<T>>,
}

/// Reads a CSV file of homogeneous values. Every row must have the same
/// number of fields; an empty file is an error. Row numbers in errors are
/// 1-based file lines.
pub fn read_rows<T: FromStr>(path: &Path) -> Result<Rows<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut header = Vec::new();
    if let Some(first) = text.lines().next() {
        if let Some(rest) = first.strip_prefix('#') {
            for token in rest.split_whitespace() {
                let (k, v) = token.split_once('=').ok_or_else(|| {
                    parse_error(path, 1, 0, format!("malformed header token '{token}'"))
                })?;
                header.push((k.to_string(), v.to_string()));
            }
        }
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<T>> = Vec::new();
    let mut width = None;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let row = e.position().map_or(0, |p| p.line() as usize);
            parse_error(path, row, 0, e.to_string())
        })?;
        let line = record.position().map_or(rows.len() + 1, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(parse_error(
                    path,
                    line,
                    record.len().min(w) + 1,
                    format!("row {line} has {} fields, expected {w}", record.len()),
                ));
            }
            Some(_) => {}
        }
        let parsed = record
            .iter()
            .enumerate()
            .map(|(col, field)| {
                field.parse::<T>().map_err(|_| {
                    parse_error(path, line, col + 1, format!("cannot parse '{field}'"))
                })
            })
            .collect::<Result<Vec<T>>>()?;
        rows.push(parsed);
    }
    if rows.is_empty() {
        return Err(parse_error(path, 1, 0, "file contains no data rows"));
    }
    Ok(Rows { header, rows })
}

/// Saves a `d x n` matrix as `n` rows of length `d` (one column per row).
pub fn save_matrix(path: &Path, matrix: &DMatrix<f64>) -> Result<()> {
    let header = format!("d={} n={}", matrix.nrows(), matrix.ncols());
    write_rows(
        path,
        Some(&header),
        matrix.column_iter().map(|c| c.iter().copied().collect::<Vec<f64>>()),
    )
}

/// Inverse of [`save_matrix`]. A header, when present, must agree with the data.
pub fn load_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let Rows { header, rows } = read_rows::<f64>(path)?;
    let d = rows[0].len();
    let n = rows.len();
    for (k, v) in &header {
        let expected = match k.as_str() {
            "d" => d,
            "n" => n,
            _ => continue,
        };
        if v.parse::<usize>().ok() != Some(expected) {
            return Err(parse_error(
                path,
                1,
                0,
                format!("header says {k}={v} but data has {k}={expected}"),
            ));
        }
    }
    for (r, row) in rows.iter().enumerate() {
        if let Some(c) = row.iter().position(|v| !v.is_finite()) {
            return Err(parse_error(path, r + 1, c + 1, "non-finite value"));
        }
    }
    Ok(DMatrix::from_fn(d, n, |i, j| rows[j][i]))
}
