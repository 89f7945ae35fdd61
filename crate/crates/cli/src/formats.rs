//! Text formats for matrices and vectors.
//!
//! Matrix: a `# dense m N` header, then `m` lines of `N` comma-separated
//! values. Vector: a `# vector dim` header, then one value per line. Values
//! are written in shortest round-trip form, so write-then-read is bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use pursuitlab::{DenseMatrix, Vector};

fn parse_value(field: &str, line: usize, column: usize) -> Result<f64> {
    let v: f64 = field.trim().parse().with_context(|| {
        format!(
            "line {line}, field {column}: `{}` is not a number",
            field.trim()
        )
    })?;
    if !v.is_finite() {
        bail!("line {line}, field {column}: value is not finite");
    }
    Ok(v)
}

/// Non-blank lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_header(line: Option<(usize, &str)>, keyword: &str, arity: usize) -> Result<Vec<usize>> {
    let Some((no, line)) = line else {
        bail!("line 1: missing `# {keyword}` header");
    };
    let mut parts = line.split_whitespace();
    if parts.next() != Some("#") || parts.next() != Some(keyword) {
        bail!("line {no}: expected header `# {keyword} ...`, found `{line}`");
    }
    let dims = parts
        .enumerate()
        .map(|(k, p)| {
            p.parse::<usize>().with_context(|| {
                format!(
                    "line {no}, header field {}: `{p}` is not a dimension",
                    k + 1
                )
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if dims.len() != arity {
        bail!(
            "line {no}: `# {keyword}` header needs {arity} dimension(s), found {}",
            dims.len()
        );
    }
    Ok(dims)
}

pub fn parse_matrix(text: &str) -> Result<DenseMatrix> {
    let mut lines = content_lines(text);
    let dims = parse_header(lines.next(), "dense", 2)?;
    let (m, n) = (dims[0], dims[1]);
    let mut data = Vec::with_capacity(m * n);
    let mut rows = 0;
    for (no, line) in lines {
        if rows == m {
            bail!("line {no}: more than the {m} rows declared in the header");
        }
        let before = data.len();
        for (k, field) in line.split(',').enumerate() {
            data.push(parse_value(field, no, k + 1)?);
        }
        if data.len() - before != n {
            bail!(
                "line {no}: expected {n} fields, found {}",
                data.len() - before
            );
        }
        rows += 1;
    }
    if rows != m {
        bail!("expected {m} rows after the header, found {rows}");
    }
    Ok(DenseMatrix::new(m, n, data)?)
}

pub fn parse_vector(text: &str) -> Result<Vector> {
    let mut lines = content_lines(text);
    let dim = parse_header(lines.next(), "vector", 1)?[0];
    let values = lines
        .map(|(no, line)| parse_value(line, no, 1))
        .collect::<Result<Vec<_>>>()?;
    if values.len() != dim {
        bail!(
            "expected {dim} values after the header, found {}",
            values.len()
        );
    }
    Ok(Vector::new(values)?)
}

pub fn format_matrix(phi: &DenseMatrix) -> String {
    let mut out = format!("# dense {} {}\n", phi.rows(), phi.cols());
    for i in 0..phi.rows() {
        let row: Vec<String> = phi.row(i).iter().map(f64::to_string).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn format_vector(v: &[f64]) -> String {
    let mut out = format!("# vector {}\n", v.len());
    for x in v {
        writeln!(out, "{x}").expect("writing to a String cannot fail");
    }
    out
}

pub fn read_matrix(path: &Path) -> Result<DenseMatrix> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_matrix(&text).with_context(|| format!("parsing matrix file {}", path.display()))
}

pub fn read_vector(path: &Path) -> Result<Vector> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_vector(&text).with_context(|| format!("parsing vector file {}", path.display()))
}

pub fn write_matrix(path: &Path, phi: &DenseMatrix) -> Result<()> {
    fs::write(path, format_matrix(phi)).with_context(|| format!("writing {}", path.display()))
}

pub fn write_vector(path: &Path, v: &[f64]) -> Result<()> {
    fs::write(path, format_vector(v)).with_context(|| format!("writing {}", path.display()))
}
