//! Plain-text numeric tables.
//!
//! Rows are whitespace- or comma-separated numbers; `#` starts a comment and
//! blank lines are skipped. Values are written with Rust's shortest
//! round-trip formatting, so re-reading a written file reproduces every value
//! bit for bit.

use std::fmt::Write as _;

use crate::error::{Error, Result};

pub fn parse_table(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|tok| !tok.is_empty())
            .map(|tok| {
                tok.parse::<f64>().map_err(|_| {
                    Error::Parse(format!("line {}: not a number: {tok:?}", lineno + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Parses a CSV with a single header row; returns the header and the rows.
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty csv".into()))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect::<Vec<_>>();
    let rest: String = lines.collect::<Vec<_>>().join("\n");
    let rows = parse_table(&rest)?;
    if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != header.len()) {
        return Err(Error::Parse(format!(
            "csv row {}: {} fields, header has {}",
            i + 2,
            row.len(),
            header.len()
        )));
    }
    Ok((header, rows))
}

/// Formats rows separated by `sep`, optionally preceded by a header line.
pub fn format_rows<'a, I>(header: Option<&str>, sep: &str, rows: I) -> String
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut out = String::new();
    if let Some(h) = header {
        out.push_str(h);
        out.push('\n');
    }
    for row in rows {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push_str(sep);
            }
            write!(out, "{v:?}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// Column-major convenience wrapper around [`format_rows`].
pub fn format_columns(header: Option<&str>, sep: &str, columns: &[&[f64]]) -> String {
    let n = columns.first().map_or(0, |c| c.len());
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| columns.iter().map(|c| c[i]).collect())
        .collect();
    format_rows(header, sep, rows.iter().map(|r| r.as_slice()))
}
