//! Text formats for distance matrices.
//!
//! * dense-csv: a header line `m=<int>` followed by `m` rows of `m`
//!   comma-separated decimals.
//! * triplet: lines `i,j,value` with 0-based indices; unlisted pairs are
//!   maximally distant.
//!
//! Blank lines and lines starting with `#` are skipped in both formats.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DistanceMatrix;
use crate::error::{Error, Result};

const LOAD_SYM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixFormat {
    DenseCsv,
    Triplet,
}

impl MatrixFormat {
    /// Guesses the format from the first meaningful line.
    pub fn detect(text: &str) -> MatrixFormat {
        let first = text
            .lines()
            .map(str::trim)
            .find(|l| !l.is_empty() && !l.starts_with('#'));
        match first {
            Some(l) if l.starts_with("m=") => MatrixFormat::DenseCsv,
            _ => MatrixFormat::Triplet,
        }
    }
}

impl std::str::FromStr for MatrixFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "dense-csv" | "dense" => Ok(MatrixFormat::DenseCsv),
            "triplet" => Ok(MatrixFormat::Triplet),
            other => Err(format!("unknown matrix format `{other}`")),
        }
    }
}

/// Loads a distance matrix. For triplet files the dimension is `m` when
/// given, otherwise one past the largest index seen. A `None` format is
/// auto-detected.
pub fn load_distance_matrix(
    path: &Path,
    format: Option<MatrixFormat>,
    m: Option<usize>,
) -> Result<DistanceMatrix> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let format = format.unwrap_or_else(|| MatrixFormat::detect(&text));
    let matrix = match format {
        MatrixFormat::DenseCsv => parse_dense(path, &text)?,
        MatrixFormat::Triplet => parse_triplets(path, &text, m)?,
    };
    if let Some(expected) = m {
        if matrix.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: matrix.dim(),
            });
        }
    }
    Ok(matrix)
}

fn parse_err(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_dense(path: &Path, text: &str) -> Result<DistanceMatrix> {
    let mut lines = content_lines(text);
    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let m: usize = header
        .strip_prefix("m=")
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| parse_err(path, hline, "expected header `m=<int>`"))?;
    let mut data = Vec::with_capacity(m * m);
    let mut rows = 0;
    for (ln, line) in lines {
        if rows == m {
            return Err(parse_err(path, ln, format!("more than m={m} rows")));
        }
        let before = data.len();
        for field in line.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| parse_err(path, ln, format!("bad number `{}`", field.trim())))?;
            data.push(v);
        }
        if data.len() - before != m {
            return Err(parse_err(
                path,
                ln,
                format!("expected {m} columns, found {}", data.len() - before),
            ));
        }
        rows += 1;
    }
    if rows != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: rows,
        });
    }
    DistanceMatrix::from_dense(m, data, LOAD_SYM_TOL)
}

fn parse_triplets(path: &Path, text: &str, m: Option<usize>) -> Result<DistanceMatrix> {
    let mut triplets = Vec::new();
    let mut max_index = 0usize;
    for (ln, line) in content_lines(text) {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(parse_err(path, ln, "expected `i,j,value`"));
        }
        // Tolerate a header row such as `i,j,value`.
        if triplets.is_empty() && fields[0].parse::<usize>().is_err() && ln == 1 {
            continue;
        }
        let i: usize = fields[0]
            .parse()
            .map_err(|_| parse_err(path, ln, format!("bad index `{}`", fields[0])))?;
        let j: usize = fields[1]
            .parse()
            .map_err(|_| parse_err(path, ln, format!("bad index `{}`", fields[1])))?;
        let v: f64 = fields[2]
            .parse()
            .map_err(|_| parse_err(path, ln, format!("bad number `{}`", fields[2])))?;
        max_index = max_index.max(i).max(j);
        triplets.push((i, j, v));
    }
    let dim = m.unwrap_or(if triplets.is_empty() {
        0
    } else {
        max_index + 1
    });
    DistanceMatrix::from_triplets(dim, triplets, LOAD_SYM_TOL)
}

/// Writes a dense-csv file. Unlisted sparse pairs cannot be represented and
/// are rejected.
pub fn write_dense_csv(s: &DistanceMatrix, path: &Path) -> Result<()> {
    let m = s.dim();
    let mut out = String::with_capacity(m * m * 8);
    out.push_str(&format!("m={m}\n"));
    for i in 0..m {
        let row: Vec<String> = (0..m)
            .map(|j| {
                let v = s.get(i, j);
                if v.is_finite() {
                    Ok(format!("{v}"))
                } else {
                    Err(Error::InvalidValue {
                        index: i,
                        reason: format!("pair ({i},{j}) has no finite distance"),
                    })
                }
            })
            .collect::<Result<_>>()?;
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write_file(path, out.as_bytes())
}

/// Writes the upper triangle of finite entries as triplets.
pub fn write_triplets(s: &DistanceMatrix, path: &Path) -> Result<()> {
    let mut out = String::new();
    for i in 0..s.dim() {
        for (j, v) in s.row_entries(i) {
            if j > i && v.is_finite() {
                out.push_str(&format!("{i},{j},{v}\n"));
            }
        }
    }
    write_file(path, out.as_bytes())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut f = fs::File::create(path).map_err(io_err)?;
    f.write_all(bytes).map_err(io_err)
}
