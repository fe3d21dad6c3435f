//! Labeled square matrix text format.
//!
//! ```text
//! \ta\tb\tc
//! a\t0\t1\t2
//! b\t1\t0\t3
//! c\t2\t3\t0
//! ```
//!
//! The header is a tab followed by the sample ids; each row is an id followed
//! by `n` values, rows in header order. Writers always emit the full matrix.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::{DistanceMatrix, Error, Real, Result};

/// Significant digits written by default; enough to round-trip any `f64`.
pub const DEFAULT_PRECISION: usize = 17;

/// Reads an lsmat stream. The result is not validated.
pub fn parse_lsmat<T: Real, R: BufRead>(reader: R) -> Result<DistanceMatrix<T>> {
    let mut lines = reader.lines().enumerate();

    let header = loop {
        match lines.next() {
            Some((_, line)) => {
                let line = line?;
                if !line.trim().is_empty() {
                    break line;
                }
            }
            None => {
                return Err(Error::Parse {
                    line: 1,
                    message: "empty input".into(),
                })
            }
        }
    };
    let header = header.trim_end_matches('\r');
    let Some(rest) = header.strip_prefix('\t') else {
        return Err(Error::Parse {
            line: 1,
            message: "header must start with a tab".into(),
        });
    };
    let ids: Vec<String> = rest.split('\t').map(str::to_owned).collect();
    if ids.iter().any(|id| id.is_empty()) {
        return Err(Error::Label("empty id in header".into()));
    }
    let n = ids.len();

    let mut data: Vec<T> = Vec::with_capacity(n * n);
    let mut row = 0;
    let mut last_line = 1;
    for (idx, line) in lines {
        let line = line?;
        let line = line.trim_end_matches('\r');
        let line_no = idx + 1;
        last_line = line_no;
        if line.trim().is_empty() {
            continue;
        }
        if row == n {
            return Err(Error::Parse {
                line: line_no,
                message: format!("more than {n} data rows"),
            });
        }
        let mut fields = line.split('\t');
        let id = fields.next().unwrap_or_default();
        if id != ids[row] {
            return Err(Error::Label(format!(
                "line {line_no}: row id {id:?} does not match header id {:?}",
                ids[row]
            )));
        }
        let start = data.len();
        for (col, cell) in fields.enumerate() {
            if col == n {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("ragged row: more than {n} values"),
                });
            }
            let value: T = cell
                .trim()
                .parse()
                .ok()
                .filter(|v: &T| v.to_f64().is_finite())
                .ok_or_else(|| Error::Cell {
                    row,
                    col,
                    value: cell.to_owned(),
                })?;
            data.push(value);
        }
        if data.len() - start != n {
            return Err(Error::Parse {
                line: line_no,
                message: format!("ragged row: {} values, expected {n}", data.len() - start),
            });
        }
        row += 1;
    }
    if row != n {
        return Err(Error::Parse {
            line: last_line + 1,
            message: format!("found {row} data rows, expected {n}"),
        });
    }
    DistanceMatrix::from_raw(data, ids)
}

pub fn read_lsmat<T: Real>(path: impl AsRef<Path>) -> Result<DistanceMatrix<T>> {
    parse_lsmat(BufReader::new(File::open(path)?))
}

/// Writes an `n x n` row-major buffer with the given ids, each value rounded
/// to `precision` significant digits.
pub fn write_lsmat<T: Real, W: Write>(
    data: &[T],
    ids: &[String],
    out: W,
    precision: usize,
) -> Result<()> {
    let n = ids.len();
    if n == 0 {
        return Err(Error::Dimension("cannot write a matrix with no ids".into()));
    }
    if data.len() != n * n {
        return Err(Error::Dimension(format!(
            "buffer of {} elements does not match {n} ids",
            data.len()
        )));
    }
    let mut out = BufWriter::new(out);
    for id in ids {
        write!(out, "\t{id}")?;
    }
    writeln!(out)?;
    for (id, row) in ids.iter().zip(data.chunks(n)) {
        out.write_all(id.as_bytes())?;
        for v in row {
            write!(out, "\t{}", format_significant(v.to_f64(), precision))?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_distance_matrix<T: Real, W: Write>(mat: &DistanceMatrix<T>, out: W) -> Result<()> {
    write_lsmat(mat.data(), mat.ids(), out, DEFAULT_PRECISION)
}

/// `%g`-style formatting with `digits` significant digits and trailing zeros removed.
pub fn format_significant(v: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if v == 0.0 {
        return if v.is_sign_negative() { "-0" } else { "0" }.into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        return format!("{mantissa}e{exp}");
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_owned()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
