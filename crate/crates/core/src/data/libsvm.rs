//! LIBSVM / SVMlight text format: `label idx:val idx:val ...` with 1-based increasing indices.

use std::io::{BufRead, Write};

use crate::data::{BlockedSparseMatrix, Dataset};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_real<T: Scalar>(token: &str, line: usize, what: &str) -> Result<T> {
    let v: f64 = token
        .parse()
        .map_err(|_| parse_err(line, format!("malformed {what} `{token}`")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite {what} `{token}`")));
    }
    Ok(T::lit(v))
}

/// Parses a LIBSVM stream. Blank lines are skipped; line numbers in errors are 1-based.
///
/// The column count is the largest index seen, or `expected_cols` when given (which must be
/// at least the largest index). The returned matrix uses scalar blocks.
pub fn parse_libsvm<T: Scalar, R: BufRead>(
    reader: R,
    expected_cols: Option<usize>,
) -> Result<Dataset<T>> {
    let mut labels = Vec::new();
    let mut rows: Vec<Vec<(usize, T)>> = Vec::new();
    let mut max_index = 0usize;

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let mut tokens = line.split_whitespace();
        let Some(label) = tokens.next() else { continue };
        labels.push(parse_real::<T>(label, lineno, "label")?);

        let mut row = Vec::new();
        let mut prev = 0usize;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(lineno, format!("expected idx:val, got `{tok}`")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_err(lineno, format!("malformed index `{idx}`")))?;
            if idx == 0 {
                return Err(parse_err(lineno, "feature index 0 (indices are 1-based)"));
            }
            if idx <= prev {
                return Err(parse_err(
                    lineno,
                    format!("index {idx} does not increase (previous {prev})"),
                ));
            }
            prev = idx;
            row.push((idx - 1, parse_real::<T>(val, lineno, "value")?));
        }
        max_index = max_index.max(prev);
        rows.push(row);
    }

    let cols = match expected_cols {
        Some(n) if n < max_index => {
            return Err(Error::InvalidInput(format!(
                "expected {n} columns but found feature index {max_index}"
            )))
        }
        Some(n) => n,
        None => max_index,
    };
    let matrix = BlockedSparseMatrix::from_row_lists(&rows, cols)?;
    Dataset::new(matrix, labels)
}

/// Writes a dataset in LIBSVM format. Stored entries (including explicit zeros) are written.
pub fn write_libsvm<T: Scalar, W: Write>(dataset: &Dataset<T>, mut out: W) -> Result<()> {
    let rows = dataset.matrix().row_lists();
    for (row, label) in rows.iter().zip(dataset.labels()) {
        write!(out, "{label}")?;
        for &(c, v) in row {
            write!(out, " {}:{}", c + 1, v)?;
        }
        writeln!(out)?;
    }
    Ok(())
}
