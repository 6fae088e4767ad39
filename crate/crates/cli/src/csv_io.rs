//! Dense matrix/vector CSV: first line `m,n`, then row-major rows.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};

pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    /// Row-major values.
    pub data: Vec<f64>,
}

pub fn read_matrix(path: &Path) -> Result<DenseMatrix> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .with_context(|| format!("{}: missing m,n header", path.display()))?;
    let mut parts = header.split(',');
    let rows: usize = parts
        .next()
        .and_then(|s| s.trim().parse().ok())
        .with_context(|| format!("{}: bad row count", path.display()))?;
    let cols: usize = parts
        .next()
        .and_then(|s| s.trim().parse().ok())
        .with_context(|| format!("{}: bad column count", path.display()))?;
    let mut data = Vec::with_capacity(rows * cols);
    for (r, line) in lines.enumerate() {
        if r >= rows {
            bail!("{}: more than {rows} data rows", path.display());
        }
        let mut count = 0usize;
        for field in line.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .with_context(|| format!("{}: bad value on data row {r}", path.display()))?;
            data.push(v);
            count += 1;
        }
        if count != cols {
            bail!(
                "{}: row {r} has {count} values, expected {cols}",
                path.display()
            );
        }
    }
    if data.len() != rows * cols {
        bail!(
            "{}: expected {rows}x{cols} values, found {}",
            path.display(),
            data.len()
        );
    }
    Ok(DenseMatrix { rows, cols, data })
}

/// Reads a single-column matrix as a vector.
pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let m = read_matrix(path)?;
    if m.cols != 1 {
        bail!("{}: expected a single-column vector", path.display());
    }
    Ok(m.data)
}

pub fn write_matrix(path: &Path, rows: usize, cols: usize, row_major: &[f64]) -> Result<()> {
    debug_assert_eq!(row_major.len(), rows * cols);
    let mut out = String::new();
    out.push_str(&format!("{rows},{cols}\n"));
    for r in 0..rows {
        for c in 0..cols {
            if c > 0 {
                out.push(',');
            }
            out.push_str(&format!("{}", row_major[r * cols + c]));
        }
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("cannot write {}", path.display()))
}

pub fn write_vector(path: &Path, values: &[f64]) -> Result<()> {
    write_matrix(path, values.len(), 1, values)
}
