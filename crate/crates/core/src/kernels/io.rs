//! Kernel CSV: `n` rows of `n` comma-separated decimals, no header.

use std::fmt::Write as _;
use std::path::Path;

use super::{KernelKind, KernelMatrix};
use crate::error::{Error, Result};

/// Absolute tolerance for the symmetry check on read.
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;

pub fn read_kernel(path: impl AsRef<Path>) -> Result<KernelMatrix> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_kernel(&text)
}

pub fn write_kernel(k: &KernelMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, render_kernel(k)).map_err(|e| Error::io(path, e))
}

pub fn render_kernel(k: &KernelMatrix) -> String {
    let mut out = String::new();
    for i in 0..k.n() {
        for (j, v) in k.row(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

/// Parses a kernel CSV; near-symmetric input (within tolerance) is symmetrized.
pub fn parse_kernel(text: &str) -> Result<KernelMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|tok| {
                let tok = tok.trim();
                tok.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::format(k + 1, format!("invalid kernel value '{tok}'")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let n = rows.len();
    if n == 0 {
        return Err(Error::format(1, "empty kernel file"));
    }
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(Error::format(i + 1, format!("row has {} columns, expected {n} (square matrix)", r.len())));
    }
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        entries[i * n + i] = rows[i][i];
        for j in (i + 1)..n {
            let (a, b) = (rows[i][j], rows[j][i]);
            if (a - b).abs() > SYMMETRY_TOLERANCE {
                return Err(Error::format(i + 1, format!("kernel not symmetric at ({i},{j}): {a} vs {b}")));
            }
            let v = 0.5 * (a + b);
            entries[i * n + j] = v;
            entries[j * n + i] = v;
        }
    }
    KernelMatrix::new(n, entries, KernelKind::External, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let k = KernelMatrix::from_fn(4, KernelKind::External, |i, j| 1.0 / (1.0 + (i + j) as f64) + 1e-13 * i as f64).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("k.csv");
        write_kernel(&k, &p).unwrap();
        let back = read_kernel(&p).unwrap();
        assert_eq!(back.entries(), k.entries());
    }

    #[test]
    fn non_square_rejected() {
        let err = parse_kernel("1,2,3,4\n2,1,3,4\n3,3,1,4\n").unwrap_err();
        assert!(matches!(err, Error::Format { .. }));
    }

    #[test]
    fn asymmetric_rejected() {
        let err = parse_kernel("1,0.5\n0.501,1\n").unwrap_err();
        assert!(err.to_string().contains("not symmetric"));
        assert!(parse_kernel("1,0.5\n0.5000000000001,1\n").is_ok());
    }

    #[test]
    fn garbage_rejected() {
        assert!(parse_kernel("").is_err());
        assert!(parse_kernel("1,x\nx,1\n").is_err());
        assert!(parse_kernel("1,nan\nnan,1\n").is_err());
    }
}
