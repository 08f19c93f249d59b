//! Shared helpers for checkpoint files and fingerprints.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Scientific notation with 17 significant digits; parses back bit-exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Hex SHA-256 prefix of the bit patterns of `values`.
pub fn fingerprint_f64(values: &[f64]) -> String {
    let mut hasher = Sha256::new();
    for v in values {
        hasher.update(v.to_bits().to_le_bytes());
    }
    hex_prefix(&hasher.finalize(), 16)
}

/// Hex SHA-256 prefix of arbitrary text.
pub fn fingerprint_str(text: &str) -> String {
    hex_prefix(&Sha256::digest(text.as_bytes()), 12)
}

fn hex_prefix(bytes: &[u8], chars: usize) -> String {
    let mut s = String::with_capacity(chars);
    for b in bytes {
        let _ = write!(s, "{b:02x}");
        if s.len() >= chars {
            break;
        }
    }
    s.truncate(chars);
    s
}

/// One row of a named-array checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedArray {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

const ARRAY_HEADER: &str = "name,rows,cols,values";

/// Writes arrays one per line: `name,rows,cols,v0,v1,...` (row-major).
pub fn write_named_arrays(path: &Path, arrays: &[NamedArray]) -> Result<()> {
    let mut out = format!("{ARRAY_HEADER}\n");
    for a in arrays {
        debug_assert_eq!(a.values.len(), a.rows * a.cols);
        out.push_str(&format!("{},{},{}", a.name, a.rows, a.cols));
        for v in &a.values {
            out.push(',');
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_named_arrays(path: &Path) -> Result<Vec<NamedArray>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some(ARRAY_HEADER) {
        return Err(Error::parse(path, format!("expected header `{ARRAY_HEADER}`")));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let mut fields = line.split(',');
        let bad = |msg: String| Error::parse(path, format!("line {}: {msg}", i + 2));
        let name = fields.next().unwrap_or_default().to_string();
        let rows: usize = fields
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("missing row count".into()))?;
        let cols: usize = fields
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("missing column count".into()))?;
        let values = fields
            .map(|s| s.parse::<f64>().map_err(|e| bad(format!("{s:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if values.len() != rows * cols {
            return Err(bad(format!(
                "{name}: shape {rows}x{cols} but {} values",
                values.len()
            )));
        }
        out.push(NamedArray { name, rows, cols, values });
    }
    Ok(out)
}

/// Finds `name` in `arrays` and checks its shape.
pub fn take_array(
    arrays: &[NamedArray],
    name: &str,
    rows: usize,
    cols: usize,
) -> Result<Vec<f64>> {
    let a = arrays
        .iter()
        .find(|a| a.name == name)
        .ok_or_else(|| Error::Shape(format!("checkpoint has no array `{name}`")))?;
    if (a.rows, a.cols) != (rows, cols) {
        return Err(Error::Shape(format!(
            "`{name}` is {}x{}, expected {rows}x{cols}",
            a.rows, a.cols
        )));
    }
    Ok(a.values.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn float_format_round_trips(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            let back: f64 = fmt_f64(x).parse().unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }
    }

    #[test]
    fn named_arrays_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        let arrays = vec![
            NamedArray { name: "w".into(), rows: 2, cols: 2, values: vec![0.1, -2.5e-300, 3.0, 1.0 / 3.0] },
            NamedArray { name: "b".into(), rows: 1, cols: 1, values: vec![-0.0] },
        ];
        write_named_arrays(&path, &arrays).unwrap();
        let back = read_named_arrays(&path).unwrap();
        assert_eq!(back, arrays);
        assert!(take_array(&back, "w", 2, 2).is_ok());
        assert!(take_array(&back, "w", 4, 1).is_err());
        assert!(take_array(&back, "x", 1, 1).is_err());
    }
}
