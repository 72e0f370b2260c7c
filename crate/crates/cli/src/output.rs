//! CSV and JSON writers shared by the harness.

use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

/// Shortest round-trip decimal, switching to exponent notation for very
/// small or large magnitudes.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Writes a numeric table with the given header.
pub fn write_table(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|&v| num(v)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|c| c.to_string()).collect()
}

/// Reads a numeric table; returns the header and the columns.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let mut cols = vec![Vec::new(); header.len()];
    for rec in r.records() {
        let rec = rec?;
        for (c, field) in cols.iter_mut().zip(rec.iter()) {
            c.push(field.parse::<f64>().with_context(|| format!("bad number {field:?} in {}", path.display()))?);
        }
    }
    Ok((header, cols))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_round_trips() {
        for v in [0.0, 1.0, -0.25, 1e-87, 3.0e20, 0.1 + 0.2, f64::NAN] {
            let s = num(v);
            let back: f64 = s.parse().unwrap();
            assert!(back == v || (v.is_nan() && back.is_nan()), "{v} -> {s}");
        }
        assert_eq!(num(1e-87), "1e-87");
    }

    #[test]
    fn table_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/t.csv");
        write_table(&p, &header(&["t", "x"]), vec![vec![0.0, 1.0], vec![0.1, 0.9]]).unwrap();
        let (h, cols) = read_table(&p).unwrap();
        assert_eq!(h, vec!["t", "x"]);
        assert_eq!(cols[1], vec![1.0, 0.9]);
    }
}
