//! Artifact formats.
//!
//! CSV: a `#` comment line with `seed=` and `timestamp=`, a header line, then
//! rows of `{:.16e}` values (17 significant digits, `.` decimal separator).
//! The body below the comment line depends only on the data. JSON is pretty
//! printed with a trailing newline.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{GelfandError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvMeta {
    pub seed: u64,
    pub timestamp: String,
}

pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn csv_string(meta: &CsvMeta, header: &[&str], rows: &[Vec<f64>]) -> Result<String> {
    if let Some(bad) = rows.iter().find(|r| r.len() != header.len()) {
        return Err(GelfandError::Io(format!(
            "row has {} fields, header has {}",
            bad.len(),
            header.len()
        )));
    }
    let mut out = format!("# seed={} timestamp={}\n", meta.seed, meta.timestamp);
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format_value(*v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    Ok(out)
}

pub fn write_csv(path: &Path, meta: &CsvMeta, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    fs::write(path, csv_string(meta, header, rows)?)?;
    Ok(())
}

/// Parse a file written by [`write_csv`]: `(meta, header, rows)`.
pub fn parse_csv(text: &str) -> Result<(CsvMeta, Vec<String>, Vec<Vec<f64>>)> {
    let bad = |m: &str| GelfandError::Io(format!("malformed csv: {m}"));
    let mut lines = text.lines();
    let first = lines.next().ok_or_else(|| bad("empty"))?;
    let comment = first
        .strip_prefix("# ")
        .ok_or_else(|| bad("missing comment line"))?;
    let mut seed = None;
    let mut timestamp = None;
    for part in comment.split_whitespace() {
        if let Some(v) = part.strip_prefix("seed=") {
            seed = v.parse().ok();
        } else if let Some(v) = part.strip_prefix("timestamp=") {
            timestamp = Some(v.to_string());
        }
    }
    let meta = CsvMeta {
        seed: seed.ok_or_else(|| bad("seed"))?,
        timestamp: timestamp.ok_or_else(|| bad("timestamp"))?,
    };
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| bad("header"))?
        .split(',')
        .map(String::from)
        .collect();
    let rows = lines
        .map(|l| {
            l.split(',')
                .map(|v| v.parse::<f64>().map_err(|_| bad(v)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((meta, header, rows))
}

/// CSV text with the comment line removed, for reproducibility comparisons.
pub fn csv_body(text: &str) -> &str {
    text.split_once('\n').map_or("", |(_, body)| body)
}

pub fn json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, json_string(value)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let meta = CsvMeta {
            seed: 7,
            timestamp: "0".into(),
        };
        let rows = vec![
            vec![0.1, -1.0 / 3.0, 6.02214076e23],
            vec![f64::MIN_POSITIVE, 0.0, -2.5e-300],
        ];
        let text = csv_string(&meta, &["a", "b", "c"], &rows).unwrap();
        let (m, h, r) = parse_csv(&text).unwrap();
        assert_eq!(m, meta);
        assert_eq!(h, ["a", "b", "c"]);
        assert_eq!(r, rows);
        assert!(text.lines().nth(2).unwrap().starts_with("1.0000000000000001e-1,"));
    }

    #[test]
    fn body_ignores_timestamp() {
        let rows = vec![vec![1.0]];
        let a = csv_string(
            &CsvMeta {
                seed: 1,
                timestamp: "x".into(),
            },
            &["v"],
            &rows,
        )
        .unwrap();
        let b = csv_string(
            &CsvMeta {
                seed: 1,
                timestamp: "y".into(),
            },
            &["v"],
            &rows,
        )
        .unwrap();
        assert_ne!(a, b);
        assert_eq!(csv_body(&a), csv_body(&b));
    }

    #[test]
    fn ragged_rows_rejected() {
        let meta = CsvMeta {
            seed: 0,
            timestamp: "0".into(),
        };
        assert!(csv_string(&meta, &["a", "b"], &[vec![1.0]]).is_err());
        assert!(parse_csv("no comment\n").is_err());
    }
}
