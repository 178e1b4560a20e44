//! Two-column plain-text tables (`x value` per line, `#` comments).

use crate::error::{Error, Result};
use std::path::Path;

pub fn parse_two_column(text: &str, label: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 2 {
            return Err(Error::Table {
                path: label.to_string(),
                line: i + 1,
                reason: format!("expected 2 columns, found {}", cols.len()),
            });
        }
        let parse = |c: &str| {
            c.parse::<f64>().map_err(|_| Error::Table {
                path: label.to_string(),
                line: i + 1,
                reason: format!("`{c}` is not a number"),
            })
        };
        let x = parse(cols[0])?;
        let y = parse(cols[1])?;
        if !(x.is_finite() && y.is_finite()) {
            return Err(Error::Table {
                path: label.to_string(),
                line: i + 1,
                reason: "non-finite value".into(),
            });
        }
        if let Some(&prev) = xs.last() {
            if x <= prev {
                return Err(Error::Table {
                    path: label.to_string(),
                    line: i + 1,
                    reason: "first column must be strictly increasing".into(),
                });
            }
        }
        xs.push(x);
        ys.push(y);
    }
    if xs.len() < 2 {
        return Err(Error::Table {
            path: label.to_string(),
            line: 0,
            reason: "table needs at least two rows".into(),
        });
    }
    Ok((xs, ys))
}

pub fn read_two_column(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_two_column(&text, &path.display().to_string())
}

/// Piecewise-linear interpolation with constant extension past both ends.
pub(crate) fn interp_clamped(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let i = xs.partition_point(|&t| t <= x) - 1;
    let w = (x - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] + w * (ys[i + 1] - ys[i])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_comments() {
        let text = "# header\n-1 0.5  # left\n\n0 1.0\n1\t0.5\n";
        let (x, y) = parse_two_column(text, "t").unwrap();
        assert_eq!(x, vec![-1.0, 0.0, 1.0]);
        assert_eq!(y, vec![0.5, 1.0, 0.5]);
    }

    #[test]
    fn reports_line_numbers() {
        let err = parse_two_column("0 1\n1 2 3\n", "t").unwrap_err();
        assert!(matches!(err, Error::Table { line: 2, .. }), "{err}");
        let err = parse_two_column("0 1\n0 2\n", "t").unwrap_err();
        assert!(matches!(err, Error::Table { line: 2, .. }));
        assert!(parse_two_column("0 x\n1 2\n", "t").is_err());
    }

    #[test]
    fn interpolation_is_clamped() {
        let xs = [0.0, 1.0, 3.0];
        let ys = [0.0, 1.0, 2.0];
        assert_eq!(interp_clamped(&xs, &ys, -5.0), 0.0);
        assert_eq!(interp_clamped(&xs, &ys, 0.5), 0.5);
        assert_eq!(interp_clamped(&xs, &ys, 2.0), 1.5);
        assert_eq!(interp_clamped(&xs, &ys, 9.0), 2.0);
    }
}
