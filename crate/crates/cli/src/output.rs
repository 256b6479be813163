//! Output formatting: locale-free floats at 17 significant digits, CSV and
//! JSON sinks.

use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// 17 significant digits, `.` decimal point, `nan`/`inf`/`-inf` spelled out.
/// Parsing the result back recovers the exact f64.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x == f64::INFINITY {
        "inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// Inverse of [`fmt_f64`].
#[cfg(test)]
pub fn parse_f64(s: &str) -> Option<f64> {
    match s {
        "nan" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => s.parse().ok(),
    }
}

/// Writes the rendered output to the path, or to stdout when absent.
pub fn emit(out: Option<&Path>, body: &str) -> std::io::Result<()> {
    match out {
        Some(path) => {
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            std::fs::write(path, body)
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes())
        }
    }
}

/// CSV body from a header and float rows.
pub fn csv_table(header: &str, rows: &[Vec<f64>]) -> String {
    let mut s = String::with_capacity(rows.len() * 64 + header.len() + 1);
    s.push_str(header);
    s.push('\n');
    for row in rows {
        let mut first = true;
        for &v in row {
            if !first {
                s.push(',');
            }
            s.push_str(&fmt_f64(v));
            first = false;
        }
        s.push('\n');
    }
    s
}
