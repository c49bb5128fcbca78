//! `time_s,p_excited[,sigma]` files. Floats use Rust's shortest round-trip
//! formatting and rows end in LF, so output is byte-stable across platforms.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::signal_analysis::TimeSeries;

pub const HEADER: &str = "time_s,p_excited";
pub const HEADER_WITH_SIGMA: &str = "time_s,p_excited,sigma";

pub fn write_series(times: &[f64], values: &[f64], sigma: Option<&[f64]>) -> String {
    let mut out = String::with_capacity(32 * times.len());
    out.push_str(if sigma.is_some() { HEADER_WITH_SIGMA } else { HEADER });
    out.push('\n');
    for (i, (t, v)) in times.iter().zip(values).enumerate() {
        match sigma {
            Some(s) => writeln!(out, "{t},{v},{}", s[i]),
            None => writeln!(out, "{t},{v}"),
        }
        .expect("writing to a String cannot fail");
    }
    out
}

fn csv_error(row: usize, message: impl Into<String>) -> Error {
    Error::Csv { row, message: message.into() }
}

/// Parse a series. Rows are numbered from 1 with the header as row 1.
pub fn read_series(text: &str) -> Result<TimeSeries> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    let (_, header) = lines.next().ok_or_else(|| csv_error(1, "file is empty"))?;
    let with_sigma = match header.trim() {
        HEADER => false,
        HEADER_WITH_SIGMA => true,
        other => return Err(csv_error(1, format!("expected header '{HEADER}[,sigma]', got '{other}'"))),
    };
    let columns = if with_sigma { 3 } else { 2 };
    let (mut times, mut values, mut sigma) = (Vec::new(), Vec::new(), Vec::new());
    for (row, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != columns {
            return Err(csv_error(row, format!("expected {columns} fields, got {}", fields.len())));
        }
        let number = |s: &str, name: &str| -> Result<f64> {
            let v: f64 = s.parse().map_err(|_| csv_error(row, format!("{name} '{s}' is not a number")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(csv_error(row, format!("{name} must be finite")))
            }
        };
        let t = number(fields[0], "time_s")?;
        if let Some(&prev) = times.last() {
            if t <= prev {
                return Err(csv_error(row, format!("time_s {t} does not increase (previous {prev})")));
            }
        }
        times.push(t);
        values.push(number(fields[1], "p_excited")?);
        if with_sigma {
            let s = number(fields[2], "sigma")?;
            if s <= 0.0 {
                return Err(csv_error(row, "sigma must be positive"));
            }
            sigma.push(s);
        }
    }
    let rows = times.len();
    TimeSeries::new(times, values, with_sigma.then_some(sigma))
        .map_err(|e| csv_error(rows + 1, e.to_string()))
}
