//! CSV output tables and trace files.
//!
//! Tables carry a `#` comment line naming the dB reference, then a header
//! row. Delays are written in ns with 6 significant digits, powers in dB with
//! 4 decimals, and `-inf` (or any infinite ratio) as an empty field. Trace
//! files use the same layout but keep full float precision.

use std::path::Path;

use roomem::{PdpTrace, Scale};

use crate::error::{CliError, CliResult};

pub const DB_REFERENCE: &str =
    "# dB re 1 s^-1 (power per unit transmit power per second of delay); empty field = -inf";

/// `v` with 6 significant digits in fixed notation.
pub fn sig6(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    format!("{v:.decimals$}")
}

/// Power in dB with 4 decimals; infinite values become an empty field.
pub fn db4(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.4}")
    } else {
        String::new()
    }
}

pub fn lin_to_db(v: f64) -> f64 {
    10.0 * v.log10()
}

fn write_rows(path: &Path, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(DB_REFERENCE.as_bytes());
    buf.push(b'\n');
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let csv_err = |e: csv::Error| CliError::io(path, std::io::Error::other(e));
        w.write_record(header).map_err(csv_err)?;
        for row in rows {
            w.write_record(row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| CliError::io(path, e))?;
    }
    std::fs::write(path, buf).map_err(|e| CliError::io(path, e))
}

/// Writes a table whose first column holds delays (s, written in ns) or
/// distances, formatted with 6 significant digits, and whose remaining
/// columns hold dB values.
pub fn write_table(
    path: &Path,
    header: &[&str],
    key: &[f64],
    columns: &[Vec<f64>],
) -> CliResult<()> {
    let rows: Vec<Vec<String>> = key
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            std::iter::once(sig6(k))
                .chain(columns.iter().map(|c| db4(c[i])))
                .collect()
        })
        .collect();
    write_rows(path, header, &rows)
}

/// Writes a trace at full precision: `delay_ns` and `power_db` or
/// `power_linear`.
pub fn write_trace(path: &Path, trace: &PdpTrace) -> CliResult<()> {
    let name = match trace.scale() {
        Scale::Db => "power_db",
        Scale::Linear => "power_linear",
    };
    let rows: Vec<Vec<String>> = trace
        .delays()
        .zip(trace.values())
        .map(|(d, &v)| {
            let value = if v.is_finite() {
                format!("{v:e}")
            } else {
                String::new()
            };
            vec![format!("{:e}", d * 1e9), value]
        })
        .collect();
    write_rows(path, &["delay_ns", name], &rows)
}

fn parse_field(path: &Path, line: u64, column: &str, field: &str, scale: Scale) -> CliResult<f64> {
    if field.is_empty() {
        return match scale {
            Scale::Db => Ok(f64::NEG_INFINITY),
            Scale::Linear => Err(CliError::input(path, format!("row {line}: empty {column}"))),
        };
    }
    field.parse::<f64>().map_err(|_| {
        CliError::input(
            path,
            format!("row {line}: cannot parse {column} value {field:?}"),
        )
    })
}

/// Reads one trace from a CSV whose first column is `delay_ns` or `delay_s`.
///
/// `column` selects the value column by name (default: the second column).
/// Column names ending in `_linear` are read as linear power, all others as
/// dB. Row numbers in errors are file line numbers.
pub fn read_trace(path: &Path, column: Option<&str>) -> CliResult<PdpTrace> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| CliError::input(path, format!("cannot read header: {e}")))?
        .clone();
    let unit = match headers.get(0) {
        Some("delay_ns") => 1e-9,
        Some("delay_s") => 1.0,
        other => {
            return Err(CliError::input(
                path,
                format!("first column must be delay_ns or delay_s, found {other:?}"),
            ))
        }
    };
    let index = match column {
        None if headers.len() >= 2 => 1,
        None => return Err(CliError::input(path, "no value column")),
        Some(name) => headers.iter().position(|h| h == name).ok_or_else(|| {
            let names: Vec<&str> = headers.iter().collect();
            CliError::input(path, format!("no column {name:?}; columns are {names:?}"))
        })?,
    };
    let name = headers.get(index).unwrap_or_default().to_string();
    let scale = if name.ends_with("_linear") {
        Scale::Linear
    } else {
        Scale::Db
    };

    let mut delays = Vec::new();
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::input(path, format!("row {line}: {e}"))
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let delay = parse_field(path, line, &headers[0], &record[0], Scale::Linear)?;
        let value = parse_field(path, line, &name, &record[index], scale)?;
        if !delay.is_finite() {
            return Err(CliError::input(
                path,
                format!("row {line}: delay must be finite"),
            ));
        }
        delays.push(delay * unit);
        values.push(value);
    }
    if delays.len() < 2 {
        return Err(CliError::input(path, "a trace needs at least two rows"));
    }

    // Delays may be rounded to 6 significant digits.
    let n = delays.len();
    let step = (delays[n - 1] - delays[0]) / (n - 1) as f64;
    let largest = delays[0].abs().max(delays[n - 1].abs());
    let rounding = if largest > 0.0 {
        10f64.powi(largest.log10().floor() as i32 - 5)
    } else {
        0.0
    };
    let rel_tol = 1e-9 + rounding / step.abs().max(f64::MIN_POSITIVE);
    PdpTrace::from_delays(&delays, values, scale, rel_tol)
        .map_err(|e| CliError::input(path, e.to_string()))
}
