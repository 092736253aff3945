//! CSV and binary artifact I/O.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gp::TimeSeries;

/// Reads a `time,value` CSV with a header row.
pub fn read_series_csv(path: &Path) -> Result<TimeSeries> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let headers = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    let names: Vec<&str> = headers.iter().map(str::trim).collect();
    if names != ["time", "value"] {
        return Err(parse_err(1, format!("expected header time,value, found {}", names.join(","))));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |k: usize, name: &str| -> Result<f64> {
            let raw = record.get(k).unwrap_or("").trim();
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(line, format!("invalid {name} {raw:?}")))
        };
        let t = field(0, "time")?;
        let v = field(1, "value")?;
        if let Some(&prev) = times.last() {
            if !(t > prev) {
                return Err(Error::Input(format!(
                    "{}: times must be strictly increasing (line {line}: {t} after {prev})",
                    path.display()
                )));
            }
        }
        times.push(t);
        values.push(v);
    }
    TimeSeries::new(times, values).map_err(|e| e.in_stage(path.display().to_string()))
}

/// Writes a header row followed by numeric rows.
pub fn write_csv(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::Writer::from_writer(BufWriter::new(file));
    let io_err = |e: csv::Error| Error::io(path, std::io::Error::other(e));
    writer.write_record(header).map_err(io_err)?;
    for row in rows {
        writer
            .write_record(row.iter().map(|v| v.to_string()))
            .map_err(io_err)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

pub fn write_series_csv(path: &Path, times: &[f64], values: &[f64]) -> Result<()> {
    write_csv(
        path,
        &["time".into(), "value".into()],
        times.iter().zip(values).map(|(&t, &v)| vec![t, v]),
    )
}

/// Square matrix as a little-endian `u64` dimension followed by row-major
/// little-endian `f64` entries.
pub fn write_matrix_bin(path: &Path, matrix: &DMatrix<f64>) -> Result<()> {
    let n = matrix.nrows();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut write = |bytes: &[u8]| out.write_all(bytes).map_err(|e| Error::io(path, e));
    write(&(n as u64).to_le_bytes())?;
    for j in 0..n {
        for k in 0..matrix.ncols() {
            write(&matrix[(j, k)].to_le_bytes())?;
        }
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_matrix_bin(path: &Path) -> Result<DMatrix<f64>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |msg: &str| Error::Input(format!("{}: {msg}", path.display()));
    if bytes.len() < 8 {
        return Err(bad("missing dimension header"));
    }
    let n = u64::from_le_bytes(bytes[..8].try_into().expect("8 bytes")) as usize;
    if bytes.len() != 8 + n * n * 8 {
        return Err(bad("payload length does not match dimension header"));
    }
    let entries = bytes[8..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    Ok(DMatrix::from_row_iterator(n, n, entries))
}

/// Compact label for a state value, e.g. `0.9000000000000001` → `0.9`.
pub fn state_label(value: f64) -> String {
    let s = format!("{value:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.to_string() }
}
