//! CSV and JSON serialisation. Floats are written with 17 significant
//! digits so that every value round-trips exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{CliError, CliResult};

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn csv_writer(path: &Path) -> CliResult<csv::Writer<File>> {
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?)
}

/// Square matrix with a header row and column of labels.
pub fn write_matrix_csv(path: &Path, labels: &[String], m: &DMatrix<f64>) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec![String::from("link")];
    header.extend(labels.iter().cloned());
    w.write_record(&header)?;
    for (r, label) in labels.iter().enumerate() {
        let mut row = vec![label.clone()];
        row.extend((0..m.ncols()).map(|c| fmt_f64(m[(r, c)])));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a matrix written by [`write_matrix_csv`].
pub fn read_matrix_csv(path: &Path) -> CliResult<(Vec<String>, DMatrix<f64>)> {
    let mut r = csv::Reader::from_path(path)?;
    let labels: Vec<String> = r.headers()?.iter().skip(1).map(String::from).collect();
    let size = labels.len();
    let mut m = DMatrix::zeros(size, size);
    let mut rows = 0;
    for (i, record) in r.records().enumerate() {
        let record = record?;
        if i >= size || record.len() != size + 1 || record[0] != labels[i] {
            return Err(CliError::usage(format!("{}: malformed row {}", path.display(), i + 1)));
        }
        for c in 0..size {
            m[(i, c)] = parse_f64(&record[c + 1], path)?;
        }
        rows += 1;
    }
    if rows != size {
        return Err(CliError::usage(format!("{}: expected {size} rows, got {rows}", path.display())));
    }
    Ok((labels, m))
}

pub fn parse_f64(s: &str, path: &Path) -> CliResult<f64> {
    s.trim().parse().map_err(|_| CliError::usage(format!("{}: not a number: {s:?}", path.display())))
}

pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}
