//! Numeric CSV input: observation matrices and sample statistics.

use std::path::Path;

use crate::error::{Error, Result};
use crate::estimators::SampleStats;
use crate::scenarios::Observations;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestOptions {
    /// Skip the first row.
    pub header: bool,
    /// Subtract column means before computing `S`.
    pub center: bool,
}

/// Reads a rectangular numeric CSV (rows are observations, columns variables).
pub fn read_observations(path: &Path, options: IngestOptions) -> Result<Observations> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_observations(file, path, options)
}

/// Parses CSV text from any reader; `origin` only labels errors.
pub fn parse_observations<R: std::io::Read>(
    reader: R,
    origin: &Path,
    options: IngestOptions,
) -> Result<Observations> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(options.header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut data = Vec::new();
    let mut width: Option<usize> = None;
    let mut rows = 0;
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(parse_err(
                    line,
                    format!("expected {w} fields, found {}", record.len()),
                ))
            }
            _ => {}
        }
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                parse_err(line, format!("column {}: `{cell}` is not a number", col + 1))
            })?;
            data.push(v);
        }
        rows += 1;
    }
    let p = width.ok_or_else(|| parse_err(1, "no data rows".into()))?;
    let mut obs = Observations::new(rows, p, data)?;
    if options.center {
        obs.center();
    }
    Ok(obs)
}

/// Reads a data file and returns `S = n^{-1} sum_i x_i x_i^T`.
pub fn ingest_csv(path: &Path, options: IngestOptions) -> Result<SampleStats> {
    Ok(SampleStats::from_observations(&read_observations(path, options)?))
}
