//! Panel CSV files: a `date` column of `YYYY-MM` periods followed by one
//! numeric column per series.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use coint_core::{DMatrix, Period, SeriesPanel};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot open {path}: {source}")]
    Open {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("line {line}, column {column:?}: {message}")]
    Cell {
        line: u64,
        column: String,
        message: String,
    },
    #[error("{0}")]
    Panel(String),
}

fn line_of(record: &csv::StringRecord, fallback: u64) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(fallback)
}

fn csv_error(e: csv::Error) -> LoadError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    LoadError::Malformed {
        line,
        message: e.to_string(),
    }
}

/// Parse a panel from any reader.
pub fn parse_csv<R: Read>(reader: R) -> Result<SeriesPanel, LoadError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    if headers.get(0) != Some("date") {
        return Err(LoadError::Malformed {
            line: 1,
            message: "first header must be \"date\"".into(),
        });
    }
    let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    if names.is_empty() {
        return Err(LoadError::Malformed {
            line: 1,
            message: "no series columns after \"date\"".into(),
        });
    }
    if let Some(empty) = names.iter().position(|n| n.is_empty()) {
        return Err(LoadError::Malformed {
            line: 1,
            message: format!("header column {} is empty", empty + 2),
        });
    }

    let mut periods: Vec<Period> = Vec::new();
    let mut data: Vec<f64> = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_error)?;
        let line = line_of(&record, i as u64 + 2);
        if record.len() != names.len() + 1 {
            return Err(LoadError::Malformed {
                line,
                message: format!("expected {} fields, found {}", names.len() + 1, record.len()),
            });
        }
        let period: Period = record[0].parse().map_err(|_| LoadError::Cell {
            line,
            column: "date".into(),
            message: format!("{:?} is not a YYYY-MM period", &record[0]),
        })?;
        if let Some(&prev) = periods.last() {
            let expected = prev.next();
            if period == prev {
                return Err(LoadError::Cell {
                    line,
                    column: "date".into(),
                    message: format!("duplicate period {period}"),
                });
            }
            if period > expected {
                return Err(LoadError::Cell {
                    line,
                    column: "date".into(),
                    message: format!("gap: period {expected} is missing before {period}"),
                });
            }
            if period < prev {
                return Err(LoadError::Cell {
                    line,
                    column: "date".into(),
                    message: format!("period {period} is out of order after {prev}"),
                });
            }
        }
        periods.push(period);
        for (j, cell) in record.iter().skip(1).enumerate() {
            let value: f64 = cell.parse().map_err(|_| LoadError::Cell {
                line,
                column: names[j].clone(),
                message: if cell.is_empty() {
                    "missing value".into()
                } else {
                    format!("{cell:?} is not a number")
                },
            })?;
            if !value.is_finite() {
                return Err(LoadError::Cell {
                    line,
                    column: names[j].clone(),
                    message: format!("{cell:?} is not finite"),
                });
            }
            data.push(value);
        }
    }
    if periods.is_empty() {
        return Err(LoadError::Malformed {
            line: 2,
            message: "no data rows".into(),
        });
    }
    let values = DMatrix::from_row_slice(periods.len(), names.len(), &data);
    SeriesPanel::new(names, periods, values).map_err(|e| LoadError::Panel(e.to_string()))
}

pub fn load_csv(path: &Path) -> Result<SeriesPanel, LoadError> {
    let file = File::open(path).map_err(|source| LoadError::Open {
        path: path.display().to_string(),
        source,
    })?;
    parse_csv(file)
}

/// Write with shortest round-trip float formatting, so a reload reproduces
/// every value bit for bit.
pub fn write_csv<W: Write>(panel: &SeriesPanel, writer: W) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["date".to_string()];
    header.extend(panel.names().iter().cloned());
    wtr.write_record(&header)?;
    let values = panel.values();
    for (i, period) in panel.periods().iter().enumerate() {
        let mut row = vec![period.to_string()];
        row.extend(values.row(i).iter().map(|v| format!("{v}")));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_csv(panel: &SeriesPanel, path: &Path) -> std::io::Result<()> {
    let file = File::create(path)?;
    write_csv(panel, file).map_err(std::io::Error::other)
}
