//! CSV datasets and JSON artifacts on disk.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use causal_design_core::dataset::{building_columns, DatasetError};
use causal_design_core::{Dataset, ParameterSpec};
use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("row {row}, column {column}: cannot read {cell:?} as a number")]
    NonNumeric { row: usize, column: String, cell: String },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error(transparent)]
    Data(#[from] DatasetError),
}

impl IoError {
    /// True when the file was read but its content is unacceptable.
    pub fn is_content_error(&self) -> bool {
        !matches!(self, IoError::File { .. })
    }
}

fn open(path: &Path) -> Result<File, IoError> {
    File::open(path).map_err(|source| IoError::File {
        path: path.into(),
        source,
    })
}

fn create(path: &Path) -> Result<File, IoError> {
    File::create(path).map_err(|source| IoError::File {
        path: path.into(),
        source,
    })
}

/// Writes the header and rows; numbers use the shortest text that reads back
/// to the same `f64`.
pub fn write_csv<W: Write>(ds: &Dataset, out: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ds.columns().iter().map(|c| c.name.as_str()))?;
    let mut cells = Vec::with_capacity(ds.p());
    for row in ds.rows() {
        cells.clear();
        cells.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&cells)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn save_csv(ds: &Dataset, path: &Path) -> Result<(), IoError> {
    write_csv(ds, BufWriter::new(create(path)?))
}

/// Reads a building dataset laid out for `schema` (sampled, derived and
/// outcome columns). Header order is free; the result uses schema order.
/// Rows are numbered from 1, not counting the header.
pub fn read_csv<R: Read>(input: R, schema: &[ParameterSpec]) -> Result<Dataset, IoError> {
    let columns = building_columns(schema);
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    for name in &header {
        if !columns.iter().any(|c| &c.name == name) {
            return Err(DatasetError::UnknownColumn(name.clone()).into());
        }
    }
    let mut position = Vec::with_capacity(columns.len());
    for c in &columns {
        match header.iter().position(|h| h == &c.name) {
            Some(i) => position.push(i),
            None => return Err(DatasetError::MissingColumn(c.name.clone()).into()),
        }
    }
    let mut rows = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record?;
        let row = position
            .iter()
            .zip(&columns)
            .map(|(&at, c)| {
                let cell = record.get(at).unwrap_or("");
                cell.parse::<f64>().map_err(|_| IoError::NonNumeric {
                    row: i + 1,
                    column: c.name.clone(),
                    cell: cell.to_string(),
                })
            })
            .collect::<Result<Vec<f64>, IoError>>()?;
        rows.push(row);
    }
    Ok(Dataset::new(columns, rows, None)?)
}

pub fn load_csv(path: &Path, schema: &[ParameterSpec]) -> Result<Dataset, IoError> {
    read_csv(BufReader::new(open(path)?), schema)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    serde_json::from_reader(BufReader::new(open(path)?)).map_err(|source| IoError::Json {
        path: path.into(),
        source,
    })
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifact types serialize");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    write_text(path, &to_json(value))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    let mut f = create(path)?;
    f.write_all(text.as_bytes()).map_err(|source| IoError::File {
        path: path.into(),
        source,
    })
}
