//! CSV ingestion and output for observed datasets. Missing cells are the
//! literal token `NA`; indicators are derived from it.

use std::io::{Read, Write};

use thiserror::Error;

use crate::estimate::{EstimateError, ObservedDataset};

pub const MISSING_TOKEN: &str = "NA";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("row {row}, column `{column}`: cannot parse `{value}` as a number")]
    BadNumber { row: usize, column: String, value: String },
    #[error("row {row} has {got} fields, expected {expected}")]
    Ragged { row: usize, got: usize, expected: usize },
    #[error("the file has no data rows")]
    NoRows,
    #[error("column `{0}` is missing in every row")]
    AllMissing(String),
    #[error(transparent)]
    Data(#[from] EstimateError),
}

/// Parses a header row of variable names followed by numeric rows.
pub fn read_csv<R: Read>(reader: R) -> Result<ObservedDataset, IoError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(reader);
    let names: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut columns: Vec<Vec<Option<f64>>> = vec![Vec::new(); names.len()];
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        if rec.len() != names.len() {
            return Err(IoError::Ragged {
                row,
                got: rec.len(),
                expected: names.len(),
            });
        }
        for (j, field) in rec.iter().enumerate() {
            let v = if field == MISSING_TOKEN {
                None
            } else {
                match field.parse::<f64>() {
                    Ok(v) if v.is_finite() => Some(v),
                    _ => {
                        return Err(IoError::BadNumber {
                            row,
                            column: names[j].clone(),
                            value: field.to_string(),
                        })
                    }
                }
            };
            columns[j].push(v);
        }
    }
    if columns.first().is_none_or(Vec::is_empty) {
        return Err(IoError::NoRows);
    }
    if let Some(j) = columns.iter().position(|c| c.iter().all(Option::is_none)) {
        return Err(IoError::AllMissing(names[j].clone()));
    }
    Ok(ObservedDataset::new(names, columns)?)
}

/// Writes the dataset in the format [`read_csv`] accepts.
pub fn write_csv<W: Write>(data: &ObservedDataset, writer: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(data.names())?;
    for i in 0..data.n() {
        w.write_record(
            data.row(i)
                .into_iter()
                .map(|v| v.map_or_else(|| MISSING_TOKEN.to_string(), |v| v.to_string())),
        )?;
    }
    w.flush()?;
    Ok(())
}
