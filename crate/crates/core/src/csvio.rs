//! Shared CSV helpers: name-based column binding and fixed-precision floats.

use std::collections::HashMap;

/// Problems with the layout or content of a CSV file.
#[derive(Debug, thiserror::Error)]
pub enum SchemaError {
    #[error("missing header")]
    MissingHeader,
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("unexpected column `{0}`")]
    UnknownColumn(String),
    #[error("column `{0}` appears more than once")]
    DuplicateColumn(String),
    #[error("row {row}: expected {expected} fields, found {found}")]
    RowLength {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}, column `{column}`: cannot parse `{value}`")]
    BadValue {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}: {message}")]
    Invalid { row: usize, message: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Formats with 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(value: f64) -> String {
    format!("{value:.16e}")
}

/// Data row numbers count the header as row 1.
pub(crate) struct Table {
    columns: HashMap<String, usize>,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    /// Reads `text` and checks the header holds exactly `expected` (any order).
    pub(crate) fn parse(text: &str, expected: &[&str]) -> Result<Self, SchemaError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = reader.headers()?.clone();
        if header.is_empty() || header.iter().all(str::is_empty) {
            return Err(SchemaError::MissingHeader);
        }
        let mut columns = HashMap::new();
        for (i, name) in header.iter().enumerate() {
            if !expected.contains(&name) {
                return Err(SchemaError::UnknownColumn(name.to_string()));
            }
            if columns.insert(name.to_string(), i).is_some() {
                return Err(SchemaError::DuplicateColumn(name.to_string()));
            }
        }
        if let Some(missing) = expected.iter().find(|c| !columns.contains_key(**c)) {
            return Err(SchemaError::MissingColumn(missing.to_string()));
        }
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record?;
            if record.len() != header.len() {
                return Err(SchemaError::RowLength {
                    row: i + 2,
                    expected: header.len(),
                    found: record.len(),
                });
            }
            rows.push(record);
        }
        Ok(Self { columns, rows })
    }

    pub(crate) fn len(&self) -> usize {
        self.rows.len()
    }

    fn raw(&self, row: usize, column: &str) -> &str {
        &self.rows[row][self.columns[column]]
    }

    pub(crate) fn f64(&self, row: usize, column: &str) -> Result<f64, SchemaError> {
        let raw = self.raw(row, column);
        raw.parse().map_err(|_| SchemaError::BadValue {
            row: row + 2,
            column: column.to_string(),
            value: raw.to_string(),
        })
    }

    pub(crate) fn u32(&self, row: usize, column: &str) -> Result<u32, SchemaError> {
        let raw = self.raw(row, column);
        raw.parse().map_err(|_| SchemaError::BadValue {
            row: row + 2,
            column: column.to_string(),
            value: raw.to_string(),
        })
    }
}
