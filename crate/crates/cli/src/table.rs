//! CSV reading/writing helpers and the fixed number formatting used by every
//! emitted file (6 significant digits, so golden-file comparisons are stable).

use std::path::Path;

use crate::error::CliError;

/// An in-memory CSV table with a header row.
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Table, CliError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
        let headers = reader
            .headers()
            .map_err(|e| CliError::Data(e.to_string()))?
            .iter()
            .map(|h| h.to_string())
            .collect();
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record
                .map_err(|e| CliError::Data(format!("row {}: {e}", i + 1)))?;
            rows.push(record.iter().map(|v| v.to_string()).collect());
        }
        if rows.is_empty() {
            return Err(CliError::Data(format!(
                "{} contains no data rows",
                path.display()
            )));
        }
        Ok(Table { headers, rows })
    }

    /// Index of a named column, or a data error naming the column.
    pub fn column_index(&self, name: &str) -> Result<usize, CliError> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| {
                CliError::Data(format!(
                    "column '{name}' not found in input header ({})",
                    self.headers.join(", ")
                ))
            })
    }

    /// Parse one cell as f64 with row/column context in the error.
    pub fn parse_f64(&self, row: usize, col: usize) -> Result<f64, CliError> {
        let raw = &self.rows[row][col];
        raw.parse::<f64>().map_err(|_| {
            CliError::Data(format!(
                "row {}, column '{}': cannot parse '{raw}' as a number",
                row + 1,
                self.headers[col]
            ))
        })
    }
}

/// Format with 6 significant digits; the shortest decimal representation of
/// the rounded value is written, so re-reading reproduces it exactly.
pub fn fmt6(x: f64) -> String {
    if x.is_nan() {
        return String::new();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let rounded: f64 = format!("{x:.5e}").parse().expect("rounded float reparses");
    format!("{rounded}")
}

/// Write one CSV file from pre-formatted string cells.
pub fn write_csv(path: &Path, headers: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
    writer.write_record(headers)?;
    for row in rows {
        writer.write_record(row)?;
    }
    writer.flush()?;
    Ok(())
}
