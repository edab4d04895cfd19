//! Strict CSV ingestion.
//!
//! A header row is required and the value column is selected by name. Any
//! row whose value does not parse as a plain finite decimal fails the whole
//! run: silently skipping rows would corrupt the equidistant time design
//! the smoother assumes. Dates are optional and validated as ISO-8601 when
//! a date column is named.

use std::path::Path;

use chrono::NaiveDate;

use crate::commands::CliError;

pub struct SeriesFile {
    pub values: Vec<f64>,
    pub dates: Option<Vec<String>>,
}

pub fn read_series(
    path: &Path,
    value_col: &str,
    date_col: Option<&str>,
) -> Result<SeriesFile, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;

    let headers = reader
        .headers()
        .map_err(|e| CliError::input(format!("cannot read header row: {e}")))?
        .clone();
    let value_idx = headers
        .iter()
        .position(|h| h == value_col)
        .ok_or_else(|| {
            CliError::input(format!(
                "column '{value_col}' not found; header has: {}",
                headers.iter().collect::<Vec<_>>().join(", ")
            ))
        })?;
    let date_idx = match date_col {
        Some(name) => Some(headers.iter().position(|h| h == name).ok_or_else(|| {
            CliError::input(format!("date column '{name}' not found in header"))
        })?),
        None => None,
    };

    let mut values = Vec::new();
    let mut dates = date_idx.map(|_| Vec::new());
    for (row_number, record) in reader.records().enumerate() {
        let record = record
            .map_err(|e| CliError::input(format!("row {}: {e}", row_number + 2)))?;
        let raw = record.get(value_idx).unwrap_or("");
        let value = parse_value(raw).map_err(|msg| {
            CliError::input(format!(
                "row {}: value '{raw}' in column '{value_col}' {msg}",
                row_number + 2
            ))
        })?;
        values.push(value);
        if let (Some(idx), Some(dates)) = (date_idx, dates.as_mut()) {
            let raw_date = record.get(idx).unwrap_or("");
            NaiveDate::parse_from_str(raw_date, "%Y-%m-%d").map_err(|_| {
                CliError::input(format!(
                    "row {}: date '{raw_date}' is not ISO-8601 (expected YYYY-MM-DD)",
                    row_number + 2
                ))
            })?;
            dates.push(raw_date.to_string());
        }
    }
    if values.is_empty() {
        return Err(CliError::input(format!(
            "{} contains a header but no data rows",
            path.display()
        )));
    }
    Ok(SeriesFile { values, dates })
}

fn parse_value(raw: &str) -> Result<f64, &'static str> {
    if raw.is_empty() {
        return Err("is empty");
    }
    if raw.contains(',') {
        return Err("must use a decimal point, not a comma");
    }
    let value: f64 = raw.parse().map_err(|_| "is not a number")?;
    if !value.is_finite() {
        return Err("is not finite");
    }
    Ok(value)
}
