//! Reading delimited data files and column-wise preprocessing.

use std::path::Path;

use cellfclust::nalgebra::DMatrix;
use cellfclust::{median, DataSet};

use crate::error::CliError;

/// Checks that the delimiter is a single ASCII character and returns it as
/// the byte the reader/writer builders expect.
pub fn ascii_delimiter(delimiter: char) -> Result<u8, CliError> {
    if delimiter.is_ascii() {
        Ok(delimiter as u8)
    } else {
        Err(CliError::Usage(format!(
            "delimiter must be a single ASCII character, got '{delimiter}'"
        )))
    }
}

/// Parses a delimited text file with a header row into a data set. Cells
/// equal to `na_token` (after trimming surrounding whitespace) become
/// missing; everything else must parse as a number.
pub fn ingest(path: &Path, na_token: &str, delimiter: u8) -> Result<DataSet, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;

    let names: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    if names.is_empty() || (names.len() == 1 && names[0].is_empty()) {
        return Err(CliError::Data(format!(
            "{}: empty input file (expected a header row and data rows)",
            path.display()
        )));
    }

    let n_vars = names.len();
    let mut values = Vec::new();
    let mut observed = Vec::new();
    let mut n_units = 0usize;
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        for (col, field) in record.iter().enumerate() {
            if field == na_token {
                values.push(f64::NAN);
                observed.push(false);
            } else {
                let parsed: f64 = field.parse().map_err(|_| {
                    CliError::Data(format!(
                        "{}: cannot parse '{}' as a number at data row {}, column {} ({})",
                        path.display(),
                        field,
                        row + 1,
                        col + 1,
                        names[col],
                    ))
                })?;
                values.push(parsed);
                observed.push(true);
            }
        }
        n_units += 1;
    }
    if n_units == 0 {
        return Err(CliError::Data(format!("{}: no data rows", path.display())));
    }

    let values = DMatrix::from_row_slice(n_units, n_vars, &values);
    let observed = DMatrix::from_row_slice(n_units, n_vars, &observed);
    DataSet::new(values, observed, Some(names)).map_err(CliError::from)
}

/// A column's robust spread: the median of absolute deviations about the
/// median, floored at 1e-12. Used only as a divisor, so no consistency
/// factor is applied.
fn column_spread(column: &[f64], center: f64) -> f64 {
    let devs: Vec<f64> = column.iter().map(|v| (v - center).abs()).collect();
    median(&devs).max(1e-12)
}

/// Optionally centers each column at its median and divides by its robust
/// spread (observed cells only), then multiplies every observed value by
/// `scale`. The missing mask is unchanged. A column with no observed cells
/// is left alone.
pub fn preprocess(
    data: &DataSet,
    robust_standardize: bool,
    scale: f64,
) -> Result<DataSet, CliError> {
    if !scale.is_finite() || scale <= 0.0 {
        return Err(CliError::Usage(format!(
            "--scale must be positive and finite, got {scale}"
        )));
    }

    let mut values = data.values().clone();
    if robust_standardize {
        for j in 0..data.n_vars() {
            let column = data.observed_column(j);
            if column.is_empty() {
                continue;
            }
            let center = median(&column);
            let spread = column_spread(&column, center);
            for i in 0..data.n_units() {
                if data.observed()[(i, j)] {
                    values[(i, j)] = (values[(i, j)] - center) / spread;
                }
            }
        }
    }
    if scale != 1.0 {
        for i in 0..data.n_units() {
            for j in 0..data.n_vars() {
                if data.observed()[(i, j)] {
                    values[(i, j)] *= scale;
                }
            }
        }
    }
    DataSet::new(
        values,
        data.observed().clone(),
        Some(data.variable_names().to_vec()),
    )
    .map_err(CliError::from)
}
