//! Turning a raw CSV table into validated compositions, ALR responses, and a
//! covariate matrix.

use nalgebra::DMatrix;

use compreg::model::RegressionDataset;
use compreg::simplex::{validate_and_normalize, CompositionDataset};

use crate::error::CliError;
use crate::table::Table;

/// Extract the named component columns and validate them as compositions.
/// The last listed component becomes the ALR reference.
pub fn compositions_from_table(
    table: &Table,
    components: &[String],
) -> Result<CompositionDataset, CliError> {
    if components.len() < 2 {
        return Err(CliError::Usage(
            "at least 2 component columns are required".into(),
        ));
    }
    let cols: Vec<usize> = components
        .iter()
        .map(|name| table.column_index(name))
        .collect::<Result<_, _>>()?;
    let mut raw = Vec::with_capacity(table.rows.len());
    for row in 0..table.rows.len() {
        let mut parts = Vec::with_capacity(cols.len());
        for &col in &cols {
            parts.push(table.parse_f64(row, col)?);
        }
        raw.push(parts);
    }
    validate_and_normalize(&raw, None).map_err(|e| {
        CliError::Data(format!("component columns failed validation: {e}"))
    })
}

/// Extract the named covariate columns as an n×p matrix.
pub fn covariates_from_table(table: &Table, covariates: &[String]) -> Result<DMatrix<f64>, CliError> {
    let cols: Vec<usize> = covariates
        .iter()
        .map(|name| table.column_index(name))
        .collect::<Result<_, _>>()?;
    let n = table.rows.len();
    let mut z = DMatrix::zeros(n, cols.len());
    for (c, &col) in cols.iter().enumerate() {
        for row in 0..n {
            z[(row, c)] = table.parse_f64(row, col)?;
        }
    }
    Ok(z)
}

/// Full ingestion for model fitting: compositions → ALR responses plus the
/// covariate matrix.
pub fn regression_dataset_from_table(
    table: &Table,
    components: &[String],
    covariates: &[String],
) -> Result<RegressionDataset, CliError> {
    if covariates.is_empty() {
        return Err(CliError::Usage(
            "at least one covariate column is required for fitting".into(),
        ));
    }
    let compositions = compositions_from_table(table, components)?;
    let z = covariates_from_table(table, covariates)?;
    RegressionDataset::from_compositions(&compositions, z).map_err(CliError::from)
}
