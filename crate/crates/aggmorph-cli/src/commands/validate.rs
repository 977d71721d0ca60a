//! `validate`: compare reconstructed volumes against measured references.

use crate::commands::emit;
use crate::error::CliError;
use crate::io::csvio::read_pairs_csv;
use crate::io::scene::to_json_string;
use aggmorph::report::{mean_absolute_percentage_error, mean_percentage_error};
use serde::Serialize;
use std::path::Path;

#[derive(Serialize)]
pub struct RowDto {
    sample_id: String,
    measured_cm3: f64,
    reconstructed_cm3: f64,
    error_percent: f64,
}

#[derive(Serialize)]
pub struct ValidationReport {
    count: usize,
    mpe_percent: f64,
    mape_percent: f64,
    rows: Vec<RowDto>,
}

/// Builds the volume validation report from (id, measured, reconstructed)
/// triples.
pub fn volume_report(pairs: &[(String, f64, f64)]) -> Result<ValidationReport, CliError> {
    let measured: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let reconstructed: Vec<f64> = pairs.iter().map(|p| p.2).collect();
    let mpe = mean_percentage_error(&measured, &reconstructed)
        .map_err(|e| CliError::invalid("validate", e))?;
    let mape = mean_absolute_percentage_error(&measured, &reconstructed)
        .map_err(|e| CliError::invalid("validate", e))?;
    let rows = pairs
        .iter()
        .map(|(id, m, r)| RowDto {
            sample_id: id.clone(),
            measured_cm3: *m,
            reconstructed_cm3: *r,
            error_percent: 100.0 * (r - m) / m,
        })
        .collect();
    Ok(ValidationReport {
        count: pairs.len(),
        mpe_percent: mpe,
        mape_percent: mape,
        rows,
    })
}

pub fn run(pairs: &Path, output: Option<&Path>) -> Result<(), CliError> {
    let parsed = read_pairs_csv(pairs)?;
    let report = volume_report(&parsed)?;
    emit(output, &to_json_string(&report))
}
