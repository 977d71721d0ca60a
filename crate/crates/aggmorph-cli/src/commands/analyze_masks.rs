//! `analyze-masks`: measure every PGM silhouette mask in a directory.

use crate::commands::{emit, mask_metrics, metrics_csv, ViewMetrics};
use crate::error::CliError;
use crate::io::pgm::parse_mask;
use std::path::Path;

/// Lists the `.pgm` files in `dir` sorted by file name.
pub fn list_masks(dir: &Path) -> Result<Vec<std::path::PathBuf>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| CliError::io(dir, e))?;
        let path = entry.path();
        let is_pgm = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
        if path.is_file() && is_pgm {
            paths.push(path);
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::invalid(
            dir.display().to_string(),
            "no .pgm mask files found",
        ));
    }
    Ok(paths)
}

/// Measures every mask in `dir`, sorted by file name.
pub fn measure_masks(dir: &Path, pixel_pitch: Option<f64>) -> Result<Vec<ViewMetrics>, CliError> {
    let mut rows = Vec::new();
    for path in list_masks(dir)? {
        let label = path
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default()
            .to_string();
        let mask = parse_mask(&path, pixel_pitch)?;
        rows.push(mask_metrics(&mask, &label, &path.display().to_string())?);
    }
    Ok(rows)
}

pub fn run(dir: &Path, pixel_pitch: Option<f64>, output: Option<&Path>) -> Result<(), CliError> {
    let rows = measure_masks(dir, pixel_pitch)?;
    emit(output, &metrics_csv("file", &rows))
}
