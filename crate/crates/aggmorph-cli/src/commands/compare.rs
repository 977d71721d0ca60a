//! `compare`: build the 2D-versus-3D comparison tables from saved
//! morphology records.

use crate::error::CliError;
use crate::io::atomic_write;
use crate::io::records::{
    envelope_table_csv, fer_table_csv, load_records_dir, roundness_table_csv,
};
use aggmorph::report::comparison_tables;
use std::path::Path;

pub fn run(records: &Path, out_dir: &Path) -> Result<(), CliError> {
    let loaded = load_records_dir(records)?;
    let tables = comparison_tables(&loaded)
        .map_err(|e| CliError::invalid(records.display().to_string(), e))?;
    let fer_path = out_dir.join("fer_comparison.csv");
    let roundness_path = out_dir.join("roundness_comparison.csv");
    let envelope_path = out_dir.join("envelope_comparison.csv");
    atomic_write(&fer_path, fer_table_csv(&tables).as_bytes())?;
    atomic_write(&roundness_path, roundness_table_csv(&tables).as_bytes())?;
    atomic_write(&envelope_path, envelope_table_csv(&tables).as_bytes())?;
    eprintln!(
        "wrote {}, {}, {}",
        fer_path.display(),
        roundness_path.display(),
        envelope_path.display()
    );
    Ok(())
}
