//! `silhouettes`: render turntable silhouettes of a mesh and measure each
//! projected outline.

use crate::commands::{emit, mesh_view_metrics, metrics_csv};
use crate::error::CliError;
use crate::io::mesh::parse_mesh;
use std::path::Path;

pub fn run(
    mesh: &Path,
    views: usize,
    elevation: f64,
    resolution: usize,
    output: Option<&Path>,
) -> Result<(), CliError> {
    let context = mesh.display().to_string();
    let mesh = parse_mesh(mesh)?;
    let rows = mesh_view_metrics(&mesh, views, elevation, resolution, &context)?;
    emit(output, &metrics_csv("view", &rows))
}
