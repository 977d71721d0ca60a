//! `analyze-mesh`: bulk 3D measurements of one mesh file.

use crate::commands::emit;
use crate::error::CliError;
use crate::io::mesh::parse_mesh;
use crate::io::scene::to_json_string;
use crate::manifest::Units;
use aggmorph::obb::min_volume_obb;
use aggmorph::report::Morphology3d;
use serde::Serialize;
use std::path::Path;

#[derive(Serialize)]
struct MeshReport {
    volume_cm3: f64,
    surface_area_cm2: f64,
    a_cm: f64,
    b_cm: f64,
    c_cm: f64,
    fer_3d: f64,
    sphericity: f64,
}

/// Measures a mesh and derives its shape descriptors in centimeters.
pub fn morphology_cm(path: &Path, units: Units) -> Result<Morphology3d, CliError> {
    let context = path.display().to_string();
    let mesh = parse_mesh(path)?;
    let obb = min_volume_obb(mesh.vertices()).map_err(|e| CliError::invalid(&context, e))?;
    let raw =
        Morphology3d::from_measurements(mesh.signed_volume(), mesh.surface_area(), obb.extents())
            .map_err(|e| CliError::invalid(&context, e))?;
    raw.scaled(units.factor_to_cm())
        .map_err(|e| CliError::invalid(&context, e))
}

pub fn run(mesh: &Path, units: Units, output: Option<&Path>) -> Result<(), CliError> {
    let m = morphology_cm(mesh, units)?;
    let report = MeshReport {
        volume_cm3: m.volume,
        surface_area_cm2: m.surface_area,
        a_cm: m.a,
        b_cm: m.b,
        c_cm: m.c,
        fer_3d: m.fer_3d,
        sphericity: m.sphericity,
    };
    emit(output, &to_json_string(&report))
}
