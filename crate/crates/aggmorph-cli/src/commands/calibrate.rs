//! `calibrate`: solve the metric scale from background markers with known
//! separations, optionally rescaling a point cloud.

use crate::error::CliError;
use crate::io::markers::{background_markers, known_distances, load_distances, load_markers};
use crate::io::mesh::{parse_point_cloud, write_point_cloud_ply};
use crate::io::scene::to_json_string;
use aggmorph::registration::{calibrate_scale, ScaleCalibration};
use serde::Serialize;
use std::path::Path;

#[derive(Serialize)]
struct ResidualDto {
    a_label: String,
    b_label: String,
    known_cm: f64,
    local: f64,
    residual_cm: f64,
}

#[derive(Serialize)]
struct CalibrationReport {
    scale_cm_per_unit: f64,
    residuals: Vec<ResidualDto>,
}

fn report(calibration: &ScaleCalibration) -> CalibrationReport {
    CalibrationReport {
        scale_cm_per_unit: calibration.scale,
        residuals: calibration
            .residuals
            .iter()
            .map(|r| ResidualDto {
                a_label: r.a.to_string(),
                b_label: r.b.to_string(),
                known_cm: r.known,
                local: r.local,
                residual_cm: r.residual,
            })
            .collect(),
    }
}

pub fn run(
    markers: &Path,
    distances: &Path,
    apply: Option<&Path>,
    output: Option<&Path>,
) -> Result<(), CliError> {
    let file = load_markers(markers)?;
    let backgrounds = background_markers(&file.background_markers);
    let known = known_distances(&load_distances(distances)?);
    let calibration =
        calibrate_scale(&backgrounds, &known).map_err(|e| CliError::invalid("calibrate", e))?;
    if let Some(cloud_path) = apply {
        let out = output.ok_or_else(|| {
            CliError::invalid(
                "calibrate",
                "--apply requires --output for the scaled cloud",
            )
        })?;
        let cloud = parse_point_cloud(cloud_path)?;
        let scaled: Vec<_> = cloud.iter().map(|p| p * calibration.scale).collect();
        write_point_cloud_ply(out, &scaled)?;
        print!("{}", to_json_string(&report(&calibration)));
    } else {
        crate::commands::emit(output, &to_json_string(&report(&calibration)))?;
    }
    Ok(())
}
