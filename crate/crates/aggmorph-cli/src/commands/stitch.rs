//! `stitch`: merge two partial point clouds by their shared pin markers.

use crate::error::CliError;
use crate::io::markers::{load_markers, object_markers};
use crate::io::mesh::{parse_point_cloud, write_point_cloud_ply};
use crate::io::scene::to_json_string;
use aggmorph::registration::{self, SimilarityTransform, Stitched};
use serde::Serialize;
use std::path::Path;

#[derive(Serialize)]
pub struct TransformDto {
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
    pub scale: f64,
}

impl From<&SimilarityTransform> for TransformDto {
    fn from(t: &SimilarityTransform) -> Self {
        let r = t.rotation();
        TransformDto {
            rotation: [
                [r[(0, 0)], r[(0, 1)], r[(0, 2)]],
                [r[(1, 0)], r[(1, 1)], r[(1, 2)]],
                [r[(2, 0)], r[(2, 1)], r[(2, 2)]],
            ],
            translation: [t.translation()[0], t.translation()[1], t.translation()[2]],
            scale: t.scale(),
        }
    }
}

#[derive(Serialize)]
struct MarkerResidualDto {
    label: String,
    role: String,
    distance: f64,
}

#[derive(Serialize)]
struct StitchReport {
    merged_points: usize,
    transform: TransformDto,
    marker_rms: f64,
    per_marker: Vec<MarkerResidualDto>,
}

fn report(stitched: &Stitched) -> StitchReport {
    StitchReport {
        merged_points: stitched.cloud.len(),
        transform: TransformDto::from(&stitched.transform),
        marker_rms: stitched.marker_rms,
        per_marker: stitched
            .per_marker
            .iter()
            .map(|m| MarkerResidualDto {
                label: m.label.to_string(),
                role: m.role.to_string(),
                distance: m.distance,
            })
            .collect(),
    }
}

pub fn run(cloud_a: &Path, cloud_b: &Path, markers: &Path, output: &Path) -> Result<(), CliError> {
    let a = parse_point_cloud(cloud_a)?;
    let b = parse_point_cloud(cloud_b)?;
    let file = load_markers(markers)?;
    if file.partials.len() < 2 {
        return Err(CliError::invalid(
            markers.display().to_string(),
            "stitching needs a `partials` entry with pin markers for each cloud",
        ));
    }
    let markers_a = object_markers(&file.partials[0].object_markers);
    let markers_b = object_markers(&file.partials[1].object_markers);
    let stitched = registration::stitch(&a, &b, &markers_a, &markers_b)
        .map_err(|e| CliError::invalid("stitch", e))?;
    write_point_cloud_ply(output, &stitched.cloud)?;
    print!("{}", to_json_string(&report(&stitched)));
    Ok(())
}
