//! `run`: the full manifest-driven pipeline. Each sample is measured in 3D
//! (from a mesh or from stitched and calibrated partial clouds) and in 2D
//! (from provided masks or rendered silhouettes), then the per-sample
//! records feed the combined comparison tables and the volume validation
//! report.

use crate::commands::{analyze_masks, mask_metrics, mesh_view_metrics, metrics_csv, ViewMetrics};
use crate::error::CliError;
use crate::io::atomic_write;
use crate::io::markers::{background_markers, known_distances, load_markers, object_markers};
use crate::io::mesh::{parse_mesh, parse_point_cloud};
use crate::io::records::{envelope_table_csv, fer_table_csv, record_to_dto, roundness_table_csv};
use crate::io::scene::to_json_string;
use crate::manifest::{load_manifest, Manifest, Sample, SampleGeometry};
use aggmorph::hull::convex_hull;
use aggmorph::obb::min_volume_obb;
use aggmorph::registration::{self, calibrate_scale, ObjectMarker};
use aggmorph::report::{
    comparison_tables, summarize_sample, Morphology3d, MorphologyRecord, ViewShape2d,
};
use aggmorph::TriangleMesh;
use rayon::prelude::*;
use std::collections::BTreeSet;
use std::path::Path;

/// Everything the pipeline produces for one sample.
struct SampleOutput {
    id: String,
    record: MorphologyRecord,
    label_header: &'static str,
    rows: Vec<ViewMetrics>,
}

/// Derives 3D descriptors from a mesh whose coordinates are already in
/// centimeters.
fn morphology_of(mesh: &TriangleMesh, context: &str) -> Result<Morphology3d, CliError> {
    let obb = min_volume_obb(mesh.vertices()).map_err(|e| CliError::invalid(context, e))?;
    Morphology3d::from_measurements(mesh.signed_volume(), mesh.surface_area(), obb.extents())
        .map_err(|e| CliError::invalid(context, e))
}

/// Scales every vertex, keeping the faces.
fn scaled_mesh(mesh: &TriangleMesh, factor: f64, context: &str) -> Result<TriangleMesh, CliError> {
    let vertices = mesh.vertices().iter().map(|p| p * factor).collect();
    TriangleMesh::new(vertices, mesh.faces().to_vec()).map_err(|e| CliError::invalid(context, e))
}

/// Builds the sample's surface in centimeters: either the mesh itself or
/// the convex hull of its stitched, calibrated partial clouds.
fn sample_mesh_cm(sample: &Sample, manifest: &Manifest) -> Result<TriangleMesh, CliError> {
    match &sample.geometry {
        SampleGeometry::Mesh(path) => {
            let mesh = parse_mesh(path)?;
            scaled_mesh(
                &mesh,
                manifest.units.factor_to_cm(),
                &path.display().to_string(),
            )
        }
        SampleGeometry::Partials { clouds, markers } => {
            let context = markers.display().to_string();
            let file = load_markers(markers)?;
            if file.partials.len() != clouds.len() {
                return Err(CliError::invalid(
                    &context,
                    format!(
                        "{} partial clouds but {} partials entries in the marker file",
                        clouds.len(),
                        file.partials.len()
                    ),
                ));
            }
            let mut merged = parse_point_cloud(&clouds[0])?;
            let mut pins: Vec<ObjectMarker> = object_markers(&file.partials[0].object_markers);
            for (cloud_path, partial) in clouds.iter().zip(&file.partials).skip(1) {
                let next = parse_point_cloud(cloud_path)?;
                let next_pins = object_markers(&partial.object_markers);
                let stitched = registration::stitch(&merged, &next, &pins, &next_pins)
                    .map_err(|e| CliError::invalid(cloud_path.display().to_string(), e))?;
                merged = stitched.cloud;
                let known: BTreeSet<_> = pins.iter().map(|m| m.label.clone()).collect();
                for pin in &next_pins {
                    if !known.contains(&pin.label) {
                        pins.push(ObjectMarker {
                            label: pin.label.clone(),
                            head: stitched.transform.apply(&pin.head),
                            tail: stitched.transform.apply(&pin.tail),
                        });
                    }
                }
            }
            let factor = if !file.background_markers.is_empty() && !file.known_distances.is_empty()
            {
                let backgrounds = background_markers(&file.background_markers);
                let known = known_distances(&file.known_distances);
                calibrate_scale(&backgrounds, &known)
                    .map_err(|e| CliError::invalid(&context, e))?
                    .scale
            } else {
                manifest.units.factor_to_cm()
            };
            let cloud_cm: Vec<_> = merged.iter().map(|p| p * factor).collect();
            let hull = convex_hull(&cloud_cm).map_err(|e| CliError::invalid(&context, e))?;
            Ok(hull)
        }
    }
}

fn process_sample(sample: &Sample, manifest: &Manifest) -> Result<SampleOutput, CliError> {
    let mesh = sample_mesh_cm(sample, manifest)?;
    let morphology = morphology_of(&mesh, &sample.id)?;
    let (label_header, rows) = match &sample.masks_dir {
        Some(dir) => {
            let mut rows = Vec::new();
            for path in analyze_masks::list_masks(dir)? {
                let label = path
                    .file_name()
                    .and_then(|n| n.to_str())
                    .unwrap_or_default()
                    .to_string();
                let mask = crate::io::pgm::parse_mask(&path, sample.pixel_pitch_cm)?;
                rows.push(mask_metrics(&mask, &label, &path.display().to_string())?);
            }
            ("file", rows)
        }
        None => (
            "view",
            mesh_view_metrics(
                &mesh,
                manifest.views,
                manifest.elevation_deg,
                manifest.resolution,
                &sample.id,
            )?,
        ),
    };
    let views: Vec<ViewShape2d> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| ViewShape2d {
            view: i,
            fer_2d: r.fer_2d,
            circularity: r.circularity,
        })
        .collect();
    let record = summarize_sample(&sample.id, morphology, views)
        .map_err(|e| CliError::invalid(&sample.id, e))?;
    Ok(SampleOutput {
        id: sample.id.clone(),
        record,
        label_header,
        rows,
    })
}

/// Thread pool honoring `AGGMORPH_THREADS` (0 or unset = one per core).
fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let requested = match std::env::var("AGGMORPH_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::invalid("AGGMORPH_THREADS", format!("not a count: {v:?}")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(requested)
        .build()
        .map_err(|e| CliError::invalid("thread pool", e))
}

pub fn run(manifest_path: &Path) -> Result<(), CliError> {
    let manifest = load_manifest(manifest_path)?;
    if manifest.samples.is_empty() {
        return Err(CliError::invalid(
            manifest_path.display().to_string(),
            "manifest lists no samples",
        ));
    }

    let pool = thread_pool()?;
    let mut outputs: Vec<SampleOutput> = pool.install(|| {
        manifest
            .samples
            .par_iter()
            .map(|sample| {
                process_sample(sample, &manifest).map_err(|e| CliError::Sample {
                    sample: sample.id.clone(),
                    message: e.to_string(),
                })
            })
            .collect::<Result<Vec<_>, CliError>>()
    })?;
    outputs.sort_by(|x, y| x.id.cmp(&y.id));

    let out = &manifest.output_dir;
    for o in &outputs {
        let record_path = out.join("records").join(format!("{}.json", o.id));
        atomic_write(
            &record_path,
            to_json_string(&record_to_dto(&o.record)).as_bytes(),
        )?;
        let views_path = out.join("views").join(format!("{}.csv", o.id));
        atomic_write(&views_path, metrics_csv(o.label_header, &o.rows).as_bytes())?;
    }

    let records: Vec<MorphologyRecord> = outputs.iter().map(|o| o.record.clone()).collect();
    let tables = comparison_tables(&records)
        .map_err(|e| CliError::invalid(manifest_path.display().to_string(), e))?;
    atomic_write(
        &out.join("fer_comparison.csv"),
        fer_table_csv(&tables).as_bytes(),
    )?;
    atomic_write(
        &out.join("roundness_comparison.csv"),
        roundness_table_csv(&tables).as_bytes(),
    )?;
    atomic_write(
        &out.join("envelope_comparison.csv"),
        envelope_table_csv(&tables).as_bytes(),
    )?;

    let pairs: Vec<(String, f64, f64)> = outputs
        .iter()
        .filter_map(|o| {
            let sample = manifest.samples.iter().find(|s| s.id == o.id)?;
            let measured = sample.measured_cm3?;
            Some((o.id.clone(), measured, o.record.three_d.volume))
        })
        .collect();
    if !pairs.is_empty() {
        let report = super::validate::volume_report(&pairs)?;
        atomic_write(
            &out.join("volume_validation.json"),
            to_json_string(&report).as_bytes(),
        )?;
    }

    eprintln!("processed {} samples into {}", outputs.len(), out.display());
    Ok(())
}
