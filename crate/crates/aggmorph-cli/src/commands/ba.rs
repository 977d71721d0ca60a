//! `ba`: refine a structure-from-motion scene with weighted bundle
//! adjustment.

use crate::commands::emit;
use crate::error::CliError;
use crate::io::scene::{load_scene, report_to_dto, scene_to_dto, to_json_string, SceneFileDto};
use aggmorph::sfm::lm::{bundle_adjust, BundleOptions};
use std::path::Path;

pub fn run(scene_path: &Path, max_iters: usize, output: Option<&Path>) -> Result<(), CliError> {
    let (scene, ground_truth) = load_scene(scene_path)?;
    let options = BundleOptions {
        max_iterations: max_iters,
        ..BundleOptions::default()
    };
    let (refined, report) = bundle_adjust(&scene, &options)
        .map_err(|e| CliError::invalid(scene_path.display().to_string(), e))?;
    eprintln!(
        "bundle adjustment: objective {} -> {} in {} iterations ({:?})",
        report.initial_objective, report.final_objective, report.iterations, report.termination
    );
    let file = SceneFileDto {
        scene: scene_to_dto(&refined),
        ground_truth,
        report: Some(report_to_dto(&report)),
    };
    emit(output, &to_json_string(&file))
}
