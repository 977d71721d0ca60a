//! Scene JSON: cameras, points, and weighted observations, optionally
//! wrapped together with ground truth and a convergence report.

use crate::error::CliError;
use aggmorph::sfm::{BundleReport, CameraParams, Observation, Termination};
use aggmorph::SfmScene;
use nalgebra::{Point2, Point3, Vector3};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CameraDto {
    pub focal_px: f64,
    pub principal_point: [f64; 2],
    pub rotation_axis_angle: [f64; 3],
    pub translation: [f64; 3],
}

fn default_weight() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObservationDto {
    pub camera: usize,
    pub point: usize,
    pub pixel: [f64; 2],
    #[serde(default = "default_weight")]
    pub weight: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneDto {
    pub cameras: Vec<CameraDto>,
    pub points: Vec<[f64; 3]>,
    pub observations: Vec<ObservationDto>,
}

/// Exact geometry a synthetic scene was generated from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruthDto {
    pub cameras: Vec<CameraDto>,
    pub points: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceDto {
    pub initial_objective: f64,
    pub final_objective: f64,
    pub iterations: usize,
    pub termination: String,
    pub accepted_objectives: Vec<f64>,
}

/// A scene document: either a bare scene or a wrapper carrying ground
/// truth and/or a convergence report next to it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneFileDto {
    pub scene: SceneDto,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<GroundTruthDto>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<ConvergenceDto>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SceneInput {
    Wrapped(SceneFileDto),
    Bare(SceneDto),
}

impl From<&CameraParams> for CameraDto {
    fn from(c: &CameraParams) -> Self {
        CameraDto {
            focal_px: c.focal_px,
            principal_point: [c.principal_point.x, c.principal_point.y],
            rotation_axis_angle: c.rotation.into(),
            translation: c.translation.into(),
        }
    }
}

impl From<&CameraDto> for CameraParams {
    fn from(d: &CameraDto) -> Self {
        CameraParams {
            focal_px: d.focal_px,
            principal_point: Point2::new(d.principal_point[0], d.principal_point[1]),
            rotation: Vector3::from(d.rotation_axis_angle),
            translation: Vector3::from(d.translation),
        }
    }
}

pub fn scene_to_dto(scene: &SfmScene) -> SceneDto {
    SceneDto {
        cameras: scene.cameras.iter().map(CameraDto::from).collect(),
        points: scene.points.iter().map(|p| [p.x, p.y, p.z]).collect(),
        observations: scene
            .observations
            .iter()
            .map(|o| ObservationDto {
                camera: o.camera,
                point: o.point,
                pixel: [o.pixel.x, o.pixel.y],
                weight: o.weight,
            })
            .collect(),
    }
}

pub fn dto_to_scene(dto: &SceneDto) -> SfmScene {
    SfmScene {
        cameras: dto.cameras.iter().map(CameraParams::from).collect(),
        points: dto
            .points
            .iter()
            .map(|p| Point3::new(p[0], p[1], p[2]))
            .collect(),
        observations: dto
            .observations
            .iter()
            .map(|o| Observation {
                camera: o.camera,
                point: o.point,
                pixel: Point2::new(o.pixel[0], o.pixel[1]),
                weight: o.weight,
            })
            .collect(),
    }
}

pub fn report_to_dto(report: &BundleReport) -> ConvergenceDto {
    ConvergenceDto {
        initial_objective: report.initial_objective,
        final_objective: report.final_objective,
        iterations: report.iterations,
        termination: match report.termination {
            Termination::ObjectiveConverged => "objective_converged",
            Termination::GradientConverged => "gradient_converged",
            Termination::MaxIterations => "max_iterations",
        }
        .to_string(),
        accepted_objectives: report.accepted_objectives.clone(),
    }
}

/// Loads a scene document, accepting both bare and wrapped layouts, and
/// validates the scene.
pub fn load_scene(path: &Path) -> Result<(SfmScene, Option<GroundTruthDto>), CliError> {
    let text = crate::io::read_to_string(path)?;
    let input: SceneInput = serde_json::from_str(&text).map_err(|source| CliError::BadJson {
        path: path.display().to_string(),
        source,
    })?;
    let (dto, truth) = match input {
        SceneInput::Wrapped(w) => (w.scene, w.ground_truth),
        SceneInput::Bare(s) => (s, None),
    };
    let scene = dto_to_scene(&dto);
    scene
        .validate()
        .map_err(|e| CliError::invalid(path.display().to_string(), e))?;
    Ok((scene, truth))
}

/// Pretty JSON with a trailing newline, stable field order.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serialization cannot fail");
    text.push('\n');
    text
}
