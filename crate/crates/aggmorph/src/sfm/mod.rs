//! Multi-view scenes, reprojection objectives, and bundle adjustment.
//!
//! A scene bundles pinhole cameras, 3D points, and pixel observations with
//! per-observation weights in `[0, 1]`. The unweighted total reprojection
//! error and the mask-weighted variant are the two objectives; the
//! Levenberg-Marquardt refiner in [`lm`] minimizes the weighted one.

pub mod lm;
pub mod synth;

pub use lm::{bundle_adjust, BundleOptions, BundleReport, Termination};
pub use synth::{generate_turntable_scene, perturb_scene, TurntableConfig};

use nalgebra::{Matrix3, Matrix3x4, Point2, Point3, Rotation3, Vector3};
use thiserror::Error;

/// Homogeneous scale below which a projection counts as at infinity.
pub const PROJECTION_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SfmError {
    #[error("camera {index} is invalid: {reason}")]
    InvalidCamera { index: usize, reason: String },
    #[error("observation {observation} references camera {camera} of {camera_count} and point {point} of {point_count}")]
    InvalidIndex {
        observation: usize,
        camera: usize,
        camera_count: usize,
        point: usize,
        point_count: usize,
    },
    #[error("duplicate observation of point {point} in camera {camera}")]
    DuplicateObservation { camera: usize, point: usize },
    #[error("observation {observation} has weight {weight} outside [0, 1]")]
    WeightOutOfRange { observation: usize, weight: f64 },
    #[error("camera {camera}, point {point}: {failure}")]
    Projection {
        camera: usize,
        point: usize,
        failure: ProjectionFailure,
    },
    #[error("point {point} has {weighted_views} positively weighted view(s), needs at least 2")]
    UnderConstrained { point: usize, weighted_views: usize },
    #[error("normal equations are singular")]
    SingularSystem,
    #[error("damping reached {damping:.3e} without an acceptable step")]
    DivergenceDetected { damping: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Why a single point projection failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionFailure {
    /// Homogeneous scale within [`PROJECTION_EPS`] of zero.
    AtInfinity,
    /// Point at negative depth.
    BehindCamera,
}

impl std::fmt::Display for ProjectionFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProjectionFailure::AtInfinity => write!(f, "point projects to infinity"),
            ProjectionFailure::BehindCamera => write!(f, "point lies behind the camera"),
        }
    }
}

/// One pinhole camera: square pixels, no skew, no distortion. The rotation
/// is stored as an axis-angle vector with angle below pi.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraParams {
    pub focal_px: f64,
    pub principal_point: Point2<f64>,
    /// Axis-angle rotation, world to camera.
    pub rotation: Vector3<f64>,
    pub translation: Vector3<f64>,
}

impl CameraParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.focal_px.is_nan() || self.focal_px <= 0.0 {
            return Err(format!("focal length {} must be positive", self.focal_px));
        }
        let angle = self.rotation.norm();
        if angle >= std::f64::consts::PI {
            return Err(format!(
                "rotation angle {angle} must stay below pi for a unique axis-angle form"
            ));
        }
        if !self.translation.iter().all(|t| t.is_finite())
            || !self.principal_point.iter().all(|c| c.is_finite())
        {
            return Err("non-finite camera parameters".to_string());
        }
        Ok(())
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        Rotation3::from_scaled_axis(self.rotation).into_inner()
    }

    pub fn intrinsic_matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            self.focal_px,
            0.0,
            self.principal_point.x,
            0.0,
            self.focal_px,
            self.principal_point.y,
            0.0,
            0.0,
            1.0,
        )
    }

    /// Full projection `K [R | t]`.
    pub fn projection_matrix(&self) -> Matrix3x4<f64> {
        let r = self.rotation_matrix();
        let mut rt = Matrix3x4::zeros();
        rt.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
        rt.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        self.intrinsic_matrix() * rt
    }
}

/// One detected pixel: point `point` seen by camera `camera` at `pixel`,
/// weighted by the foreground mask value at that pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub camera: usize,
    pub point: usize,
    pub pixel: Point2<f64>,
    pub weight: f64,
}

/// Cameras, structure, and observations of one reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct SfmScene {
    pub cameras: Vec<CameraParams>,
    pub points: Vec<Point3<f64>>,
    pub observations: Vec<Observation>,
}

impl SfmScene {
    /// Checks camera parameters, index bounds, weight ranges, and that no
    /// (camera, point) pair is observed twice.
    pub fn validate(&self) -> Result<(), SfmError> {
        for (i, cam) in self.cameras.iter().enumerate() {
            cam.validate()
                .map_err(|reason| SfmError::InvalidCamera { index: i, reason })?;
        }
        let mut seen = std::collections::HashSet::new();
        for (oi, obs) in self.observations.iter().enumerate() {
            if obs.camera >= self.cameras.len() || obs.point >= self.points.len() {
                return Err(SfmError::InvalidIndex {
                    observation: oi,
                    camera: obs.camera,
                    camera_count: self.cameras.len(),
                    point: obs.point,
                    point_count: self.points.len(),
                });
            }
            if !(0.0..=1.0).contains(&obs.weight) {
                return Err(SfmError::WeightOutOfRange {
                    observation: oi,
                    weight: obs.weight,
                });
            }
            if !seen.insert((obs.camera, obs.point)) {
                return Err(SfmError::DuplicateObservation {
                    camera: obs.camera,
                    point: obs.point,
                });
            }
        }
        Ok(())
    }

    /// Copy of the scene with every observation weight replaced, for
    /// comparing masked against unmasked optimization on equal footing.
    pub fn with_uniform_weights(&self, weight: f64) -> SfmScene {
        let mut scene = self.clone();
        for obs in &mut scene.observations {
            obs.weight = weight;
        }
        scene
    }
}

/// Projects a world point through a projection matrix, pixel coordinates
/// out. Fails on points at or behind the principal plane.
pub fn project(p: &Matrix3x4<f64>, x: &Point3<f64>) -> Result<Point2<f64>, ProjectionFailure> {
    let h = p * x.to_homogeneous();
    if h.z.abs() <= PROJECTION_EPS {
        return Err(ProjectionFailure::AtInfinity);
    }
    if h.z < 0.0 {
        return Err(ProjectionFailure::BehindCamera);
    }
    Ok(Point2::new(h.x / h.z, h.y / h.z))
}

/// Total reprojection error: the unweighted sum of squared pixel errors
/// over all observations.
pub fn total_error(scene: &SfmScene) -> Result<f64, SfmError> {
    sum_squared_error(scene, false)
}

/// Mask-weighted reprojection error: each squared pixel error scaled by its
/// observation weight. Zero-weight observations are skipped entirely, so
/// they can never fail to project.
pub fn masked_error(scene: &SfmScene) -> Result<f64, SfmError> {
    sum_squared_error(scene, true)
}

fn sum_squared_error(scene: &SfmScene, weighted: bool) -> Result<f64, SfmError> {
    scene.validate()?;
    let projections: Vec<Matrix3x4<f64>> = scene
        .cameras
        .iter()
        .map(|c| c.projection_matrix())
        .collect();
    let mut total = 0.0;
    for obs in &scene.observations {
        if weighted && obs.weight == 0.0 {
            continue;
        }
        let predicted =
            project(&projections[obs.camera], &scene.points[obs.point]).map_err(|failure| {
                SfmError::Projection {
                    camera: obs.camera,
                    point: obs.point,
                    failure,
                }
            })?;
        let err = (obs.pixel - predicted).norm_squared();
        total += if weighted { obs.weight * err } else { err };
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn simple_camera() -> CameraParams {
        CameraParams {
            focal_px: 1.0,
            principal_point: Point2::origin(),
            rotation: Vector3::zeros(),
            translation: Vector3::zeros(),
        }
    }

    #[test]
    fn identity_camera_projects_centered_point_to_origin() {
        let p = simple_camera().projection_matrix();
        let px = project(&p, &Point3::new(0.0, 0.0, 5.0)).unwrap();
        assert_relative_eq!(px.x, 0.0, epsilon = 1e-15);
        assert_relative_eq!(px.y, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn points_on_principal_plane_are_at_infinity() {
        let p = simple_camera().projection_matrix();
        assert_eq!(
            project(&p, &Point3::new(1.0, 1.0, 0.0)),
            Err(ProjectionFailure::AtInfinity)
        );
        assert_eq!(
            project(&p, &Point3::new(0.0, 0.0, -4.0)),
            Err(ProjectionFailure::BehindCamera)
        );
    }

    #[test]
    fn projection_matrix_matches_direct_form() {
        let cam = CameraParams {
            focal_px: 1200.0,
            principal_point: Point2::new(512.0, 384.0),
            rotation: Vector3::new(0.1, -0.2, 0.3),
            translation: Vector3::new(0.4, -1.0, 8.0),
        };
        let p = cam.projection_matrix();
        let x = Point3::new(0.3, -0.2, 1.5);
        let u = cam.rotation_matrix() * x.coords + cam.translation;
        let expected = Point2::new(
            cam.focal_px * u.x / u.z + cam.principal_point.x,
            cam.focal_px * u.y / u.z + cam.principal_point.y,
        );
        let got = project(&p, &x).unwrap();
        assert_relative_eq!(got.x, expected.x, epsilon = 1e-9);
        assert_relative_eq!(got.y, expected.y, epsilon = 1e-9);
    }

    #[test]
    fn masked_error_skips_zero_weight_terms() {
        let cam = simple_camera();
        let scene = SfmScene {
            cameras: vec![cam],
            points: vec![Point3::new(0.0, 0.0, 2.0), Point3::new(0.0, 0.0, -1.0)],
            observations: vec![
                Observation {
                    camera: 0,
                    point: 0,
                    pixel: Point2::new(3.0, 4.0),
                    weight: 0.5,
                },
                Observation {
                    camera: 0,
                    point: 1,
                    pixel: Point2::new(100.0, 100.0),
                    weight: 0.0,
                },
            ],
        };
        // Point 1 is behind the camera, but its weight suppresses it.
        assert_relative_eq!(masked_error(&scene).unwrap(), 0.5 * 25.0, epsilon = 1e-12);
        assert!(matches!(
            total_error(&scene),
            Err(SfmError::Projection {
                failure: ProjectionFailure::BehindCamera,
                ..
            })
        ));
    }

    #[test]
    fn equal_weights_reduce_masked_to_total() {
        let cam = simple_camera();
        let scene = SfmScene {
            cameras: vec![cam],
            points: vec![Point3::new(0.1, 0.2, 2.0), Point3::new(-0.4, 0.0, 3.0)],
            observations: vec![
                Observation {
                    camera: 0,
                    point: 0,
                    pixel: Point2::new(0.3, 0.4),
                    weight: 1.0,
                },
                Observation {
                    camera: 0,
                    point: 1,
                    pixel: Point2::new(-0.1, 0.05),
                    weight: 1.0,
                },
            ],
        };
        assert_relative_eq!(
            masked_error(&scene).unwrap(),
            total_error(&scene).unwrap(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn scene_validation_catches_duplicates_and_weights() {
        let cam = simple_camera();
        let mut scene = SfmScene {
            cameras: vec![cam],
            points: vec![Point3::new(0.0, 0.0, 2.0)],
            observations: vec![
                Observation {
                    camera: 0,
                    point: 0,
                    pixel: Point2::origin(),
                    weight: 1.0,
                },
                Observation {
                    camera: 0,
                    point: 0,
                    pixel: Point2::origin(),
                    weight: 0.5,
                },
            ],
        };
        assert!(matches!(
            scene.validate(),
            Err(SfmError::DuplicateObservation {
                camera: 0,
                point: 0
            })
        ));
        scene.observations.pop();
        scene.observations[0].weight = 1.5;
        assert!(matches!(
            scene.validate(),
            Err(SfmError::WeightOutOfRange { observation: 0, .. })
        ));
        scene.observations[0].weight = 1.0;
        scene.observations[0].point = 9;
        assert!(matches!(
            scene.validate(),
            Err(SfmError::InvalidIndex { .. })
        ));
    }

    #[test]
    fn rotation_angle_at_or_above_pi_is_invalid() {
        let mut cam = simple_camera();
        cam.rotation = Vector3::new(std::f64::consts::PI, 0.0, 0.0);
        assert!(cam.validate().is_err());
    }
}
