//! Synthetic turntable scenes with known ground truth.
//!
//! Cameras sit on a ring around the object at a fixed elevation, all
//! looking at the origin. Observations are exact projections plus optional
//! Gaussian pixel noise; optional background clutter adds zero-weight
//! observations with garbage pixels to unused camera/point pairs. All
//! randomness flows from one explicit seed.

use super::{project, CameraParams, Observation, SfmError, SfmScene};
use nalgebra::{Matrix3, Point2, Point3, Vector3};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

#[derive(Debug, Clone, PartialEq)]
pub struct TurntableConfig {
    pub n_views: usize,
    pub elevation_deg: f64,
    /// Allowed elevation band, degrees.
    pub elevation_limits: (f64, f64),
    /// Distance from each camera to the origin, world units.
    pub camera_distance: f64,
    pub focal_px: f64,
    pub principal_point: Point2<f64>,
    /// Standard deviation of the Gaussian noise added to true pixels.
    pub pixel_noise_std: f64,
    /// Probability that a camera/point pair yields a real observation.
    pub visibility: f64,
    /// Zero-weight garbage observations to add, as a fraction of the real
    /// observation count.
    pub clutter_fraction: f64,
    pub seed: u64,
}

impl Default for TurntableConfig {
    fn default() -> Self {
        TurntableConfig {
            n_views: 12,
            elevation_deg: 35.0,
            elevation_limits: (30.0, 45.0),
            camera_distance: 60.0,
            focal_px: 1500.0,
            principal_point: Point2::new(512.0, 512.0),
            pixel_noise_std: 0.0,
            visibility: 1.0,
            clutter_fraction: 0.0,
            seed: 0,
        }
    }
}

/// World-to-camera pose of a camera at `position` looking at the origin,
/// with the image x axis kept level.
fn look_at_origin(position: Point3<f64>) -> (Matrix3<f64>, Vector3<f64>) {
    let forward = (-position.coords).normalize();
    let up_hint = if forward.z.abs() > 1.0 - 1e-9 {
        Vector3::y()
    } else {
        Vector3::z()
    };
    let right = forward.cross(&up_hint).normalize();
    let down = forward.cross(&right).normalize();
    let rotation = Matrix3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
    let translation = -rotation * position.coords;
    (rotation, translation)
}

/// Generates a turntable scene around the given object points. The returned
/// scene's cameras and points are the exact ground truth; only the pixel
/// observations carry noise.
pub fn generate_turntable_scene(
    object_points: &[Point3<f64>],
    config: &TurntableConfig,
) -> Result<SfmScene, SfmError> {
    if config.n_views < 2 {
        return Err(SfmError::InvalidConfig(format!(
            "need at least 2 views, got {}",
            config.n_views
        )));
    }
    if object_points.is_empty() {
        return Err(SfmError::InvalidConfig("no object points".to_string()));
    }
    let (lo, hi) = config.elevation_limits;
    if !(lo..=hi).contains(&config.elevation_deg) {
        return Err(SfmError::InvalidConfig(format!(
            "elevation {} deg outside the allowed [{lo}, {hi}] deg",
            config.elevation_deg
        )));
    }
    if config.camera_distance.is_nan()
        || config.camera_distance <= 0.0
        || config.focal_px.is_nan()
        || config.focal_px <= 0.0
    {
        return Err(SfmError::InvalidConfig(
            "camera distance and focal length must be positive".to_string(),
        ));
    }
    if !(0.0..=1.0).contains(&config.visibility) || config.visibility == 0.0 {
        return Err(SfmError::InvalidConfig(format!(
            "visibility {} must lie in (0, 1]",
            config.visibility
        )));
    }
    if config.clutter_fraction < 0.0 || config.pixel_noise_std < 0.0 {
        return Err(SfmError::InvalidConfig(
            "clutter fraction and noise must be non-negative".to_string(),
        ));
    }

    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let elevation = config.elevation_deg.to_radians();
    let cameras: Vec<CameraParams> = (0..config.n_views)
        .map(|k| {
            let azimuth = 2.0 * std::f64::consts::PI * k as f64 / config.n_views as f64;
            let position = Point3::new(
                config.camera_distance * azimuth.cos() * elevation.cos(),
                config.camera_distance * azimuth.sin() * elevation.cos(),
                config.camera_distance * elevation.sin(),
            );
            let (rotation, translation) = look_at_origin(position);
            CameraParams {
                focal_px: config.focal_px,
                principal_point: config.principal_point,
                rotation: nalgebra::Rotation3::from_matrix_unchecked(rotation).scaled_axis(),
                translation,
            }
        })
        .collect();

    // Visibility draws happen for every pair in a fixed order, then sparse
    // points are topped back up to two views so the scene stays usable.
    let mut included = vec![false; config.n_views * object_points.len()];
    for (j, _) in object_points.iter().enumerate() {
        for i in 0..config.n_views {
            included[i * object_points.len() + j] =
                config.visibility >= 1.0 || rng.gen::<f64>() < config.visibility;
        }
    }
    for (j, _) in object_points.iter().enumerate() {
        let seen: Vec<usize> = (0..config.n_views)
            .filter(|i| included[i * object_points.len() + j])
            .collect();
        if seen.len() < 2 {
            let mut order: Vec<usize> = (0..config.n_views).collect();
            order.shuffle(&mut rng);
            for &i in order.iter().take(2) {
                included[i * object_points.len() + j] = true;
            }
        }
    }

    let noise = if config.pixel_noise_std > 0.0 {
        Some(Normal::new(0.0, config.pixel_noise_std).expect("std is finite and non-negative"))
    } else {
        None
    };
    let mut observations = Vec::new();
    for (i, cam) in cameras.iter().enumerate() {
        let p = cam.projection_matrix();
        for (j, x) in object_points.iter().enumerate() {
            if !included[i * object_points.len() + j] {
                continue;
            }
            let mut pixel = project(&p, x).map_err(|failure| SfmError::Projection {
                camera: i,
                point: j,
                failure,
            })?;
            if let Some(n) = &noise {
                pixel.x += n.sample(&mut rng);
                pixel.y += n.sample(&mut rng);
            }
            observations.push(Observation {
                camera: i,
                point: j,
                pixel,
                weight: 1.0,
            });
        }
    }

    if config.clutter_fraction > 0.0 {
        let wanted = (config.clutter_fraction * observations.len() as f64).round() as usize;
        let mut unused: Vec<(usize, usize)> = (0..config.n_views)
            .flat_map(|i| (0..object_points.len()).map(move |j| (i, j)))
            .filter(|&(i, j)| !included[i * object_points.len() + j])
            .collect();
        unused.shuffle(&mut rng);
        for &(camera, point) in unused.iter().take(wanted) {
            let pixel = Point2::new(
                rng.gen_range(0.0..2.0 * config.principal_point.x.max(1.0)),
                rng.gen_range(0.0..2.0 * config.principal_point.y.max(1.0)),
            );
            observations.push(Observation {
                camera,
                point,
                pixel,
                weight: 0.0,
            });
        }
    }

    let scene = SfmScene {
        cameras,
        points: object_points.to_vec(),
        observations,
    };
    scene.validate()?;
    Ok(scene)
}

/// Copies the scene with every camera but the first rotated and shifted by
/// random amounts of the given magnitudes, and every point displaced by
/// `point_rel` of the cloud diameter. Used to build hard but solvable
/// initializations for the refiner.
pub fn perturb_scene(
    scene: &SfmScene,
    rotation_deg: f64,
    translation_rel: f64,
    point_rel: f64,
    seed: u64,
) -> SfmScene {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut out = scene.clone();
    let angle = rotation_deg.to_radians();
    for cam in out.cameras.iter_mut().skip(1) {
        let axis = random_unit(&mut rng);
        let rotated = nalgebra::Rotation3::from_scaled_axis(cam.rotation)
            * nalgebra::Rotation3::from_scaled_axis(axis * angle);
        cam.rotation = rotated.scaled_axis();
        cam.translation += random_unit(&mut rng) * (translation_rel * cam.translation.norm());
    }
    let diameter = crate::mesh::bbox_diagonal(&out.points);
    for point in &mut out.points {
        point.coords += random_unit(&mut rng) * (point_rel * diameter);
    }
    out
}

fn random_unit(rng: &mut ChaCha12Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}
