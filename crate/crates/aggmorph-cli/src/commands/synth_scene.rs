//! `synth-scene`: generate a seeded synthetic turntable scene with ground
//! truth for benchmarking bundle adjustment.

use crate::commands::emit;
use crate::error::CliError;
use crate::io::scene::{scene_to_dto, to_json_string, GroundTruthDto, SceneFileDto};
use aggmorph::sfm::synth::{generate_turntable_scene, TurntableConfig};
use nalgebra::Point3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::path::Path;

/// Seeded points distributed uniformly inside a ball of the given radius.
pub fn ball_points(n: usize, radius: f64, seed: u64) -> Vec<Point3<f64>> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut points = Vec::with_capacity(n);
    while points.len() < n {
        let p = Point3::new(
            rng.gen_range(-radius..radius),
            rng.gen_range(-radius..radius),
            rng.gen_range(-radius..radius),
        );
        if p.coords.norm() <= radius {
            points.push(p);
        }
    }
    points
}

#[allow(clippy::too_many_arguments)]
pub fn run(
    views: usize,
    elevation: f64,
    noise: f64,
    seed: u64,
    points: usize,
    clutter: f64,
    visibility: f64,
    output: Option<&Path>,
) -> Result<(), CliError> {
    if clutter > 0.0 && visibility >= 1.0 {
        return Err(CliError::invalid(
            "synth-scene",
            "clutter observations occupy camera/point pairs left unobserved; \
             lower --visibility below 1 to leave room for them",
        ));
    }
    let object = ball_points(points, 5.0, seed);
    let config = TurntableConfig {
        n_views: views,
        elevation_deg: elevation,
        pixel_noise_std: noise,
        visibility,
        clutter_fraction: clutter,
        seed,
        ..TurntableConfig::default()
    };
    let scene = generate_turntable_scene(&object, &config)
        .map_err(|e| CliError::invalid("synth-scene", e))?;
    let dto = scene_to_dto(&scene);
    let ground_truth = GroundTruthDto {
        cameras: dto.cameras.clone(),
        points: dto.points.clone(),
    };
    let file = SceneFileDto {
        scene: dto,
        ground_truth: Some(ground_truth),
        report: None,
    };
    emit(output, &to_json_string(&file))
}
