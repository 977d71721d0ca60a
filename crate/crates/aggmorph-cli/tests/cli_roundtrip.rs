//! Round-trip checks for every serializer/parser pair: a value written by
//! the tool and read back must be the identity, across many seeded
//! instances.

use aggmorph::hull::convex_hull;
use aggmorph::sfm::synth::{generate_turntable_scene, TurntableConfig};
use aggmorph::RasterMask;
use aggmorph_cli::io::atomic_write;
use aggmorph_cli::io::markers::{load_markers, MarkerFileDto, ObjectMarkerDto};
use aggmorph_cli::io::mesh::{parse_mesh, write_obj, write_ply_ascii, write_ply_binary};
use aggmorph_cli::io::pgm::{parse_mask, write_pgm_p2, write_pgm_p5};
use aggmorph_cli::io::scene::{load_scene, scene_to_dto, to_json_string, SceneFileDto};
use nalgebra::Point3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

fn random_hull(rng: &mut ChaCha8Rng) -> aggmorph::TriangleMesh {
    let n = rng.gen_range(8..40);
    let points: Vec<Point3<f64>> = (0..n)
        .map(|_| {
            Point3::new(
                rng.gen_range(-10.0..10.0),
                rng.gen_range(-10.0..10.0),
                rng.gen_range(-10.0..10.0),
            )
        })
        .collect();
    convex_hull(&points).expect("random points have a hull")
}

#[test]
fn mesh_files_round_trip_exactly() {
    let dir = TempDir::new().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(401);
    for round in 0..100 {
        let mesh = random_hull(&mut rng);
        let obj = dir.path().join(format!("m{round}.obj"));
        let ply_a = dir.path().join(format!("m{round}a.ply"));
        let ply_b = dir.path().join(format!("m{round}b.ply"));
        write_obj(&obj, &mesh).unwrap();
        write_ply_ascii(&ply_a, mesh.vertices(), mesh.faces()).unwrap();
        write_ply_binary(&ply_b, mesh.vertices(), mesh.faces()).unwrap();
        for path in [&obj, &ply_a, &ply_b] {
            let back = parse_mesh(path).unwrap();
            assert_eq!(back.faces(), mesh.faces(), "round {round}: {path:?} faces");
            assert_eq!(
                back.vertices().len(),
                mesh.vertices().len(),
                "round {round}: {path:?} vertex count"
            );
            for (p, q) in back.vertices().iter().zip(mesh.vertices()) {
                assert_eq!(p, q, "round {round}: {path:?} vertex drifted");
            }
        }
    }
}

#[test]
fn pgm_encodings_agree_and_round_trip() {
    let dir = TempDir::new().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(402);
    for round in 0..100 {
        let w = rng.gen_range(3..40);
        let h = rng.gen_range(3..40);
        let pixels: Vec<bool> = (0..w * h).map(|_| rng.gen_bool(0.4)).collect();
        let mask = RasterMask::from_pixels(w, h, pixels.clone(), None).unwrap();
        let p2 = dir.path().join(format!("m{round}.p2.pgm"));
        let p5 = dir.path().join(format!("m{round}.p5.pgm"));
        write_pgm_p2(&p2, &mask).unwrap();
        write_pgm_p5(&p5, &mask).unwrap();
        let from_p2 = parse_mask(&p2, None).unwrap();
        let from_p5 = parse_mask(&p5, None).unwrap();
        assert_eq!(from_p2.pixels(), pixels.as_slice(), "round {round}: P2");
        assert_eq!(from_p5.pixels(), pixels.as_slice(), "round {round}: P5");
        assert_eq!(from_p2.width(), w);
        assert_eq!(from_p5.height(), h);
    }
}

#[test]
fn sixteen_bit_pgm_thresholds_at_half_maxval() {
    let dir = TempDir::new().unwrap();
    // 2x2 P5 with maxval 60000: values 29999 (below half), 30000 (at half),
    // 60000, 0.
    let mut bytes = b"P5 2 2 60000\n".to_vec();
    for v in [29999u16, 30000, 60000, 0] {
        bytes.extend_from_slice(&v.to_be_bytes());
    }
    let path = dir.path().join("wide.pgm");
    atomic_write(&path, &bytes).unwrap();
    let mask = parse_mask(&path, None).unwrap();
    assert_eq!(mask.pixels(), &[false, true, true, false]);
}

#[test]
fn scene_json_round_trips_exactly() {
    let dir = TempDir::new().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(403);
    for round in 0..100 {
        let n = rng.gen_range(4..30);
        let points: Vec<Point3<f64>> = (0..n)
            .map(|_| {
                Point3::new(
                    rng.gen_range(-4.0..4.0),
                    rng.gen_range(-4.0..4.0),
                    rng.gen_range(-4.0..4.0),
                )
            })
            .collect();
        let config = TurntableConfig {
            n_views: rng.gen_range(2..8),
            pixel_noise_std: rng.gen_range(0.0..2.0),
            seed: round,
            ..TurntableConfig::default()
        };
        let scene = generate_turntable_scene(&points, &config).unwrap();
        let dto = scene_to_dto(&scene);
        let path = dir.path().join(format!("s{round}.json"));
        let file = SceneFileDto {
            scene: dto,
            ground_truth: None,
            report: None,
        };
        atomic_write(&path, to_json_string(&file).as_bytes()).unwrap();
        let (back, _) = load_scene(&path).unwrap();
        assert_eq!(back.points, scene.points, "round {round}: points");
        assert_eq!(
            back.observations.len(),
            scene.observations.len(),
            "round {round}: observation count"
        );
        for (a, b) in back.observations.iter().zip(&scene.observations) {
            assert_eq!(a.pixel, b.pixel, "round {round}: pixels");
            assert_eq!(a.weight, b.weight, "round {round}: weights");
            assert_eq!((a.camera, a.point), (b.camera, b.point));
        }
        for (a, b) in back.cameras.iter().zip(&scene.cameras) {
            assert_eq!(a.focal_px, b.focal_px);
            assert_eq!(a.principal_point, b.principal_point);
            assert_eq!(a.rotation, b.rotation);
            assert_eq!(a.translation, b.translation);
        }
    }
}

#[test]
fn bare_scene_json_is_accepted() {
    let dir = TempDir::new().unwrap();
    let points = vec![
        Point3::new(1.0, 0.0, 0.0),
        Point3::new(0.0, 1.0, 0.0),
        Point3::new(0.0, 0.0, 1.0),
        Point3::new(1.0, 1.0, 0.5),
    ];
    let scene = generate_turntable_scene(&points, &TurntableConfig::default()).unwrap();
    let path = dir.path().join("bare.json");
    atomic_write(&path, to_json_string(&scene_to_dto(&scene)).as_bytes()).unwrap();
    let (back, truth) = load_scene(&path).unwrap();
    assert!(truth.is_none());
    assert_eq!(back.points, scene.points);
}

#[test]
fn marker_files_round_trip() {
    let dir = TempDir::new().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for round in 0..100 {
        let n = rng.gen_range(1..6);
        let object_markers: Vec<ObjectMarkerDto> = (0..n)
            .map(|i| ObjectMarkerDto {
                label: format!("pin{i}"),
                head: [rng.gen(), rng.gen(), rng.gen()],
                tail: [rng.gen(), rng.gen(), rng.gen()],
            })
            .collect();
        let file = MarkerFileDto {
            object_markers: object_markers.clone(),
            ..MarkerFileDto::default()
        };
        let path = dir.path().join(format!("k{round}.json"));
        atomic_write(&path, to_json_string(&file).as_bytes()).unwrap();
        let back = load_markers(&path).unwrap();
        assert_eq!(back.object_markers.len(), object_markers.len());
        for (a, b) in back.object_markers.iter().zip(&object_markers) {
            assert_eq!(a.label, b.label, "round {round}");
            assert_eq!(a.head, b.head, "round {round}");
            assert_eq!(a.tail, b.tail, "round {round}");
        }
    }
}
