//! End-to-end properties across modules: synthetic render-and-measure
//! pipelines, optimality of the bundle adjustment result, registration
//! accuracy across seeds, and statistics invariants.

use aggmorph::hull::convex_hull;
use aggmorph::mesh::caliper_diameter;
use aggmorph::mesh::TriangleMesh;
use aggmorph::obb::min_volume_obb;
use aggmorph::polygon::{circularity_2d, fer_2d, max_feret, min_feret_perp, polygon_metrics};
use aggmorph::registration::{
    apply_similarity, calibrate_scale, estimate_similarity, stitch, BackgroundMarker,
    KnownDistance, ObjectMarker, SimilarityTransform,
};
use aggmorph::report::{
    comparison_tables, cov, mean_absolute_percentage_error, mean_percentage_error,
    summarize_sample, Morphology3d, ViewShape2d,
};
use aggmorph::sfm::{
    bundle_adjust, generate_turntable_scene, masked_error, perturb_scene, BundleOptions,
    TurntableConfig,
};
use aggmorph::shapes::{ellipsoid, icosphere};
use aggmorph::silhouette::{render_silhouette, trace_boundary, turntable_directions, ViewCamera};
use nalgebra::{Point3, Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 {
            return v / n;
        }
    }
}

fn random_cloud(rng: &mut ChaCha8Rng, n: usize) -> Vec<Point3<f64>> {
    (0..n)
        .map(|_| {
            Point3::new(
                rng.gen_range(-1.5..1.5),
                rng.gen_range(-1.5..1.5),
                rng.gen_range(-1.5..1.5),
            )
        })
        .collect()
}

/// Per-view 2D descriptors of a mesh over a turntable sweep.
fn measure_views(mesh: &TriangleMesh, n_views: usize, resolution: usize) -> Vec<ViewShape2d> {
    turntable_directions(n_views, 35.0)
        .iter()
        .enumerate()
        .map(|(view, dir)| {
            let camera = ViewCamera::fitted_orthographic(
                dir.into_inner(),
                resolution,
                resolution,
                mesh.vertices(),
                0.1,
            )
            .unwrap();
            let mask = render_silhouette(mesh, &camera).unwrap();
            let poly = trace_boundary(&mask).unwrap();
            let (l_max, angle) = max_feret(&poly);
            let l_min = min_feret_perp(&poly, angle);
            let (area, perimeter) = polygon_metrics(&poly);
            ViewShape2d {
                view,
                fer_2d: fer_2d(l_max, l_min).unwrap(),
                circularity: circularity_2d(area, perimeter).unwrap(),
            }
        })
        .collect()
}

fn morphology_of(mesh: &TriangleMesh) -> Morphology3d {
    let obb = min_volume_obb(mesh.vertices()).unwrap();
    Morphology3d::from_measurements(mesh.signed_volume(), mesh.surface_area(), obb.extents())
        .unwrap()
}

#[test]
fn sphere_views_look_round_from_every_angle() {
    let mesh = icosphere(1.0, 3);
    let views = measure_views(&mesh, 12, 256);
    let record = summarize_sample("sphere", morphology_of(&mesh), views).unwrap();
    assert!(
        (record.fer_2d_stats.mean - 1.0).abs() < 0.02,
        "mean aspect ratio {}",
        record.fer_2d_stats.mean
    );
    assert!(
        record.circularity_stats.mean > 0.9,
        "mean circularity {}",
        record.circularity_stats.mean
    );
    assert!(record.fer_2d_stats.cov.unwrap() < 0.01);
    assert!(record.circularity_stats.cov.unwrap() < 0.01);
}

#[test]
fn elongated_ellipsoid_keeps_2d_ratio_below_3d() {
    let mesh = ellipsoid([3.0, 4.0, 6.0], 3);
    let three_d = morphology_of(&mesh);
    assert!(
        (three_d.fer_3d - 2.0).abs() < 0.05,
        "3D ratio {}",
        three_d.fer_3d
    );
    let views = measure_views(&mesh, 12, 256);
    let record = summarize_sample("ellipsoid_346", three_d, views).unwrap();
    assert!(
        record.fer_2d_stats.mean < record.three_d.fer_3d,
        "2D mean {} not below 3D {}",
        record.fer_2d_stats.mean,
        record.three_d.fer_3d
    );
}

#[test]
fn bundle_adjustment_lands_on_a_local_minimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(201);
    let points = random_cloud(&mut rng, 40);
    let scene = generate_turntable_scene(&points, &TurntableConfig::default()).unwrap();
    let start = perturb_scene(&scene, 1.0, 0.01, 0.01, 7);
    let (refined, report) = bundle_adjust(&start, &BundleOptions::default()).unwrap();
    assert!(report.final_objective < 1e-12);

    for trial in 0..50 {
        let mut nudged = refined.clone();
        match trial % 3 {
            0 => {
                let i = rng.gen_range(0..nudged.points.len());
                nudged.points[i] += random_unit(&mut rng) * 1e-4;
            }
            1 => {
                let c = rng.gen_range(2..nudged.cameras.len());
                nudged.cameras[c].rotation += random_unit(&mut rng) * 1e-5;
            }
            _ => {
                let c = rng.gen_range(2..nudged.cameras.len());
                nudged.cameras[c].translation += random_unit(&mut rng) * 1e-4;
            }
        }
        let worse = masked_error(&nudged).unwrap();
        assert!(
            worse >= report.final_objective - 1e-15,
            "trial {trial}: nudge improved the objective to {worse}"
        );
    }
}

#[test]
fn gauge_is_frozen_for_every_seed() {
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(300 + seed);
        let points = random_cloud(&mut rng, 30);
        let scene = generate_turntable_scene(
            &points,
            &TurntableConfig {
                seed,
                ..TurntableConfig::default()
            },
        )
        .unwrap();
        let start = perturb_scene(&scene, 2.0, 0.02, 0.02, seed);
        let (refined, _) = bundle_adjust(&start, &BundleOptions::default()).unwrap();
        assert_eq!(refined.cameras[0].rotation, start.cameras[0].rotation);
        assert_eq!(refined.cameras[0].translation, start.cameras[0].translation);
        let before = start.cameras[1].translation.norm();
        let after = refined.cameras[1].translation.norm();
        assert!(
            (before - after).abs() < 1e-9 * before,
            "seed {seed}: baseline length drifted {before} -> {after}"
        );
    }
}

#[test]
fn similarity_recovery_across_many_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for round in 0..100 {
        let n = rng.gen_range(3..50);
        let source = random_cloud(&mut rng, n);
        let sv = {
            let mean = source.iter().fold(Vector3::zeros(), |a, p| a + p.coords) / n as f64;
            let mut m = nalgebra::DMatrix::zeros(3, n);
            for (k, s) in source.iter().enumerate() {
                m.set_column(k, &(s.coords - mean));
            }
            m.svd(false, false).singular_values
        };
        if sv[0] <= 0.0 || sv[1] / sv[0] < 1e-3 {
            continue;
        }
        let rotation = Rotation3::from_scaled_axis(random_unit(&mut rng) * rng.gen_range(0.0..3.0))
            .into_inner();
        let translation = random_unit(&mut rng) * rng.gen_range(0.0..10.0);
        let scale = rng.gen_range(0.1..10.0);
        let truth = SimilarityTransform::new(rotation, translation, scale).unwrap();
        let target = apply_similarity(&truth, &source);
        let (est, rms) = estimate_similarity(&source, &target).unwrap();
        assert!(rms < 1e-8, "round {round}: rms {rms}");
        assert!(
            (est.scale() - scale).abs() < 1e-8 * scale,
            "round {round}: scale {} vs {scale}",
            est.scale()
        );
        assert!((est.rotation() - rotation).amax() < 1e-7, "round {round}");
    }
}

#[test]
fn stitch_and_calibrate_preserve_dimensionless_shape() {
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(400 + seed);
        let mesh = ellipsoid(
            [
                rng.gen_range(1.0..2.0),
                rng.gen_range(2.0..3.0),
                rng.gen_range(3.0..4.5),
            ],
            2,
        );
        let cloud: Vec<Point3<f64>> = mesh.vertices().to_vec();
        let half = cloud.len() / 2;
        let part_a: Vec<Point3<f64>> = cloud[..half].to_vec();
        let part_b_frame_a: Vec<Point3<f64>> = cloud[half..].to_vec();

        let markers_a = vec![
            ObjectMarker {
                label: "purple".into(),
                head: Point3::new(0.9, 0.1, -0.2),
                tail: Point3::new(1.2, 0.4, 0.1),
            },
            ObjectMarker {
                label: "orange".into(),
                head: Point3::new(-0.7, -0.9, 0.3),
                tail: Point3::new(-1.0, -0.6, 0.6),
            },
        ];
        let hidden = SimilarityTransform::new(
            Rotation3::from_scaled_axis(random_unit(&mut rng) * rng.gen_range(0.5..2.5))
                .into_inner(),
            random_unit(&mut rng) * 4.0,
            rng.gen_range(0.5..2.0),
        )
        .unwrap();
        let to_b = hidden.inverse();
        let part_b = apply_similarity(&to_b, &part_b_frame_a);
        let markers_b: Vec<ObjectMarker> = markers_a
            .iter()
            .map(|m| ObjectMarker {
                label: m.label.clone(),
                head: to_b.apply(&m.head),
                tail: to_b.apply(&m.tail),
            })
            .collect();

        let stitched = stitch(&part_a, &part_b, &markers_a, &markers_b).unwrap();
        assert!(stitched.marker_rms < 1e-9, "seed {seed}");
        for (orig, merged) in cloud.iter().zip(&stitched.cloud) {
            assert!((orig - merged).norm() < 1e-8, "seed {seed}");
        }

        let hull = convex_hull(&stitched.cloud).unwrap();
        let obb = min_volume_obb(hull.vertices()).unwrap();
        let local = Morphology3d::from_measurements(
            hull.signed_volume(),
            hull.surface_area(),
            obb.extents(),
        )
        .unwrap();

        let background = vec![
            BackgroundMarker {
                label: "red".into(),
                position: Point3::new(5.0, 0.0, 0.0),
            },
            BackgroundMarker {
                label: "green".into(),
                position: Point3::new(0.0, 5.0, 0.0),
            },
            BackgroundMarker {
                label: "blue".into(),
                position: Point3::new(-5.0, 0.0, 0.0),
            },
            BackgroundMarker {
                label: "yellow".into(),
                position: Point3::new(0.0, -5.0, 0.0),
            },
        ];
        let unit_per_cm = rng.gen_range(0.3..3.0);
        let known = vec![
            KnownDistance {
                a: "red".into(),
                b: "green".into(),
                distance: 50.0f64.sqrt() / unit_per_cm,
            },
            KnownDistance {
                a: "green".into(),
                b: "blue".into(),
                distance: 50.0f64.sqrt() / unit_per_cm,
            },
            KnownDistance {
                a: "blue".into(),
                b: "yellow".into(),
                distance: 50.0f64.sqrt() / unit_per_cm,
            },
            KnownDistance {
                a: "red".into(),
                b: "blue".into(),
                distance: 10.0 / unit_per_cm,
            },
        ];
        let cal = calibrate_scale(&background, &known).unwrap();
        assert!(
            (cal.scale - 1.0 / unit_per_cm).abs() < 1e-9 / unit_per_cm,
            "seed {seed}: scale {} vs {}",
            cal.scale,
            1.0 / unit_per_cm
        );

        let physical = local.scaled(cal.scale).unwrap();
        assert_eq!(physical.fer_3d.to_bits(), local.fer_3d.to_bits());
        assert_eq!(physical.sphericity.to_bits(), local.sphericity.to_bits());
        assert_eq!(physical.c_over_b.to_bits(), local.c_over_b.to_bits());
        assert_eq!(physical.b_over_a.to_bits(), local.b_over_a.to_bits());
        let caliper = caliper_diameter(&stitched.cloud).unwrap();
        assert!(
            (caliper * cal.scale - caliper / unit_per_cm).abs() < 1e-9 * caliper,
            "seed {seed}"
        );
    }
}

#[test]
fn absolute_error_bounds_signed_error() {
    let mut rng = ChaCha8Rng::seed_from_u64(203);
    for round in 0..100 {
        let n = rng.gen_range(1..30);
        let measured: Vec<f64> = (0..n).map(|_| rng.gen_range(10.0..1000.0)).collect();
        let reconstructed: Vec<f64> = measured
            .iter()
            .map(|m| m * rng.gen_range(0.7..1.3))
            .collect();
        let mpe = mean_percentage_error(&measured, &reconstructed).unwrap();
        let mape = mean_absolute_percentage_error(&measured, &reconstructed).unwrap();
        assert!(
            mape >= mpe.abs() - 1e-12,
            "round {round}: mape {mape} below |mpe| {}",
            mpe.abs()
        );

        let inflated: Vec<f64> = measured
            .iter()
            .map(|m| m * rng.gen_range(1.001..1.3))
            .collect();
        let mpe_pos = mean_percentage_error(&measured, &inflated).unwrap();
        let mape_pos = mean_absolute_percentage_error(&measured, &inflated).unwrap();
        assert!(
            mpe_pos > 0.0,
            "round {round}: overestimates must give a positive sign"
        );
        assert!(
            (mape_pos - mpe_pos).abs() < 1e-12,
            "round {round}: one-sided errors"
        );
    }
}

#[test]
fn dispersion_ignores_units() {
    let mut rng = ChaCha8Rng::seed_from_u64(204);
    for round in 0..100 {
        let n = rng.gen_range(2..40);
        let values: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..100.0)).collect();
        let k = rng.gen_range(1e-3..1e3);
        let scaled: Vec<f64> = values.iter().map(|v| v * k).collect();
        let c0 = cov(&values).unwrap();
        let c1 = cov(&scaled).unwrap();
        assert!(
            (c0 - c1).abs() <= 1e-9 * c0.max(1e-12),
            "round {round}: CoV moved {c0} -> {c1} under scale {k}"
        );
    }
}

#[test]
fn tables_keep_every_sample_exactly_once() {
    let mut rng = ChaCha8Rng::seed_from_u64(205);
    let mut records = Vec::new();
    for i in 0..12 {
        let mesh = ellipsoid(
            [
                rng.gen_range(1.0..2.0),
                rng.gen_range(1.0..3.0),
                rng.gen_range(1.0..4.0),
            ],
            2,
        );
        let views = vec![
            ViewShape2d {
                view: 0,
                fer_2d: rng.gen_range(1.0..2.0),
                circularity: rng.gen_range(0.5..1.0),
            },
            ViewShape2d {
                view: 1,
                fer_2d: rng.gen_range(1.0..2.0),
                circularity: rng.gen_range(0.5..1.0),
            },
        ];
        records.push(
            summarize_sample(&format!("sample_{i:02}"), morphology_of(&mesh), views).unwrap(),
        );
    }
    let tables = comparison_tables(&records).unwrap();
    let mut ids: Vec<&str> = tables
        .elongation
        .iter()
        .map(|r| r.sample_id.as_str())
        .collect();
    ids.sort_unstable();
    let mut expect: Vec<String> = (0..12).map(|i| format!("sample_{i:02}")).collect();
    expect.sort();
    assert_eq!(ids, expect.iter().map(String::as_str).collect::<Vec<_>>());
    for w in tables.elongation.windows(2) {
        assert!(w[0].fer_3d <= w[1].fer_3d);
    }
    for row in &tables.envelope {
        assert!((row.check.margin_lower - (row.fer_2d_mean - row.check.lower)).abs() < 1e-12);
        assert!((row.check.margin_upper - (row.fer_2d_mean - row.check.upper)).abs() < 1e-12);
    }
}
