//! Cross-module geometry properties on seeded random inputs: invariance of
//! dimensionless descriptors under rigid motion and scaling, containment
//! bounds, dual-route measurement oracles, and a Monte Carlo volume check.

use aggmorph::hull::convex_hull;
use aggmorph::mesh::{caliper_diameter, TriangleMesh};
use aggmorph::obb::{axes_matrix, fer_3d, min_volume_obb, sphericity_3d};
use aggmorph::polygon::{max_feret, SilhouettePolygon};
use aggmorph::shapes::{cuboid, ellipsoid, icosphere};
use aggmorph::silhouette::{render_silhouette, trace_boundary, ViewCamera};
use nalgebra::{Point2, Point3, Rotation3, Vector3};
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

/// A bumpy star-shaped closed mesh: an ellipsoid with radial noise.
fn random_blob(rng: &mut ChaCha8Rng) -> TriangleMesh {
    let axes = [
        rng.gen_range(0.5..2.5),
        rng.gen_range(0.5..2.5),
        rng.gen_range(0.5..2.5),
    ];
    let base = ellipsoid(axes, 2);
    let faces = base.faces().to_vec();
    let vertices: Vec<Point3<f64>> = base
        .vertices()
        .iter()
        .map(|p| {
            let bump = 1.0 + rng.gen_range(-0.05..0.05);
            Point3::from(p.coords * bump)
        })
        .collect();
    TriangleMesh::new(vertices, faces).expect("radial noise keeps the mesh valid")
}

fn transformed(
    mesh: &TriangleMesh,
    rotation: &Rotation3<f64>,
    translation: &Vector3<f64>,
    scale: f64,
) -> TriangleMesh {
    let vertices: Vec<Point3<f64>> = mesh
        .vertices()
        .iter()
        .map(|p| Point3::from(scale * (rotation * p.coords) + translation))
        .collect();
    TriangleMesh::new(vertices, mesh.faces().to_vec()).expect("similarity keeps the mesh valid")
}

#[test]
fn descriptors_survive_rigid_motion_and_scaling() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for round in 0..100 {
        let mesh = random_blob(&mut rng);
        let volume = mesh.signed_volume();
        let area = mesh.surface_area();
        let box0 = min_volume_obb(mesh.vertices()).unwrap();
        let fer0 = fer_3d(&box0).unwrap();
        let sph0 = sphericity_3d(volume, area).unwrap();

        let rotation = Rotation3::from_scaled_axis(random_unit(&mut rng) * rng.gen_range(0.0..3.0));
        let translation = random_unit(&mut rng) * rng.gen_range(0.0..20.0);
        let scale = rng.gen_range(0.2..5.0);
        let moved = transformed(&mesh, &rotation, &translation, scale);

        let volume1 = moved.signed_volume();
        let area1 = moved.surface_area();
        assert!(
            (volume1 - volume * scale.powi(3)).abs() <= 1e-9 * volume1.abs(),
            "round {round}: volume scaling"
        );
        assert!(
            (area1 - area * scale.powi(2)).abs() <= 1e-9 * area1,
            "round {round}: area scaling"
        );

        let sph1 = sphericity_3d(volume1, area1).unwrap();
        assert!(
            (sph1 - sph0).abs() <= 1e-9,
            "round {round}: sphericity moved {sph0} -> {sph1}"
        );

        // The box search only visits directions derived from the hull, so
        // its result follows the applied similarity to rounding error.
        let box1 = min_volume_obb(moved.vertices()).unwrap();
        let fer1 = fer_3d(&box1).unwrap();
        assert!(
            (fer1 - fer0).abs() <= 1e-9 * fer0,
            "round {round}: aspect ratio moved {fer0} -> {fer1}"
        );
        let extents0 = box0.extents();
        let extents1 = box1.extents();
        for k in 0..3 {
            assert!(
                (extents1[k] - extents0[k] * scale).abs() <= 1e-9 * extents1[k],
                "round {round}: extent {k} moved {} -> {}",
                extents0[k] * scale,
                extents1[k]
            );
        }
        let caliper0 = caliper_diameter(mesh.vertices()).unwrap();
        let caliper1 = caliper_diameter(moved.vertices()).unwrap();
        assert!(
            (caliper1 - caliper0 * scale).abs() <= 1e-9 * caliper1,
            "round {round}: caliper scaling"
        );
    }
}

/// Star-shaped polygon around the origin. Jittered regular angles keep
/// every angular gap below a half turn, so each edge stays inside its own
/// convex sector and the polygon is simple by construction.
fn random_star_polygon(rng: &mut ChaCha8Rng) -> SilhouettePolygon {
    let n = rng.gen_range(5..40);
    let step = std::f64::consts::TAU / n as f64;
    let vertices: Vec<Point2<f64>> = (0..n)
        .map(|i| {
            let t = (i as f64 + rng.gen_range(-0.4..0.4)) * step;
            let r = rng.gen_range(0.5..3.0);
            Point2::new(r * t.cos(), r * t.sin())
        })
        .collect();
    SilhouettePolygon::new(vertices).expect("star polygons are simple")
}

#[test]
fn circularity_never_beats_the_circle() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    for round in 0..150 {
        let poly = random_star_polygon(&mut rng);
        let circ = aggmorph::polygon::circularity_2d(poly.area(), poly.perimeter()).unwrap();
        assert!(
            circ <= 1.0 + 1e-9,
            "round {round}: circularity {circ} exceeds the isoperimetric bound"
        );
    }
}

#[test]
fn hull_contains_points_and_box_contains_hull() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for round in 0..100 {
        let points: Vec<Point3<f64>> = (0..rng.gen_range(8..80))
            .map(|_| {
                Point3::new(
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(-2.0..2.0),
                )
            })
            .collect();
        let Ok(hull) = convex_hull(&points) else {
            continue;
        };

        let eps = 1e-9
            * points
                .iter()
                .map(|p| p.coords.norm())
                .fold(0.0f64, f64::max)
                .max(1.0);
        for face in hull.faces() {
            let hv = hull.vertices();
            let n = (hv[face[1]] - hv[face[0]]).cross(&(hv[face[2]] - hv[face[0]]));
            let n = n.normalize();
            for p in &points {
                let d = n.dot(&(p - hv[face[0]]));
                assert!(
                    d <= eps * 100.0,
                    "round {round}: point {d} outside a hull face"
                );
            }
        }

        let obb = min_volume_obb(&points).unwrap();
        let hull_volume = hull.signed_volume();
        assert!(
            obb.volume() >= hull_volume - 1e-9 * hull_volume.abs(),
            "round {round}: box volume {} below hull volume {hull_volume}",
            obb.volume()
        );
        let rot = axes_matrix(&obb).transpose();
        let half = obb.extents().map(|e| e / 2.0);
        for p in &points {
            let local = rot * (p - obb.center());
            for k in 0..3 {
                assert!(
                    local[k].abs() <= half[k] + 1e-7,
                    "round {round}: point escapes the box along axis {k}"
                );
            }
        }
    }
}

fn ray_hits(mesh: &TriangleMesh, origin: &Point3<f64>, dir: &Vector3<f64>) -> usize {
    let mut hits = 0;
    for face in mesh.faces() {
        let a = mesh.vertices()[face[0]];
        let b = mesh.vertices()[face[1]];
        let c = mesh.vertices()[face[2]];
        let e1 = b - a;
        let e2 = c - a;
        let p = dir.cross(&e2);
        let det = e1.dot(&p);
        if det.abs() < 1e-14 {
            continue;
        }
        let inv = 1.0 / det;
        let s = origin - a;
        let u = s.dot(&p) * inv;
        if !(0.0..=1.0).contains(&u) {
            continue;
        }
        let q = s.cross(&e1);
        let v = dir.dot(&q) * inv;
        if v < 0.0 || u + v > 1.0 {
            continue;
        }
        if e2.dot(&q) * inv > 0.0 {
            hits += 1;
        }
    }
    hits
}

/// Ray-parity Monte Carlo volume agrees with the signed-tetrahedra sum.
/// The two routes share no code: one integrates divergence over faces, the
/// other counts boundary crossings.
#[test]
fn monte_carlo_parity_confirms_mesh_volume() {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let meshes = [icosphere(1.3, 2), cuboid([2.0, 1.0, 0.7])];
    for (mi, mesh) in meshes.iter().enumerate() {
        let (mut lo, mut hi) = (
            Vector3::repeat(f64::INFINITY),
            Vector3::repeat(f64::NEG_INFINITY),
        );
        for p in mesh.vertices() {
            lo = lo.inf(&p.coords);
            hi = hi.sup(&p.coords);
        }
        let span = hi - lo;
        let bbox_volume = span.x * span.y * span.z;
        let samples = 40_000;
        let mut inside = 0usize;
        for _ in 0..samples {
            let q = Point3::from(
                lo + Vector3::new(
                    rng.gen_range(0.0..1.0) * span.x,
                    rng.gen_range(0.0..1.0) * span.y,
                    rng.gen_range(0.0..1.0) * span.z,
                ),
            );
            let dir = random_unit(&mut rng);
            if ray_hits(mesh, &q, &dir) % 2 == 1 {
                inside += 1;
            }
        }
        let estimate = bbox_volume * inside as f64 / samples as f64;
        let exact = mesh.signed_volume();
        assert!(
            (estimate - exact).abs() <= 0.03 * exact,
            "mesh {mi}: Monte Carlo {estimate} vs divergence {exact}"
        );
    }
}

#[test]
fn caliper_agrees_with_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    for round in 0..100 {
        let n = if round % 2 == 0 {
            rng.gen_range(4..60)
        } else {
            rng.gen_range(120..220)
        };
        let points: Vec<Point3<f64>> = (0..n)
            .map(|_| {
                Point3::new(
                    rng.gen_range(-3.0..3.0),
                    rng.gen_range(-3.0..3.0),
                    rng.gen_range(-3.0..3.0),
                )
            })
            .collect();
        let fast = caliper_diameter(&points).unwrap();
        let mut brute: f64 = 0.0;
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                brute = brute.max((points[i] - points[j]).norm_squared());
            }
        }
        assert_eq!(fast, brute.sqrt(), "round {round}");
    }
}

#[test]
fn feret_agrees_with_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    for round in 0..150 {
        let poly = random_star_polygon(&mut rng);
        let (fast, _) = max_feret(&poly);
        let verts = poly.vertices();
        let mut brute: f64 = 0.0;
        for i in 0..verts.len() {
            for j in (i + 1)..verts.len() {
                brute = brute.max((verts[i] - verts[j]).norm());
            }
        }
        assert_eq!(fast, brute, "round {round}");
    }
}

/// Any planar extent of a projected shape is bounded by the 3D caliper
/// diameter; the traced contour may add at most pixel-scale slack.
#[test]
fn projected_feret_cannot_exceed_caliper() {
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    for round in 0..20 {
        let mesh = random_blob(&mut rng);
        let caliper = caliper_diameter(mesh.vertices()).unwrap();
        let dir = random_unit(&mut rng);
        let camera = ViewCamera::fitted_orthographic(dir, 256, 256, mesh.vertices(), 0.1).unwrap();
        let mask = render_silhouette(&mesh, &camera).unwrap();
        let pitch = mask.pixel_pitch().unwrap();
        let poly = trace_boundary(&mask).unwrap();
        let (feret, _) = max_feret(&poly);
        assert!(
            feret <= caliper + 2.0 * pitch,
            "round {round}: projected {feret} exceeds caliper {caliper}"
        );
    }
}
