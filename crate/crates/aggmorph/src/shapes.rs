//! Reference meshes: boxes, regular tetrahedra, icospheres, and ellipsoids.
//!
//! These are the closed-form shapes the test suites and the synthetic
//! pipeline lean on; every generator returns a validated [`TriangleMesh`].

use crate::mesh::TriangleMesh;
use nalgebra::Point3;
use std::collections::HashMap;

/// Axis-aligned unit cube spanning `[0, 1]^3`.
pub fn unit_cube() -> TriangleMesh {
    let centered = cuboid([1.0, 1.0, 1.0]);
    let vertices = centered
        .vertices()
        .iter()
        .map(|p| Point3::new(p.x + 0.5, p.y + 0.5, p.z + 0.5))
        .collect();
    TriangleMesh::new(vertices, centered.faces().to_vec()).expect("shifted cube stays valid")
}

/// Axis-aligned box centered at the origin with the given edge lengths.
pub fn cuboid(edges: [f64; 3]) -> TriangleMesh {
    let [ex, ey, ez] = edges;
    let (hx, hy, hz) = (ex / 2.0, ey / 2.0, ez / 2.0);
    let vertices = vec![
        Point3::new(-hx, -hy, -hz),
        Point3::new(hx, -hy, -hz),
        Point3::new(hx, hy, -hz),
        Point3::new(-hx, hy, -hz),
        Point3::new(-hx, -hy, hz),
        Point3::new(hx, -hy, hz),
        Point3::new(hx, hy, hz),
        Point3::new(-hx, hy, hz),
    ];
    let faces = vec![
        [0, 2, 1],
        [0, 3, 2],
        [4, 5, 6],
        [4, 6, 7],
        [0, 1, 5],
        [0, 5, 4],
        [2, 3, 7],
        [2, 7, 6],
        [1, 2, 6],
        [1, 6, 5],
        [3, 0, 4],
        [3, 4, 7],
    ];
    TriangleMesh::new(vertices, faces).expect("box construction is valid")
}

/// Regular tetrahedron with the given edge length, centered at the origin.
pub fn regular_tetrahedron(edge: f64) -> TriangleMesh {
    let s = edge / (2.0 * 2.0f64.sqrt());
    let vertices = vec![
        Point3::new(s, s, s),
        Point3::new(s, -s, -s),
        Point3::new(-s, s, -s),
        Point3::new(-s, -s, s),
    ];
    let faces = vec![[0, 1, 2], [0, 2, 3], [0, 3, 1], [1, 3, 2]];
    TriangleMesh::new(vertices, faces).expect("tetrahedron construction is valid")
}

/// Sphere approximation from a subdivided icosahedron.
///
/// Vertices lie exactly on the sphere of the given radius. Subdivision 0 is
/// the bare icosahedron (20 faces); each level quadruples the face count.
pub fn icosphere(radius: f64, subdivisions: u32) -> TriangleMesh {
    ellipsoid([radius, radius, radius], subdivisions)
}

/// Axis-aligned ellipsoid with semi-axes `(a, b, c)`, centered at the
/// origin, built by scaling a unit icosphere per axis.
pub fn ellipsoid(semi_axes: [f64; 3], subdivisions: u32) -> TriangleMesh {
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let mut vertices: Vec<Point3<f64>> = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| {
        let n = (x * x + y * y + z * z).sqrt();
        Point3::new(x / n, y / n, z / n)
    })
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        for face in &faces {
            let mut mids = [0usize; 3];
            for k in 0..3 {
                let a = face[k];
                let b = face[(k + 1) % 3];
                let key = (a.min(b), a.max(b));
                mids[k] = *midpoints.entry(key).or_insert_with(|| {
                    let m = (vertices[a].coords + vertices[b].coords) / 2.0;
                    let m = m / m.norm();
                    vertices.push(Point3::from(m));
                    vertices.len() - 1
                });
            }
            next.push([face[0], mids[0], mids[2]]);
            next.push([face[1], mids[1], mids[0]]);
            next.push([face[2], mids[2], mids[1]]);
            next.push([mids[0], mids[1], mids[2]]);
        }
        faces = next;
    }

    let [a, b, c] = semi_axes;
    let vertices = vertices
        .into_iter()
        .map(|p| Point3::new(p.x * a, p.y * b, p.z * c))
        .collect();
    TriangleMesh::new(vertices, faces).expect("icosphere construction is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn cuboid_measurements() {
        let m = cuboid([2.0, 3.0, 4.0]);
        assert_relative_eq!(m.signed_volume(), 24.0, epsilon = 1e-12);
        assert_relative_eq!(m.surface_area(), 52.0, epsilon = 1e-12);
    }

    #[test]
    fn tetrahedron_volume_matches_closed_form() {
        let edge = 2.5;
        let m = regular_tetrahedron(edge);
        let expected = edge.powi(3) / (6.0 * 2.0f64.sqrt());
        assert_relative_eq!(m.signed_volume(), expected, epsilon = 1e-12);
        let expected_area = 3.0f64.sqrt() * edge * edge;
        assert_relative_eq!(m.surface_area(), expected_area, epsilon = 1e-12);
    }

    #[test]
    fn icosphere_approaches_sphere() {
        let m = icosphere(1.0, 3);
        assert_eq!(m.faces().len(), 20 * 4usize.pow(3));
        let v_sphere = 4.0 / 3.0 * PI;
        let a_sphere = 4.0 * PI;
        assert!((m.signed_volume() - v_sphere).abs() / v_sphere < 0.01);
        assert!((m.surface_area() - a_sphere).abs() / a_sphere < 0.01);
        for p in m.vertices() {
            assert_relative_eq!(p.coords.norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn ellipsoid_volume_scales() {
        let m = ellipsoid([1.0, 2.0, 3.0], 3);
        let unit = icosphere(1.0, 3);
        assert_relative_eq!(
            m.signed_volume(),
            unit.signed_volume() * 6.0,
            epsilon = 1e-9
        );
    }
}
