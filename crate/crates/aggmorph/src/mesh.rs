//! Validated triangle meshes and their bulk measurements.
//!
//! A [`TriangleMesh`] is checked on construction: every face must reference
//! existing vertices, every undirected edge must be shared by exactly two
//! faces, and no face may be degenerate. Face windings that merely disagree
//! are repaired by flipping whole faces; surfaces where no consistent
//! winding exists are rejected. After repair each connected component is
//! flipped, if needed, so that its signed volume is positive, i.e. normals
//! point outward.

use nalgebra::{Point3, Vector3};
use std::collections::HashMap;
use std::fmt;
use thiserror::Error;

/// Faces with area at or below this bound (squared length units) are
/// rejected as degenerate.
pub const DEGENERATE_FACE_AREA: f64 = 1e-12;

/// Relative tolerance for coincidence, collinearity, and coplanarity tests,
/// scaled by the bounding-box diagonal of the point set.
pub const DEGENERACY_TOLERANCE: f64 = 1e-9;

/// How a point set failed to span three dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Degeneracy {
    Coincident,
    Collinear,
    Coplanar,
}

impl fmt::Display for Degeneracy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Degeneracy::Coincident => write!(f, "all points coincide"),
            Degeneracy::Collinear => write!(f, "all points are collinear"),
            Degeneracy::Coplanar => write!(f, "all points are coplanar"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("face {face} references vertex {vertex}, but the mesh has {vertex_count} vertices")]
    InvalidIndex {
        face: usize,
        vertex: usize,
        vertex_count: usize,
    },
    #[error("mesh is not watertight: edge ({}, {}) borders {count} face(s) instead of 2", edge.0, edge.1)]
    NonWatertight { edge: (usize, usize), count: usize },
    #[error("mesh is not orientable: no consistent winding exists across edge ({}, {})", edge.0, edge.1)]
    InconsistentOrientation { edge: (usize, usize) },
    #[error("face {face} is degenerate (area {area:.3e})")]
    DegenerateFace { face: usize, area: f64 },
    #[error("degenerate input: {0}")]
    DegenerateInput(Degeneracy),
    #[error("oriented box has a zero extent")]
    ZeroExtent,
    #[error("expected a positive value, got {0}")]
    NonPositiveInput(f64),
    #[error("need at least {required} points, got {actual}")]
    InsufficientPoints { required: usize, actual: usize },
    #[error("axes are not orthonormal (max deviation {deviation:.3e})")]
    NonOrthonormalAxes { deviation: f64 },
}

/// A closed, consistently outward-oriented triangle mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Point3<f64>>,
    faces: Vec<[usize; 3]>,
}

impl TriangleMesh {
    /// Builds a mesh, validating closure and repairing the winding.
    ///
    /// Fails if a face references a missing vertex, a face has (near) zero
    /// area, an edge is shared by a number of faces other than two, or the
    /// surface is not orientable.
    pub fn new(vertices: Vec<Point3<f64>>, faces: Vec<[usize; 3]>) -> Result<Self, GeometryError> {
        let n = vertices.len();
        for (fi, face) in faces.iter().enumerate() {
            for &v in face {
                if v >= n {
                    return Err(GeometryError::InvalidIndex {
                        face: fi,
                        vertex: v,
                        vertex_count: n,
                    });
                }
            }
        }
        for (fi, face) in faces.iter().enumerate() {
            let area = triangle_area(&vertices[face[0]], &vertices[face[1]], &vertices[face[2]]);
            if area.is_nan() || area <= DEGENERATE_FACE_AREA {
                return Err(GeometryError::DegenerateFace { face: fi, area });
            }
        }

        let mut mesh = TriangleMesh { vertices, faces };
        mesh.repair_orientation()?;
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    /// Volume enclosed by the surface, from the divergence theorem over
    /// signed tetrahedra against the origin. Positive for the outward
    /// orientation this type guarantees.
    pub fn signed_volume(&self) -> f64 {
        let mut six_v = 0.0;
        for face in &self.faces {
            let a = self.vertices[face[0]].coords;
            let b = self.vertices[face[1]].coords;
            let c = self.vertices[face[2]].coords;
            six_v += a.dot(&b.cross(&c));
        }
        six_v / 6.0
    }

    /// Total area of all faces.
    pub fn surface_area(&self) -> f64 {
        self.faces
            .iter()
            .map(|f| {
                triangle_area(
                    &self.vertices[f[0]],
                    &self.vertices[f[1]],
                    &self.vertices[f[2]],
                )
            })
            .sum()
    }

    /// Checks that every undirected edge borders exactly two faces, flips
    /// faces until windings agree across every edge, then flips whole
    /// components so each encloses positive volume.
    fn repair_orientation(&mut self) -> Result<(), GeometryError> {
        // For each undirected edge, the faces that use it and whether each
        // traverses it in ascending vertex order.
        let mut edges: HashMap<(usize, usize), Vec<(usize, bool)>> = HashMap::new();
        for (fi, face) in self.faces.iter().enumerate() {
            for k in 0..3 {
                let a = face[k];
                let b = face[(k + 1) % 3];
                let key = (a.min(b), a.max(b));
                edges.entry(key).or_default().push((fi, a < b));
            }
        }
        let mut sorted_edges: Vec<_> = edges.iter().collect();
        sorted_edges.sort_by_key(|(k, _)| **k);
        for (key, users) in &sorted_edges {
            if users.len() != 2 {
                return Err(GeometryError::NonWatertight {
                    edge: **key,
                    count: users.len(),
                });
            }
        }

        // Flood across shared edges. Crossing an edge that both faces
        // traverse in the same direction means exactly one of the two must
        // flip.
        let nf = self.faces.len();
        let mut flip = vec![false; nf];
        let mut component = vec![usize::MAX; nf];
        let mut n_components = 0;
        for seed in 0..nf {
            if component[seed] != usize::MAX {
                continue;
            }
            let comp = n_components;
            n_components += 1;
            component[seed] = comp;
            let mut stack = vec![seed];
            while let Some(fi) = stack.pop() {
                let face = self.faces[fi];
                for k in 0..3 {
                    let a = face[k];
                    let b = face[(k + 1) % 3];
                    let key = (a.min(b), a.max(b));
                    let users = &edges[&key];
                    let (other, dir_other) = if users[0].0 == fi && users[0].1 == (a < b) {
                        users[1]
                    } else {
                        users[0]
                    };
                    let dir_self = a < b;
                    let want = flip[fi] ^ (dir_self == dir_other);
                    if component[other] == usize::MAX {
                        component[other] = comp;
                        flip[other] = want;
                        stack.push(other);
                    } else if flip[other] != want {
                        return Err(GeometryError::InconsistentOrientation { edge: key });
                    }
                }
            }
        }
        for (fi, face) in self.faces.iter_mut().enumerate() {
            if flip[fi] {
                face.swap(1, 2);
            }
        }

        // Point each component's normals outward.
        let mut six_v = vec![0.0; n_components];
        for (fi, face) in self.faces.iter().enumerate() {
            let a = self.vertices[face[0]].coords;
            let b = self.vertices[face[1]].coords;
            let c = self.vertices[face[2]].coords;
            six_v[component[fi]] += a.dot(&b.cross(&c));
        }
        for (fi, face) in self.faces.iter_mut().enumerate() {
            if six_v[component[fi]] < 0.0 {
                face.swap(1, 2);
            }
        }
        Ok(())
    }
}

fn triangle_area(a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

/// Maximum distance between any two points of the set.
///
/// Large inputs are routed through the convex hull first; the answer is the
/// same because both endpoints of a diameter are hull vertices.
pub fn caliper_diameter(points: &[Point3<f64>]) -> Result<f64, GeometryError> {
    if points.len() < 2 {
        return Err(GeometryError::InsufficientPoints {
            required: 2,
            actual: points.len(),
        });
    }
    if points.len() > 100 {
        if let Ok(hull) = crate::hull::convex_hull(points) {
            return Ok(max_pairwise_distance(hull.vertices()));
        }
    }
    Ok(max_pairwise_distance(points))
}

fn max_pairwise_distance(points: &[Point3<f64>]) -> f64 {
    let mut best: f64 = 0.0;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            best = best.max((points[i] - points[j]).norm_squared());
        }
    }
    best.sqrt()
}

/// Diagonal of the axis-aligned bounding box, used to scale relative
/// tolerances. Zero when all points coincide.
pub(crate) fn bbox_diagonal(points: &[Point3<f64>]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let mut lo = points[0].coords;
    let mut hi = points[0].coords;
    for p in points {
        lo = lo.inf(&p.coords);
        hi = hi.sup(&p.coords);
    }
    (hi - lo).norm()
}

pub(crate) fn skew(v: &Vector3<f64>) -> nalgebra::Matrix3<f64> {
    nalgebra::Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;
    use approx::assert_relative_eq;

    fn unit_cube_parts() -> (Vec<Point3<f64>>, Vec<[usize; 3]>) {
        let m = shapes::unit_cube();
        (m.vertices().to_vec(), m.faces().to_vec())
    }

    #[test]
    fn unit_cube_volume_and_area() {
        let cube = shapes::unit_cube();
        assert_relative_eq!(cube.signed_volume(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(cube.surface_area(), 6.0, epsilon = 1e-12);
    }

    #[test]
    fn single_tetrahedron_volume() {
        let vertices = vec![
            Point3::origin(),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, 0.0, 1.0),
        ];
        let faces = vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]];
        let mesh = TriangleMesh::new(vertices, faces).unwrap();
        assert_relative_eq!(mesh.signed_volume(), 1.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn flipped_face_is_repaired() {
        let (vertices, mut faces) = unit_cube_parts();
        faces[3].swap(0, 2);
        let mesh = TriangleMesh::new(vertices, faces).unwrap();
        assert_relative_eq!(mesh.signed_volume(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn fully_inverted_mesh_is_repaired() {
        let (vertices, mut faces) = unit_cube_parts();
        for f in &mut faces {
            f.swap(1, 2);
        }
        let mesh = TriangleMesh::new(vertices, faces).unwrap();
        assert_relative_eq!(mesh.signed_volume(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn missing_face_reports_open_edge() {
        let (vertices, mut faces) = unit_cube_parts();
        faces.pop();
        match TriangleMesh::new(vertices, faces) {
            Err(GeometryError::NonWatertight { count: 1, .. }) => {}
            other => panic!("expected NonWatertight with count 1, got {other:?}"),
        }
    }

    #[test]
    fn duplicated_face_reports_overfull_edge() {
        let (vertices, mut faces) = unit_cube_parts();
        faces.push(faces[0]);
        match TriangleMesh::new(vertices, faces) {
            Err(GeometryError::NonWatertight { count: 3, .. }) => {}
            other => panic!("expected NonWatertight with count 3, got {other:?}"),
        }
    }

    #[test]
    fn out_of_range_index_is_rejected() {
        let vertices = vec![Point3::origin(), Point3::new(1.0, 0.0, 0.0)];
        let faces = vec![[0, 1, 7]];
        match TriangleMesh::new(vertices, faces) {
            Err(GeometryError::InvalidIndex { vertex: 7, .. }) => {}
            other => panic!("expected InvalidIndex, got {other:?}"),
        }
    }

    #[test]
    fn zero_area_face_is_rejected() {
        let vertices = vec![
            Point3::origin(),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(2.0, 0.0, 0.0),
        ];
        let faces = vec![[0, 1, 2]];
        match TriangleMesh::new(vertices, faces) {
            Err(GeometryError::DegenerateFace { face: 0, .. }) => {}
            other => panic!("expected DegenerateFace, got {other:?}"),
        }
    }

    #[test]
    fn two_component_mesh_measures_both() {
        let near = shapes::unit_cube();
        let mut vertices = near.vertices().to_vec();
        let mut faces = near.faces().to_vec();
        let offset = Vector3::new(5.0, 0.0, 0.0);
        let base = vertices.len();
        for v in near.vertices() {
            vertices.push(v + offset);
        }
        for f in near.faces() {
            // Invert the second copy; repair must flip it back outward.
            faces.push([f[0] + base, f[2] + base, f[1] + base]);
        }
        let mesh = TriangleMesh::new(vertices, faces).unwrap();
        assert_relative_eq!(mesh.signed_volume(), 2.0, epsilon = 1e-12);
        assert_relative_eq!(mesh.surface_area(), 12.0, epsilon = 1e-12);
    }

    #[test]
    fn caliper_matches_cube_diagonal() {
        let cube = shapes::unit_cube();
        let d = caliper_diameter(cube.vertices()).unwrap();
        assert_relative_eq!(d, 3.0f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn caliper_requires_two_points() {
        let one = [Point3::origin()];
        assert!(matches!(
            caliper_diameter(&one),
            Err(GeometryError::InsufficientPoints {
                required: 2,
                actual: 1
            })
        ));
    }

    #[test]
    fn caliper_hull_path_matches_brute_force() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let points: Vec<Point3<f64>> = (0..400)
            .map(|_| {
                Point3::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(-0.5..0.5),
                )
            })
            .collect();
        let via_hull = caliper_diameter(&points).unwrap();
        let brute = max_pairwise_distance(&points);
        assert_eq!(via_hull, brute);
    }
}
