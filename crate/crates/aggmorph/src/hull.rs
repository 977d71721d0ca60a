//! 3D convex hull by quickhull.
//!
//! Planarity decisions use an absolute epsilon scaled by the bounding-box
//! diagonal of the input, so the algorithm is insensitive to the unit
//! choice. Inputs whose points coincide, lie on one line, or lie in one
//! plane are rejected rather than returning a flat hull.

use crate::mesh::{bbox_diagonal, Degeneracy, GeometryError, TriangleMesh, DEGENERACY_TOLERANCE};
use nalgebra::{Point3, Vector3};
use std::collections::HashMap;

struct HullFace {
    verts: [usize; 3],
    normal: Vector3<f64>,
    offset: f64,
    outside: Vec<usize>,
}

impl HullFace {
    fn new(points: &[Point3<f64>], verts: [usize; 3]) -> Self {
        let a = points[verts[0]];
        let normal = (points[verts[1]] - a)
            .cross(&(points[verts[2]] - a))
            .normalize();
        HullFace {
            verts,
            normal,
            offset: normal.dot(&a.coords),
            outside: Vec::new(),
        }
    }

    fn distance(&self, p: &Point3<f64>) -> f64 {
        self.normal.dot(&p.coords) - self.offset
    }
}

/// Convex hull of a 3D point set as a closed triangle mesh.
///
/// Only hull vertices survive into the result. Coplanar input faces may be
/// triangulated arbitrarily but the surface is always watertight and
/// outward-oriented.
pub fn convex_hull(points: &[Point3<f64>]) -> Result<TriangleMesh, GeometryError> {
    if points.len() < 4 {
        return Err(GeometryError::InsufficientPoints {
            required: 4,
            actual: points.len(),
        });
    }
    let eps = DEGENERACY_TOLERANCE * bbox_diagonal(points);
    let simplex = initial_simplex(points, eps)?;

    let mut faces: Vec<Option<HullFace>> = initial_faces(points, simplex)
        .into_iter()
        .map(Some)
        .collect();
    let mut unclaimed: Vec<usize> = (0..points.len()).filter(|i| !simplex.contains(i)).collect();
    distribute(points, &mut faces, &mut unclaimed, eps);

    loop {
        // Farthest outside point over all live faces; none means done.
        let mut apex: Option<(usize, usize, f64)> = None;
        for (fi, face) in faces.iter().enumerate() {
            let Some(face) = face else { continue };
            for &pi in &face.outside {
                let d = face.distance(&points[pi]);
                if apex.is_none_or(|(_, _, best)| d > best) {
                    apex = Some((fi, pi, d));
                }
            }
        }
        let Some((_, apex, _)) = apex else { break };
        let apex_point = points[apex];

        // Faces the apex sees get replaced by a cone from the apex over the
        // horizon. The horizon is exactly the set of directed edges of
        // visible faces whose reverse lies in a hidden face.
        let mut orphaned: Vec<usize> = Vec::new();
        let mut edge_count: HashMap<(usize, usize), i32> = HashMap::new();
        for face in faces.iter_mut() {
            let visible = face.as_ref().is_some_and(|f| f.distance(&apex_point) > eps);
            if !visible {
                continue;
            }
            let f = face.take().expect("checked above");
            orphaned.extend(f.outside);
            for k in 0..3 {
                let a = f.verts[k];
                let b = f.verts[(k + 1) % 3];
                *edge_count.entry((a, b)).or_insert(0) += 1;
                *edge_count.entry((b, a)).or_insert(0) -= 1;
            }
        }
        let mut horizon: Vec<(usize, usize)> = edge_count
            .iter()
            .filter(|&(_, &c)| c > 0)
            .map(|(&e, _)| e)
            .collect();
        horizon.sort_unstable();

        orphaned.retain(|&pi| pi != apex);
        orphaned.sort_unstable();
        orphaned.dedup();
        let mut fresh: Vec<Option<HullFace>> = horizon
            .iter()
            .map(|&(a, b)| Some(HullFace::new(points, [a, b, apex])))
            .collect();
        distribute(points, &mut fresh, &mut orphaned, eps);
        faces.extend(fresh);
        faces.retain(|f| f.is_some());
    }

    assemble(points, faces)
}

/// Four affinely independent input indices, or the degeneracy that prevents
/// finding them.
fn initial_simplex(points: &[Point3<f64>], eps: f64) -> Result<[usize; 4], GeometryError> {
    let mut extremes = [0usize; 6];
    for (i, p) in points.iter().enumerate() {
        for axis in 0..3 {
            if p.coords[axis] < points[extremes[axis]].coords[axis] {
                extremes[axis] = i;
            }
            if p.coords[axis] > points[extremes[axis + 3]].coords[axis] {
                extremes[axis + 3] = i;
            }
        }
    }
    let mut best = (extremes[0], extremes[1], 0.0);
    for i in 0..6 {
        for j in (i + 1)..6 {
            let d = (points[extremes[i]] - points[extremes[j]]).norm();
            if d > best.2 {
                best = (extremes[i], extremes[j], d);
            }
        }
    }
    let (p0, p1, span) = best;
    if span <= eps || eps == 0.0 {
        return Err(GeometryError::DegenerateInput(Degeneracy::Coincident));
    }

    let dir = (points[p1] - points[p0]).normalize();
    let mut p2 = (0usize, 0.0);
    for (i, p) in points.iter().enumerate() {
        let rel = p - points[p0];
        let off = (rel - dir * rel.dot(&dir)).norm();
        if off > p2.1 {
            p2 = (i, off);
        }
    }
    if p2.1 <= eps {
        return Err(GeometryError::DegenerateInput(Degeneracy::Collinear));
    }
    let p2 = p2.0;

    let normal = (points[p1] - points[p0])
        .cross(&(points[p2] - points[p0]))
        .normalize();
    let mut p3 = (0usize, 0.0);
    for (i, p) in points.iter().enumerate() {
        let off = normal.dot(&(p - points[p0])).abs();
        if off > p3.1 {
            p3 = (i, off);
        }
    }
    if p3.1 <= eps {
        return Err(GeometryError::DegenerateInput(Degeneracy::Coplanar));
    }
    Ok([p0, p1, p2, p3.0])
}

fn initial_faces(points: &[Point3<f64>], simplex: [usize; 4]) -> Vec<HullFace> {
    let [a, b, c, d] = simplex;
    let mut faces = vec![
        HullFace::new(points, [a, b, c]),
        HullFace::new(points, [a, c, d]),
        HullFace::new(points, [a, d, b]),
        HullFace::new(points, [b, d, c]),
    ];
    let centroid = Point3::from(
        (points[a].coords + points[b].coords + points[c].coords + points[d].coords) / 4.0,
    );
    for face in &mut faces {
        if face.distance(&centroid) > 0.0 {
            face.verts.swap(1, 2);
            face.normal = -face.normal;
            face.offset = -face.offset;
        }
    }
    faces
}

/// Assigns each point to the first face that sees it; points inside every
/// face are dropped for good.
fn distribute(
    points: &[Point3<f64>],
    faces: &mut [Option<HullFace>],
    candidates: &mut Vec<usize>,
    eps: f64,
) {
    for &pi in candidates.iter() {
        for face in faces.iter_mut() {
            let Some(face) = face else { continue };
            if face.distance(&points[pi]) > eps {
                face.outside.push(pi);
                break;
            }
        }
    }
    candidates.clear();
}

fn assemble(
    points: &[Point3<f64>],
    faces: Vec<Option<HullFace>>,
) -> Result<TriangleMesh, GeometryError> {
    let mut remap: HashMap<usize, usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut tris = Vec::new();
    for face in faces.into_iter().flatten() {
        let mut tri = [0usize; 3];
        for (slot, &v) in tri.iter_mut().zip(face.verts.iter()) {
            *slot = *remap.entry(v).or_insert_with(|| {
                vertices.push(points[v]);
                vertices.len() - 1
            });
        }
        tris.push(tri);
    }
    TriangleMesh::new(vertices, tris)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cube_corners() -> Vec<Point3<f64>> {
        shapes::unit_cube().vertices().to_vec()
    }

    #[test]
    fn cube_corners_hull() {
        let hull = convex_hull(&cube_corners()).unwrap();
        assert_eq!(hull.vertices().len(), 8);
        assert_eq!(hull.faces().len(), 12);
        assert_relative_eq!(hull.signed_volume(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn interior_points_change_nothing() {
        let mut points = cube_corners();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            points.push(Point3::new(
                rng.gen_range(0.01..0.99),
                rng.gen_range(0.01..0.99),
                rng.gen_range(0.01..0.99),
            ));
        }
        let hull = convex_hull(&points).unwrap();
        assert_eq!(hull.vertices().len(), 8);
        assert_relative_eq!(hull.signed_volume(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn every_input_point_is_inside_or_on_hull() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let points: Vec<Point3<f64>> = (0..500)
            .map(|_| {
                Point3::new(
                    rng.gen_range(-3.0..3.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-2.0..2.0),
                )
            })
            .collect();
        let hull = convex_hull(&points).unwrap();
        let eps = DEGENERACY_TOLERANCE * bbox_diagonal(&points);
        for face in hull.faces() {
            let a = hull.vertices()[face[0]];
            let n = (hull.vertices()[face[1]] - a)
                .cross(&(hull.vertices()[face[2]] - a))
                .normalize();
            for p in &points {
                assert!(n.dot(&(p - a)) <= eps, "point outside hull face");
            }
        }
    }

    #[test]
    fn degenerate_inputs_are_classified() {
        let same = vec![Point3::new(1.0, 2.0, 3.0); 5];
        assert!(matches!(
            convex_hull(&same),
            Err(GeometryError::DegenerateInput(Degeneracy::Coincident))
        ));

        let line: Vec<_> = (0..5).map(|i| Point3::new(i as f64, 0.0, 0.0)).collect();
        assert!(matches!(
            convex_hull(&line),
            Err(GeometryError::DegenerateInput(Degeneracy::Collinear))
        ));

        let plane: Vec<_> = (0..9)
            .map(|i| Point3::new((i % 3) as f64, (i / 3) as f64, 2.0))
            .collect();
        assert!(matches!(
            convex_hull(&plane),
            Err(GeometryError::DegenerateInput(Degeneracy::Coplanar))
        ));
    }

    #[test]
    fn too_few_points() {
        let three = vec![
            Point3::origin(),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
        ];
        assert!(matches!(
            convex_hull(&three),
            Err(GeometryError::InsufficientPoints {
                required: 4,
                actual: 3
            })
        ));
    }

    #[test]
    fn sphere_points_keep_volume() {
        let sphere = shapes::icosphere(2.0, 2);
        let hull = convex_hull(sphere.vertices()).unwrap();
        assert_relative_eq!(
            hull.signed_volume(),
            sphere.signed_volume(),
            max_relative = 1e-9
        );
        assert_eq!(hull.vertices().len(), sphere.vertices().len());
    }
}
