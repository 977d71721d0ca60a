//! Simple polygons and the 2D shape descriptors measured on them.
//!
//! Silhouette outlines are represented as counterclockwise simple polygons.
//! The descriptors mirror the 3D ones: maximum Feret diameter, the extent
//! perpendicular to it, their ratio, and circularity.

use crate::silhouette::SilhouetteError;
use nalgebra::{Point2, Vector2};

/// A simple closed polygon, stored counterclockwise (positive signed area).
#[derive(Debug, Clone, PartialEq)]
pub struct SilhouettePolygon {
    vertices: Vec<Point2<f64>>,
}

impl SilhouettePolygon {
    /// Validates vertex count, non-zero area, and simplicity; normalizes
    /// the winding to counterclockwise. A repeated closing vertex and
    /// consecutive duplicate vertices are dropped silently.
    pub fn new(mut vertices: Vec<Point2<f64>>) -> Result<Self, SilhouetteError> {
        vertices.dedup();
        if vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 3 {
            return Err(SilhouetteError::TooFewVertices {
                required: 3,
                actual: vertices.len(),
            });
        }
        let poly = SilhouettePolygon { vertices };
        poly.check_simple()?;
        if poly.signed_area() == 0.0 {
            return Err(SilhouetteError::DegeneratePolygon);
        }
        Ok(poly.normalized())
    }

    /// Marching-squares loops are simple by construction; only the winding
    /// needs normalizing.
    pub(crate) fn from_traced(vertices: Vec<Point2<f64>>) -> Self {
        debug_assert!(vertices.len() >= 3);
        SilhouettePolygon { vertices }.normalized()
    }

    fn normalized(mut self) -> Self {
        if self.signed_area() < 0.0 {
            self.vertices.reverse();
        }
        self
    }

    pub fn vertices(&self) -> &[Point2<f64>] {
        &self.vertices
    }

    fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        let mut twice = 0.0;
        for i in 0..n {
            let p = self.vertices[i];
            let q = self.vertices[(i + 1) % n];
            twice += p.x * q.y - q.x * p.y;
        }
        twice / 2.0
    }

    /// Enclosed area (shoelace formula). Positive by construction.
    pub fn area(&self) -> f64 {
        self.signed_area()
    }

    /// Total boundary length.
    pub fn perimeter(&self) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| (self.vertices[(i + 1) % n] - self.vertices[i]).norm())
            .sum()
    }

    fn check_simple(&self) -> Result<(), SilhouetteError> {
        let n = self.vertices.len();
        let seg = |i: usize| (self.vertices[i], self.vertices[(i + 1) % n]);
        for i in 0..n {
            let (a, b) = seg(i);
            for j in (i + 1)..n {
                // Neighbours share one endpoint by design; skip them.
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (c, d) = seg(j);
                if segments_touch(a, b, c, d) {
                    return Err(SilhouetteError::SelfIntersecting);
                }
            }
        }
        Ok(())
    }
}

/// Area and perimeter in one call.
pub fn polygon_metrics(poly: &SilhouettePolygon) -> (f64, f64) {
    (poly.area(), poly.perimeter())
}

/// Maximum Feret diameter: the largest distance between any two vertices,
/// found by rotating calipers over antipodal hull-vertex pairs.
///
/// Returns the length and the direction angle in `[0, pi)`; exact ties
/// resolve to the smallest angle.
pub fn max_feret(poly: &SilhouettePolygon) -> (f64, f64) {
    let hull = monotone_chain(poly.vertices());
    let h = hull.len();
    debug_assert!(h >= 3, "valid polygons have non-collinear vertices");
    let cross = |o: Point2<f64>, a: Point2<f64>, b: Point2<f64>| {
        (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
    };

    let mut best = (0.0f64, 0.0f64);
    let mut consider = |p: Point2<f64>, q: Point2<f64>| {
        let d = (q - p).norm();
        let angle = direction_angle(q - p);
        if d > best.0 || (d == best.0 && angle < best.1) {
            best = (d, angle);
        }
    };

    let mut k = 1usize;
    for i in 0..h {
        let ni = (i + 1) % h;
        loop {
            let nk = (k + 1) % h;
            if cross(hull[i], hull[ni], hull[nk]).abs() > cross(hull[i], hull[ni], hull[k]).abs() {
                k = nk;
            } else {
                break;
            }
        }
        consider(hull[i], hull[k]);
        consider(hull[ni], hull[k]);
    }
    best
}

/// Extent of the polygon perpendicular to the given direction angle. With
/// the angle from [`max_feret`] this is the breadth `L_min` that pairs with
/// `L_max` in the 2D elongation ratio.
pub fn min_feret_perp(poly: &SilhouettePolygon, direction_angle: f64) -> f64 {
    let perp = Vector2::new(-direction_angle.sin(), direction_angle.cos());
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in poly.vertices() {
        let d = perp.dot(&v.coords);
        lo = lo.min(d);
        hi = hi.max(d);
    }
    hi - lo
}

/// 2D elongation `L_max / L_min`.
pub fn fer_2d(l_max: f64, l_min: f64) -> Result<f64, SilhouetteError> {
    if l_max.is_nan() || l_max <= 0.0 {
        return Err(SilhouetteError::NonPositiveInput(l_max));
    }
    if l_min.is_nan() || l_min <= 0.0 {
        return Err(SilhouetteError::NonPositiveInput(l_min));
    }
    if l_max < l_min {
        return Err(SilhouetteError::OrderViolation { l_max, l_min });
    }
    Ok(l_max / l_min)
}

/// Circularity `4 pi A / P^2`: 1 for a disc, smaller for everything else.
pub fn circularity_2d(area: f64, perimeter: f64) -> Result<f64, SilhouetteError> {
    if area.is_nan() || area <= 0.0 {
        return Err(SilhouetteError::NonPositiveInput(area));
    }
    if perimeter.is_nan() || perimeter <= 0.0 {
        return Err(SilhouetteError::NonPositiveInput(perimeter));
    }
    Ok(4.0 * std::f64::consts::PI * area / (perimeter * perimeter))
}

/// Direction angle of a vector folded into `[0, pi)`.
fn direction_angle(d: Vector2<f64>) -> f64 {
    let (dx, dy) = if d.y < 0.0 || (d.y == 0.0 && d.x < 0.0) {
        (-d.x, -d.y)
    } else {
        (d.x, d.y)
    };
    let a = dy.atan2(dx);
    if a >= std::f64::consts::PI {
        0.0
    } else {
        a
    }
}

/// 2D convex hull by Andrew's monotone chain, counterclockwise, collinear
/// points dropped. Shared with the oriented-box search.
pub(crate) fn monotone_chain(points: &[Point2<f64>]) -> Vec<Point2<f64>> {
    let mut pts: Vec<Point2<f64>> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: Point2<f64>, a: Point2<f64>, b: Point2<f64>| {
        (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
    };
    let mut lower: Vec<Point2<f64>> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point2<f64>> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn segments_touch(a: Point2<f64>, b: Point2<f64>, c: Point2<f64>, d: Point2<f64>) -> bool {
    let cross = |o: Point2<f64>, p: Point2<f64>, q: Point2<f64>| {
        (p.x - o.x) * (q.y - o.y) - (p.y - o.y) * (q.x - o.x)
    };
    let on_segment = |p: Point2<f64>, q: Point2<f64>, r: Point2<f64>| {
        r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    };
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}
