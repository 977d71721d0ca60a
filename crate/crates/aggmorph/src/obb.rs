//! Minimum-volume oriented bounding boxes and the 3D shape ratios read off
//! them.
//!
//! The search enumerates convex-hull face normals as candidate box axes,
//! solves the in-plane rectangle exactly per candidate, then refines the
//! winning axis over a local tilt grid. The exact minimum over all
//! orientations is not guaranteed, only a tight approximation; the test
//! suite bounds the gap against a dense rotation sweep. Every direction the
//! search visits is derived from the hull geometry, so the box follows
//! rigid motions of the input instead of drifting with a world-aligned
//! grid.

use crate::hull::convex_hull;
use crate::mesh::GeometryError;
use nalgebra::{Matrix3, Point2, Point3, Unit, UnitVector3, Vector2, Vector3};

/// Half-width of the axis refinement grid, degrees.
const REFINE_RANGE_DEG: f64 = 5.0;
/// Step of the axis refinement grid, degrees.
const REFINE_STEP_DEG: f64 = 0.25;

/// A box with arbitrary orientation: center, three orthonormal axes, and
/// the full extent along each axis, sorted so `extents()[0] <= [1] <= [2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientedBox {
    center: Point3<f64>,
    axes: [UnitVector3<f64>; 3],
    extents: [f64; 3],
}

impl OrientedBox {
    /// Orthonormality is enforced to 1e-9; extents must be non-negative.
    /// Axes and extents are sorted together so extents ascend.
    pub fn new(
        center: Point3<f64>,
        axes: [UnitVector3<f64>; 3],
        extents: [f64; 3],
    ) -> Result<Self, GeometryError> {
        let mut deviation: f64 = 0.0;
        for i in 0..3 {
            deviation = deviation.max((axes[i].norm() - 1.0).abs());
            for j in (i + 1)..3 {
                deviation = deviation.max(axes[i].dot(&axes[j]).abs());
            }
        }
        if deviation > 1e-9 {
            return Err(GeometryError::NonOrthonormalAxes { deviation });
        }
        for &e in &extents {
            if e < 0.0 || !e.is_finite() {
                return Err(GeometryError::NonPositiveInput(e));
            }
        }
        let mut order = [0usize, 1, 2];
        order.sort_by(|&i, &j| extents[i].total_cmp(&extents[j]));
        Ok(OrientedBox {
            center,
            axes: [axes[order[0]], axes[order[1]], axes[order[2]]],
            extents: [extents[order[0]], extents[order[1]], extents[order[2]]],
        })
    }

    pub fn center(&self) -> Point3<f64> {
        self.center
    }

    pub fn axes(&self) -> &[UnitVector3<f64>; 3] {
        &self.axes
    }

    /// Full edge lengths `(a, b, c)` in ascending order.
    pub fn extents(&self) -> [f64; 3] {
        self.extents
    }

    pub fn volume(&self) -> f64 {
        self.extents[0] * self.extents[1] * self.extents[2]
    }
}

/// Elongation `c / a` of a box: longest extent over shortest.
pub fn fer_3d(b: &OrientedBox) -> Result<f64, GeometryError> {
    let [a, _, c] = b.extents();
    if a <= 0.0 {
        return Err(GeometryError::ZeroExtent);
    }
    Ok(c / a)
}

/// Wadell sphericity: surface area of the volume-equivalent sphere over the
/// actual surface area, `(36 pi V^2)^(1/3) / A`.
pub fn sphericity_3d(volume: f64, surface_area: f64) -> Result<f64, GeometryError> {
    if volume.is_nan() || volume <= 0.0 {
        return Err(GeometryError::NonPositiveInput(volume));
    }
    if surface_area.is_nan() || surface_area <= 0.0 {
        return Err(GeometryError::NonPositiveInput(surface_area));
    }
    Ok((36.0 * std::f64::consts::PI * volume * volume).cbrt() / surface_area)
}

/// Near-minimal-volume oriented bounding box of a point set.
///
/// Degeneracy errors from the convex hull pass through, so the input must
/// span three dimensions.
pub fn min_volume_obb(points: &[Point3<f64>]) -> Result<OrientedBox, GeometryError> {
    let hull = convex_hull(points)?;
    let hv = hull.vertices();

    // Candidate directions come from the hull itself, never from fixed
    // world axes, so the search commutes with rigid motions of the input.
    let mut candidates: Vec<UnitVector3<f64>> = Vec::new();
    for face in hull.faces() {
        let n = (hv[face[1]] - hv[face[0]]).cross(&(hv[face[2]] - hv[face[0]]));
        let Some(n) = Unit::try_new(n, 1e-30) else {
            continue;
        };
        if !candidates.iter().any(|c| c.dot(&n).abs() > 1.0 - 1e-9) {
            candidates.push(n);
        }
    }

    let mut best: Option<BoxFit> = None;
    for w in &candidates {
        let fit = fit_box_with_axis(hv, w);
        if best.as_ref().is_none_or(|b| fit.volume < b.volume) {
            best = Some(fit);
        }
    }
    let coarse = best.expect("a hull always has faces");
    let coarse_axis = coarse.axis;

    // Tilt the winning axis over a small two-parameter grid; the third
    // rotation parameter is re-solved exactly by the rectangle search. The
    // tilt axes are the winning box's own in-plane directions, which move
    // with the input.
    let (u0, v0) = (coarse.axes[0], coarse.axes[1]);
    let mut best = coarse;
    let steps = (REFINE_RANGE_DEG / REFINE_STEP_DEG).round() as i32;
    for i in -steps..=steps {
        for j in -steps..=steps {
            if i == 0 && j == 0 {
                continue;
            }
            let alpha = (i as f64 * REFINE_STEP_DEG).to_radians();
            let beta = (j as f64 * REFINE_STEP_DEG).to_radians();
            let rot = nalgebra::Rotation3::from_axis_angle(&u0, alpha)
                * nalgebra::Rotation3::from_axis_angle(&v0, beta);
            let w = Unit::new_normalize(rot * coarse_axis.into_inner());
            let fit = fit_box_with_axis(hv, &w);
            if fit.volume < best.volume {
                best = fit;
            }
        }
    }

    best.into_box()
}

struct BoxFit {
    axis: UnitVector3<f64>,
    volume: f64,
    axes: [UnitVector3<f64>; 3],
    extents: [f64; 3],
    center: Point3<f64>,
}

impl BoxFit {
    fn into_box(self) -> Result<OrientedBox, GeometryError> {
        OrientedBox::new(self.center, self.axes, self.extents)
    }
}

/// Best box constrained to have one axis along `w`: project on the
/// perpendicular plane and take the minimum-area enclosing rectangle there.
fn fit_box_with_axis(points: &[Point3<f64>], w: &UnitVector3<f64>) -> BoxFit {
    let (u, v) = orthonormal_complement(w);
    let planar: Vec<Point2<f64>> = points
        .iter()
        .map(|p| Point2::new(u.dot(&p.coords), v.dot(&p.coords)))
        .collect();
    let rect = min_area_rectangle(&planar);

    let (mut wlo, mut whi) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        let d = w.dot(&p.coords);
        wlo = wlo.min(d);
        whi = whi.max(d);
    }

    let dir1 = Unit::new_unchecked(u.into_inner() * rect.dir.x + v.into_inner() * rect.dir.y);
    let dir2 = Unit::new_unchecked(u.into_inner() * -rect.dir.y + v.into_inner() * rect.dir.x);
    let mid = |lo: f64, hi: f64| (lo + hi) / 2.0;
    let center = Point3::from(
        dir1.into_inner() * mid(rect.lo1, rect.hi1)
            + dir2.into_inner() * mid(rect.lo2, rect.hi2)
            + w.into_inner() * mid(wlo, whi),
    );
    let extents = [rect.hi1 - rect.lo1, rect.hi2 - rect.lo2, whi - wlo];
    BoxFit {
        axis: *w,
        volume: extents[0] * extents[1] * extents[2],
        axes: [dir1, dir2, *w],
        extents,
        center,
    }
}

struct Rect {
    dir: Vector2<f64>,
    lo1: f64,
    hi1: f64,
    lo2: f64,
    hi2: f64,
    area: f64,
}

/// Minimum-area enclosing rectangle of a planar point set. Some side of the
/// optimum is collinear with a hull edge, so it suffices to scan rectangles
/// aligned with each edge of the 2D convex hull.
fn min_area_rectangle(points: &[Point2<f64>]) -> Rect {
    let hull = crate::polygon::monotone_chain(points);
    let scan = if hull.len() >= 3 { &hull } else { points };
    let mut best: Option<Rect> = None;
    let n = if hull.len() >= 3 { hull.len() } else { 1 };
    for i in 0..n {
        let dir = if hull.len() >= 3 {
            let e = hull[(i + 1) % hull.len()] - hull[i];
            let norm = e.norm();
            if norm == 0.0 {
                continue;
            }
            e / norm
        } else {
            Vector2::new(1.0, 0.0)
        };
        let perp = Vector2::new(-dir.y, dir.x);
        let (mut lo1, mut hi1) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut lo2, mut hi2) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in scan {
            let d1 = dir.dot(&p.coords);
            let d2 = perp.dot(&p.coords);
            lo1 = lo1.min(d1);
            hi1 = hi1.max(d1);
            lo2 = lo2.min(d2);
            hi2 = hi2.max(d2);
        }
        let area = (hi1 - lo1) * (hi2 - lo2);
        if best.as_ref().is_none_or(|b| area < b.area) {
            best = Some(Rect {
                dir,
                lo1,
                hi1,
                lo2,
                hi2,
                area,
            });
        }
    }
    best.expect("at least one direction is scanned")
}

/// Deterministic orthonormal basis of the plane perpendicular to `w`.
fn orthonormal_complement(w: &UnitVector3<f64>) -> (UnitVector3<f64>, UnitVector3<f64>) {
    let seed = if w.x.abs() <= w.y.abs() && w.x.abs() <= w.z.abs() {
        Vector3::x()
    } else if w.y.abs() <= w.z.abs() {
        Vector3::y()
    } else {
        Vector3::z()
    };
    let u = Unit::new_normalize(w.cross(&seed));
    let v = Unit::new_normalize(w.cross(&u));
    (u, v)
}

/// Rotation matrix whose columns are the box axes, handy for mapping points
/// into box coordinates in tests.
pub fn axes_matrix(b: &OrientedBox) -> Matrix3<f64> {
    Matrix3::from_columns(&[
        b.axes()[0].into_inner(),
        b.axes()[1].into_inner(),
        b.axes()[2].into_inner(),
    ])
}
