//! Silhouette rendering and boundary tracing.
//!
//! A mesh is projected through a view camera onto a binary raster; the
//! outline of the largest foreground component is traced at the 0.5
//! iso-level into a polygon ready for 2D shape measurement.

use crate::mesh::TriangleMesh;
use crate::polygon::SilhouettePolygon;
use crate::sfm::CameraParams;
use nalgebra::{Point2, Point3, Unit, UnitVector3, Vector3};
use std::collections::HashMap;
use thiserror::Error;

/// Rasters smaller than this per side are refused.
pub const MIN_RESOLUTION: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SilhouetteError {
    #[error("resolution {width}x{height} is below the minimum of {MIN_RESOLUTION} per side")]
    ResolutionTooSmall { width: usize, height: usize },
    #[error("view direction has zero length")]
    ZeroDirection,
    #[error("camera is invalid: {0}")]
    BadCamera(String),
    #[error("mesh has no faces")]
    EmptyMesh,
    #[error("mesh does not project fully inside the image frame")]
    OutOfFrame,
    #[error("mask has no foreground pixels")]
    NoForeground,
    #[error("mask is {expected} pixels but {actual} values were provided")]
    MaskSizeMismatch { expected: usize, actual: usize },
    #[error("polygon needs at least {required} vertices, got {actual}")]
    TooFewVertices { required: usize, actual: usize },
    #[error("polygon is self-intersecting")]
    SelfIntersecting,
    #[error("polygon has zero area")]
    DegeneratePolygon,
    #[error("expected a positive value, got {0}")]
    NonPositiveInput(f64),
    #[error("l_max {l_max} is smaller than l_min {l_min}")]
    OrderViolation { l_max: f64, l_min: f64 },
}

/// A view onto the scene: parallel projection with a physical pixel pitch,
/// or a full pinhole camera.
#[derive(Debug, Clone, PartialEq)]
pub enum ViewCamera {
    Orthographic {
        right: UnitVector3<f64>,
        up: UnitVector3<f64>,
        width: usize,
        height: usize,
        /// Physical length of one pixel, same unit as the mesh.
        pixel_pitch: f64,
        /// Plane coordinates mapped to the image center.
        center: Point2<f64>,
    },
    Pinhole {
        params: CameraParams,
        width: usize,
        height: usize,
    },
}

impl ViewCamera {
    /// Parallel projection along `direction`. The image x axis is chosen
    /// perpendicular to world z (falling back to world y for near-vertical
    /// directions), so turntable views keep the horizon level.
    pub fn orthographic(
        direction: Vector3<f64>,
        width: usize,
        height: usize,
        pixel_pitch: f64,
        center: Point2<f64>,
    ) -> Result<Self, SilhouetteError> {
        check_resolution(width, height)?;
        if pixel_pitch.is_nan() || pixel_pitch <= 0.0 {
            return Err(SilhouetteError::NonPositiveInput(pixel_pitch));
        }
        let dir = Unit::try_new(direction, 1e-12).ok_or(SilhouetteError::ZeroDirection)?;
        let up_hint = if dir.z.abs() > 1.0 - 1e-9 {
            Vector3::y()
        } else {
            Vector3::z()
        };
        let right = Unit::new_normalize(dir.cross(&up_hint));
        let up = Unit::new_normalize(right.cross(&dir));
        Ok(ViewCamera::Orthographic {
            right,
            up,
            width,
            height,
            pixel_pitch,
            center,
        })
    }

    /// Parallel projection along `direction`, framed so the given points
    /// fill the image minus a relative margin on each side.
    pub fn fitted_orthographic(
        direction: Vector3<f64>,
        width: usize,
        height: usize,
        points: &[Point3<f64>],
        margin: f64,
    ) -> Result<Self, SilhouetteError> {
        if !(0.0..0.5).contains(&margin) {
            return Err(SilhouetteError::BadCamera(format!(
                "margin {margin} must lie in [0, 0.5)"
            )));
        }
        let probe = ViewCamera::orthographic(direction, width, height, 1.0, Point2::origin())?;
        let ViewCamera::Orthographic { right, up, .. } = &probe else {
            unreachable!()
        };
        let (mut lo_x, mut hi_x) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut lo_y, mut hi_y) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in points {
            let x = right.dot(&p.coords);
            let y = up.dot(&p.coords);
            lo_x = lo_x.min(x);
            hi_x = hi_x.max(x);
            lo_y = lo_y.min(y);
            hi_y = hi_y.max(y);
        }
        let span_x = hi_x - lo_x;
        let span_y = hi_y - lo_y;
        let span = span_x.max(span_y);
        if span.is_nan() || span <= 0.0 {
            return Err(SilhouetteError::NonPositiveInput(span));
        }
        let usable = 1.0 - 2.0 * margin;
        let pitch = (span_x / (width as f64 * usable)).max(span_y / (height as f64 * usable));
        let center = Point2::new((lo_x + hi_x) / 2.0, (lo_y + hi_y) / 2.0);
        ViewCamera::orthographic(direction, width, height, pitch, center)
    }

    pub fn pinhole(
        params: CameraParams,
        width: usize,
        height: usize,
    ) -> Result<Self, SilhouetteError> {
        check_resolution(width, height)?;
        params
            .validate()
            .map_err(|e| SilhouetteError::BadCamera(e.to_string()))?;
        Ok(ViewCamera::Pinhole {
            params,
            width,
            height,
        })
    }

    pub fn resolution(&self) -> (usize, usize) {
        match self {
            ViewCamera::Orthographic { width, height, .. }
            | ViewCamera::Pinhole { width, height, .. } => (*width, *height),
        }
    }

    /// Projects a point to pixel coordinates, pixel centers at integers.
    fn project(&self, p: &Point3<f64>) -> Result<Point2<f64>, SilhouetteError> {
        match self {
            ViewCamera::Orthographic {
                right,
                up,
                width,
                height,
                pixel_pitch,
                center,
            } => {
                let x =
                    (right.dot(&p.coords) - center.x) / pixel_pitch + (*width as f64 - 1.0) / 2.0;
                let y = (up.dot(&p.coords) - center.y) / pixel_pitch + (*height as f64 - 1.0) / 2.0;
                Ok(Point2::new(x, y))
            }
            ViewCamera::Pinhole { params, .. } => {
                let u = params.rotation_matrix() * p.coords + params.translation;
                if u.z <= 1e-12 {
                    return Err(SilhouetteError::OutOfFrame);
                }
                Ok(Point2::new(
                    params.focal_px * u.x / u.z + params.principal_point.x,
                    params.focal_px * u.y / u.z + params.principal_point.y,
                ))
            }
        }
    }
}

fn check_resolution(width: usize, height: usize) -> Result<(), SilhouetteError> {
    if width < MIN_RESOLUTION || height < MIN_RESOLUTION {
        return Err(SilhouetteError::ResolutionTooSmall { width, height });
    }
    Ok(())
}

/// View directions for `n` evenly spaced azimuths at a fixed elevation,
/// each pointing from the camera position toward the origin.
pub fn turntable_directions(n_views: usize, elevation_deg: f64) -> Vec<UnitVector3<f64>> {
    let el = elevation_deg.to_radians();
    (0..n_views)
        .map(|k| {
            let az = 2.0 * std::f64::consts::PI * k as f64 / n_views as f64;
            Unit::new_normalize(Vector3::new(
                -az.cos() * el.cos(),
                -az.sin() * el.cos(),
                -el.sin(),
            ))
        })
        .collect()
}

/// A binary image: `true` pixels are foreground.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterMask {
    width: usize,
    height: usize,
    pixels: Vec<bool>,
    pixel_pitch: Option<f64>,
}

impl RasterMask {
    pub fn from_pixels(
        width: usize,
        height: usize,
        pixels: Vec<bool>,
        pixel_pitch: Option<f64>,
    ) -> Result<Self, SilhouetteError> {
        if pixels.len() != width * height {
            return Err(SilhouetteError::MaskSizeMismatch {
                expected: width * height,
                actual: pixels.len(),
            });
        }
        if let Some(pitch) = pixel_pitch {
            if pitch.is_nan() || pitch <= 0.0 {
                return Err(SilhouetteError::NonPositiveInput(pitch));
            }
        }
        Ok(RasterMask {
            width,
            height,
            pixels,
            pixel_pitch,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Physical length of one pixel if the mask came from a calibrated or
    /// orthographic view.
    pub fn pixel_pitch(&self) -> Option<f64> {
        self.pixel_pitch
    }

    pub fn pixels(&self) -> &[bool] {
        &self.pixels
    }

    pub fn is_foreground(&self, x: usize, y: usize) -> bool {
        self.pixels[y * self.width + x]
    }

    pub fn foreground_count(&self) -> usize {
        self.pixels.iter().filter(|&&p| p).count()
    }
}

/// Rasterizes the mesh silhouette: a pixel is foreground when its center
/// lies inside at least one projected face.
pub fn render_silhouette(
    mesh: &TriangleMesh,
    camera: &ViewCamera,
) -> Result<RasterMask, SilhouetteError> {
    if mesh.faces().is_empty() {
        return Err(SilhouetteError::EmptyMesh);
    }
    let (width, height) = camera.resolution();
    let projected: Vec<Point2<f64>> = mesh
        .vertices()
        .iter()
        .map(|p| camera.project(p))
        .collect::<Result<_, _>>()?;
    for p in &projected {
        if p.x < -0.5 || p.x > width as f64 - 0.5 || p.y < -0.5 || p.y > height as f64 - 0.5 {
            return Err(SilhouetteError::OutOfFrame);
        }
    }

    let mut pixels = vec![false; width * height];
    for face in mesh.faces() {
        let (a, b, c) = (projected[face[0]], projected[face[1]], projected[face[2]]);
        let area2 = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
        if area2 == 0.0 {
            continue;
        }
        let sign = area2.signum();
        let min_x = a.x.min(b.x).min(c.x).ceil().max(0.0) as usize;
        let max_x = a.x.max(b.x).max(c.x).floor().min(width as f64 - 1.0) as usize;
        let min_y = a.y.min(b.y).min(c.y).ceil().max(0.0) as usize;
        let max_y = a.y.max(b.y).max(c.y).floor().min(height as f64 - 1.0) as usize;
        for y in min_y..=max_y {
            let py = y as f64;
            for x in min_x..=max_x {
                let px = x as f64;
                let e0 = sign * ((b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x));
                let e1 = sign * ((c.x - b.x) * (py - b.y) - (c.y - b.y) * (px - b.x));
                let e2 = sign * ((a.x - c.x) * (py - c.y) - (a.y - c.y) * (px - c.x));
                if e0 >= 0.0 && e1 >= 0.0 && e2 >= 0.0 {
                    pixels[y * width + x] = true;
                }
            }
        }
    }

    let pitch = match camera {
        ViewCamera::Orthographic { pixel_pitch, .. } => Some(*pixel_pitch),
        ViewCamera::Pinhole { .. } => None,
    };
    RasterMask::from_pixels(width, height, pixels, pitch)
}

/// A directed contour segment between two grid vertices, in doubled pixel
/// coordinates.
type GridSegment = ((i64, i64), (i64, i64));

/// Traces the outline of the largest 4-connected foreground component by
/// marching squares at the 0.5 iso-level.
///
/// Contour vertices sit on midpoints between pixel centers. Saddle cells
/// keep diagonal pixel pairs disconnected, so the traced loop is always
/// simple. Coordinates are pixels, scaled by the pixel pitch when the mask
/// has one.
pub fn trace_boundary(mask: &RasterMask) -> Result<SilhouettePolygon, SilhouetteError> {
    let component = largest_component(mask).ok_or(SilhouetteError::NoForeground)?;
    let w = mask.width() as i64;
    let h = mask.height() as i64;
    let fg = |x: i64, y: i64| -> bool {
        x >= 0 && y >= 0 && x < w && y < h && component[(y * w + x) as usize]
    };

    // Directed segments between edge midpoints, in doubled coordinates so
    // every vertex is an exact integer pair.
    let mut next: HashMap<(i64, i64), (i64, i64)> = HashMap::new();
    for y in -1..h {
        for x in -1..w {
            let bl = fg(x, y);
            let br = fg(x + 1, y);
            let tr = fg(x + 1, y + 1);
            let tl = fg(x, y + 1);
            let case = usize::from(bl)
                | usize::from(br) << 1
                | usize::from(tr) << 2
                | usize::from(tl) << 3;
            let bottom = (2 * x + 1, 2 * y);
            let right = (2 * x + 2, 2 * y + 1);
            let top = (2 * x + 1, 2 * y + 2);
            let left = (2 * x, 2 * y + 1);
            let segments: &[GridSegment] = match case {
                1 => &[(bottom, left)],
                2 => &[(right, bottom)],
                3 => &[(right, left)],
                4 => &[(top, right)],
                5 => &[(bottom, left), (top, right)],
                6 => &[(top, bottom)],
                7 => &[(top, left)],
                8 => &[(left, top)],
                9 => &[(bottom, top)],
                10 => &[(right, bottom), (left, top)],
                11 => &[(right, top)],
                12 => &[(left, right)],
                13 => &[(bottom, right)],
                14 => &[(left, bottom)],
                _ => &[],
            };
            for &(from, to) in segments {
                next.insert(from, to);
            }
        }
    }

    let mut starts: Vec<(i64, i64)> = next.keys().copied().collect();
    starts.sort_unstable();
    let mut visited: HashMap<(i64, i64), bool> = HashMap::new();
    let mut best: Option<(f64, Vec<(i64, i64)>)> = None;
    for &start in &starts {
        if visited.contains_key(&start) {
            continue;
        }
        let mut loop_vertices = Vec::new();
        let mut cursor = start;
        loop {
            visited.insert(cursor, true);
            loop_vertices.push(cursor);
            cursor = next[&cursor];
            if cursor == start {
                break;
            }
        }
        let mut twice_area = 0i64;
        for i in 0..loop_vertices.len() {
            let p = loop_vertices[i];
            let q = loop_vertices[(i + 1) % loop_vertices.len()];
            twice_area += p.0 * q.1 - q.0 * p.1;
        }
        let area = twice_area.abs() as f64;
        if best.as_ref().is_none_or(|(a, _)| area > *a) {
            best = Some((area, loop_vertices));
        }
    }
    let (_, outline) = best.ok_or(SilhouetteError::NoForeground)?;

    let scale = mask.pixel_pitch().unwrap_or(1.0);
    let vertices = outline
        .into_iter()
        .map(|(x, y)| Point2::new(x as f64 / 2.0 * scale, y as f64 / 2.0 * scale))
        .collect();
    Ok(SilhouettePolygon::from_traced(vertices))
}

/// Pixel set of the largest 4-connected foreground component, or `None`
/// when the mask is all background. Ties break toward the component found
/// first in row-major scan order.
fn largest_component(mask: &RasterMask) -> Option<Vec<bool>> {
    let w = mask.width();
    let h = mask.height();
    let mut label = vec![usize::MAX; w * h];
    let mut sizes: Vec<usize> = Vec::new();
    for start in 0..w * h {
        if !mask.pixels()[start] || label[start] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        let mut size = 0usize;
        let mut stack = vec![start];
        label[start] = id;
        while let Some(i) = stack.pop() {
            size += 1;
            let (x, y) = (i % w, i / w);
            let mut push = |nx: usize, ny: usize| {
                let j = ny * w + nx;
                if mask.pixels()[j] && label[j] == usize::MAX {
                    label[j] = id;
                    stack.push(j);
                }
            };
            if x > 0 {
                push(x - 1, y);
            }
            if x + 1 < w {
                push(x + 1, y);
            }
            if y > 0 {
                push(x, y - 1);
            }
            if y + 1 < h {
                push(x, y + 1);
            }
        }
        sizes.push(size);
    }
    let biggest = sizes
        .iter()
        .enumerate()
        .max_by_key(|&(i, &s)| (s, usize::MAX - i))?;
    let keep = biggest.0;
    Some(label.iter().map(|&l| l == keep).collect())
}
