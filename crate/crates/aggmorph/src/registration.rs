//! Marker-based registration: triangulating labeled markers, similarity
//! estimation between clouds, label-matched stitching, and metric scale
//! calibration from known marker separations.

use crate::mesh::bbox_diagonal;
use nalgebra::{DMatrix, Matrix3, Matrix3x4, Point2, Point3, Vector3};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

/// Rays closer to parallel than this angle (radians) make triangulation
/// ill-conditioned.
pub const MIN_RAY_ANGLE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegistrationError {
    #[error("need {required} distinct views, got {actual}")]
    InsufficientViews { required: usize, actual: usize },
    #[error("annotation references view {view}, but only {view_count} cameras were given")]
    UnknownView { view: usize, view_count: usize },
    #[error("annotations mix labels or roles: expected {expected}, found {found}")]
    LabelMismatch { expected: String, found: String },
    #[error("viewing rays are ill-conditioned (max pairwise angle {angle:.3e} rad)")]
    IllConditioned { angle: f64 },
    #[error("correspondences are degenerate: {0}")]
    Degenerate(String),
    #[error("source has {source_count} points, target has {target_count}")]
    CountMismatch {
        source_count: usize,
        target_count: usize,
    },
    #[error("marker label {0} appears more than once in one set")]
    DuplicateLabel(ColorLabel),
    #[error("marker sets share no labels")]
    DisjointLabels,
    #[error("only {actual} correspondence point(s); stitching needs {required}")]
    InsufficientCorrespondences { required: usize, actual: usize },
    #[error("marker {0} has coincident head and tail")]
    DegenerateMarker(ColorLabel),
    #[error("no marker carries label {0}")]
    MissingLabel(ColorLabel),
    #[error("markers {a} and {b} coincide; their distance cannot calibrate scale")]
    ZeroLocalDistance { a: ColorLabel, b: ColorLabel },
    #[error("known distance between {a} and {b} is {value}, must be positive")]
    InvalidKnownDistance {
        a: ColorLabel,
        b: ColorLabel,
        value: f64,
    },
    #[error("no known distances were provided")]
    NoKnownDistances,
    #[error("transform is invalid: {0}")]
    InvalidTransform(String),
}

/// Color tag identifying a physical marker. Compared case-insensitively by
/// storing lowercase.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ColorLabel(String);

impl ColorLabel {
    pub fn new(name: &str) -> Self {
        ColorLabel(name.trim().to_lowercase())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ColorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<&str> for ColorLabel {
    fn from(s: &str) -> Self {
        ColorLabel::new(s)
    }
}

/// Which end of a pin marker an annotation refers to; plain spherical
/// markers use `Center`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MarkerRole {
    Head,
    Tail,
    Center,
}

impl fmt::Display for MarkerRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MarkerRole::Head => write!(f, "head"),
            MarkerRole::Tail => write!(f, "tail"),
            MarkerRole::Center => write!(f, "center"),
        }
    }
}

/// A pin pushed into the object: two distinguishable ends.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectMarker {
    pub label: ColorLabel,
    pub head: Point3<f64>,
    pub tail: Point3<f64>,
}

/// A fixed marker in the scene background, used for scale calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundMarker {
    pub label: ColorLabel,
    pub position: Point3<f64>,
}

/// Physically measured separation between two background markers.
#[derive(Debug, Clone, PartialEq)]
pub struct KnownDistance {
    pub a: ColorLabel,
    pub b: ColorLabel,
    pub distance: f64,
}

/// One 2D sighting of a marker in one view.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkerAnnotation {
    pub view: usize,
    pub label: ColorLabel,
    pub role: MarkerRole,
    pub pixel: Point2<f64>,
}

/// Triangulated marker position with its reprojection quality.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizedMarker {
    pub position: Point3<f64>,
    pub rms_residual_px: f64,
}

/// Triangulates one marker from pixel annotations via the direct linear
/// transform, checking that the viewing rays are well separated.
///
/// All annotations must carry the same label and role; `cameras[view]` is
/// the projection matrix for annotation `view`.
pub fn localize_marker(
    annotations: &[MarkerAnnotation],
    cameras: &[Matrix3x4<f64>],
) -> Result<LocalizedMarker, RegistrationError> {
    let Some(first) = annotations.first() else {
        return Err(RegistrationError::InsufficientViews {
            required: 2,
            actual: 0,
        });
    };
    for a in annotations {
        if a.label != first.label || a.role != first.role {
            return Err(RegistrationError::LabelMismatch {
                expected: format!("{} {}", first.label, first.role),
                found: format!("{} {}", a.label, a.role),
            });
        }
        if a.view >= cameras.len() {
            return Err(RegistrationError::UnknownView {
                view: a.view,
                view_count: cameras.len(),
            });
        }
    }
    let mut views: Vec<usize> = annotations.iter().map(|a| a.view).collect();
    views.sort_unstable();
    views.dedup();
    if views.len() < 2 {
        return Err(RegistrationError::InsufficientViews {
            required: 2,
            actual: views.len(),
        });
    }

    let max_angle = max_ray_angle(annotations, cameras);
    if max_angle < MIN_RAY_ANGLE {
        return Err(RegistrationError::IllConditioned { angle: max_angle });
    }

    let mut design = DMatrix::zeros(2 * annotations.len(), 4);
    for (i, a) in annotations.iter().enumerate() {
        let p = &cameras[a.view];
        for c in 0..4 {
            design[(2 * i, c)] = a.pixel.x * p[(2, c)] - p[(0, c)];
            design[(2 * i + 1, c)] = a.pixel.y * p[(2, c)] - p[(1, c)];
        }
    }
    let svd = design.svd(false, true);
    let v_t = svd.v_t.expect("svd was requested with v_t");
    let h = v_t.row(v_t.nrows() - 1);
    if h[3].abs() <= 1e-12 * h.amax() {
        return Err(RegistrationError::IllConditioned { angle: max_angle });
    }
    let position = Point3::new(h[0] / h[3], h[1] / h[3], h[2] / h[3]);

    let mut sq_sum = 0.0;
    for a in annotations {
        let hp = cameras[a.view] * position.to_homogeneous();
        let px = Point2::new(hp.x / hp.z, hp.y / hp.z);
        sq_sum += (px - a.pixel).norm_squared();
    }
    Ok(LocalizedMarker {
        position,
        rms_residual_px: (sq_sum / annotations.len() as f64).sqrt(),
    })
}

/// Largest angle between any two back-projected viewing rays.
fn max_ray_angle(annotations: &[MarkerAnnotation], cameras: &[Matrix3x4<f64>]) -> f64 {
    let rays: Vec<Option<Vector3<f64>>> = annotations
        .iter()
        .map(|a| {
            let p = &cameras[a.view];
            let m: Matrix3<f64> = p.fixed_view::<3, 3>(0, 0).into_owned();
            m.try_inverse()
                .map(|mi| (mi * Vector3::new(a.pixel.x, a.pixel.y, 1.0)).normalize())
        })
        .collect();
    let mut max_angle: f64 = 0.0;
    for i in 0..rays.len() {
        for j in (i + 1)..rays.len() {
            if let (Some(a), Some(b)) = (&rays[i], &rays[j]) {
                max_angle = max_angle.max(a.dot(b).clamp(-1.0, 1.0).acos());
            }
        }
    }
    max_angle
}

/// Rotation, uniform scale, and translation mapping source points onto
/// target points: `x -> scale * R * x + t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityTransform {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
    scale: f64,
}

impl SimilarityTransform {
    /// The rotation must be orthonormal with determinant +1 (to 1e-9) and
    /// the scale strictly positive.
    pub fn new(
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
        scale: f64,
    ) -> Result<Self, RegistrationError> {
        let drift = (rotation.transpose() * rotation - Matrix3::identity()).amax();
        if drift > 1e-9 {
            return Err(RegistrationError::InvalidTransform(format!(
                "rotation deviates from orthonormal by {drift:.3e}"
            )));
        }
        if rotation.determinant() < 0.0 {
            return Err(RegistrationError::InvalidTransform(
                "rotation is a reflection".to_string(),
            ));
        }
        if scale.is_nan() || scale <= 0.0 {
            return Err(RegistrationError::InvalidTransform(format!(
                "scale {scale} must be positive"
            )));
        }
        Ok(SimilarityTransform {
            rotation,
            translation,
            scale,
        })
    }

    pub fn identity() -> Self {
        SimilarityTransform {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
            scale: 1.0,
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn apply(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.scale * (self.rotation * p.coords) + self.translation)
    }

    pub fn inverse(&self) -> SimilarityTransform {
        let rotation = self.rotation.transpose();
        let scale = 1.0 / self.scale;
        SimilarityTransform {
            rotation,
            translation: -scale * (rotation * self.translation),
            scale,
        }
    }

    /// `self` applied after `inner`.
    pub fn compose(&self, inner: &SimilarityTransform) -> SimilarityTransform {
        SimilarityTransform {
            rotation: self.rotation * inner.rotation,
            translation: self.scale * (self.rotation * inner.translation) + self.translation,
            scale: self.scale * inner.scale,
        }
    }
}

/// Transforms a whole cloud.
pub fn apply_similarity(t: &SimilarityTransform, cloud: &[Point3<f64>]) -> Vec<Point3<f64>> {
    cloud.iter().map(|p| t.apply(p)).collect()
}

/// Least-squares similarity between paired point sets (Umeyama's method)
/// and the RMS alignment residual after applying it.
pub fn estimate_similarity(
    source: &[Point3<f64>],
    target: &[Point3<f64>],
) -> Result<(SimilarityTransform, f64), RegistrationError> {
    if source.len() != target.len() {
        return Err(RegistrationError::CountMismatch {
            source_count: source.len(),
            target_count: target.len(),
        });
    }
    let n = source.len();
    if n < 3 {
        return Err(RegistrationError::Degenerate(format!(
            "{n} correspondence(s); need at least 3"
        )));
    }

    let mean_s = source
        .iter()
        .fold(Vector3::zeros(), |acc, p| acc + p.coords)
        / n as f64;
    let mean_t = target
        .iter()
        .fold(Vector3::zeros(), |acc, p| acc + p.coords)
        / n as f64;

    let mut covariance = Matrix3::zeros();
    let mut var_s = 0.0;
    for (s, t) in source.iter().zip(target) {
        let sc = s.coords - mean_s;
        let tc = t.coords - mean_t;
        covariance += tc * sc.transpose();
        var_s += sc.norm_squared();
    }
    covariance /= n as f64;
    var_s /= n as f64;

    // Collinear sources leave a one-parameter family of rotations.
    let scatter_svd = {
        let mut m = DMatrix::zeros(3, n);
        for (k, s) in source.iter().enumerate() {
            m.set_column(k, &(s.coords - mean_s));
        }
        m.svd(false, false)
    };
    let sv = scatter_svd.singular_values;
    if sv[0] <= 0.0 || sv[1] / sv[0] < 1e-9 {
        return Err(RegistrationError::Degenerate(
            "source points are collinear".to_string(),
        ));
    }

    let svd = covariance.svd(true, true);
    let u = svd.u.expect("svd was requested with u");
    let v_t = svd.v_t.expect("svd was requested with v_t");
    let mut s_fix = Matrix3::identity();
    if (u * v_t).determinant() < 0.0 {
        s_fix[(2, 2)] = -1.0;
    }
    let rotation = u * s_fix * v_t;
    let scale =
        (svd.singular_values[0] + svd.singular_values[1] + svd.singular_values[2] * s_fix[(2, 2)])
            / var_s;
    if !scale.is_finite() || scale <= 0.0 {
        return Err(RegistrationError::Degenerate(format!(
            "estimated scale {scale} is not positive"
        )));
    }
    let translation = mean_t - scale * (rotation * mean_s);
    let transform = SimilarityTransform::new(rotation, translation, scale)?;

    let mut sq = 0.0;
    for (s, t) in source.iter().zip(target) {
        sq += (transform.apply(s).coords - t.coords).norm_squared();
    }
    Ok((transform, (sq / n as f64).sqrt()))
}

/// Alignment residual of one marker end after stitching.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkerResidual {
    pub label: ColorLabel,
    pub role: MarkerRole,
    pub distance: f64,
}

/// Two partial clouds merged into the frame of the first.
#[derive(Debug, Clone, PartialEq)]
pub struct Stitched {
    /// Cloud A followed by transformed cloud B.
    pub cloud: Vec<Point3<f64>>,
    /// Maps cloud B coordinates into cloud A's frame.
    pub transform: SimilarityTransform,
    pub marker_rms: f64,
    pub per_marker: Vec<MarkerResidual>,
}

/// Merges two partial reconstructions of one object, matching pin markers
/// by color label: both ends of every shared label become correspondence
/// points for the similarity fit.
pub fn stitch(
    cloud_a: &[Point3<f64>],
    cloud_b: &[Point3<f64>],
    markers_a: &[ObjectMarker],
    markers_b: &[ObjectMarker],
) -> Result<Stitched, RegistrationError> {
    let map_a = index_markers(markers_a, cloud_a)?;
    let map_b = index_markers(markers_b, cloud_b)?;

    let mut correspondences: Vec<(ColorLabel, MarkerRole, Point3<f64>, Point3<f64>)> = Vec::new();
    for (label, ma) in &map_a {
        if let Some(mb) = map_b.get(label) {
            correspondences.push(((*label).clone(), MarkerRole::Head, mb.head, ma.head));
            correspondences.push(((*label).clone(), MarkerRole::Tail, mb.tail, ma.tail));
        }
    }
    if correspondences.is_empty() {
        return Err(RegistrationError::DisjointLabels);
    }
    if correspondences.len() < 3 {
        return Err(RegistrationError::InsufficientCorrespondences {
            required: 3,
            actual: correspondences.len(),
        });
    }

    let source: Vec<Point3<f64>> = correspondences.iter().map(|c| c.2).collect();
    let target: Vec<Point3<f64>> = correspondences.iter().map(|c| c.3).collect();
    let (transform, marker_rms) = estimate_similarity(&source, &target)?;

    let mut cloud = cloud_a.to_vec();
    cloud.extend(apply_similarity(&transform, cloud_b));
    let per_marker = correspondences
        .iter()
        .map(|(label, role, b, a)| MarkerResidual {
            label: label.clone(),
            role: *role,
            distance: (transform.apply(b).coords - a.coords).norm(),
        })
        .collect();
    Ok(Stitched {
        cloud,
        transform,
        marker_rms,
        per_marker,
    })
}

/// Label-keyed marker lookup; rejects duplicate labels and markers whose
/// ends coincide relative to the cloud size.
fn index_markers<'m>(
    markers: &'m [ObjectMarker],
    cloud: &[Point3<f64>],
) -> Result<BTreeMap<&'m ColorLabel, &'m ObjectMarker>, RegistrationError> {
    let diameter = bbox_diagonal(cloud);
    let mut map = BTreeMap::new();
    for m in markers {
        let pin_length = (m.head - m.tail).norm();
        if pin_length <= 1e-9 * diameter {
            return Err(RegistrationError::DegenerateMarker(m.label.clone()));
        }
        if map.insert(&m.label, m).is_some() {
            return Err(RegistrationError::DuplicateLabel(m.label.clone()));
        }
    }
    Ok(map)
}

/// Residual of one known distance after scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceResidual {
    pub a: ColorLabel,
    pub b: ColorLabel,
    pub known: f64,
    pub local: f64,
    /// `known - scale * local`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleCalibration {
    /// Physical units per local unit.
    pub scale: f64,
    pub residuals: Vec<DistanceResidual>,
}

/// Least-squares metric scale from known marker separations: minimizes
/// `sum (known_i - s * local_i)^2` over `s`.
pub fn calibrate_scale(
    markers: &[BackgroundMarker],
    known: &[KnownDistance],
) -> Result<ScaleCalibration, RegistrationError> {
    if known.is_empty() {
        return Err(RegistrationError::NoKnownDistances);
    }
    let mut positions: BTreeMap<&ColorLabel, Point3<f64>> = BTreeMap::new();
    for m in markers {
        if positions.insert(&m.label, m.position).is_some() {
            return Err(RegistrationError::DuplicateLabel(m.label.clone()));
        }
    }

    let mut num = 0.0;
    let mut den = 0.0;
    let mut pairs = Vec::with_capacity(known.len());
    for k in known {
        if k.distance.is_nan() || k.distance <= 0.0 {
            return Err(RegistrationError::InvalidKnownDistance {
                a: k.a.clone(),
                b: k.b.clone(),
                value: k.distance,
            });
        }
        let pa = positions
            .get(&k.a)
            .ok_or_else(|| RegistrationError::MissingLabel(k.a.clone()))?;
        let pb = positions
            .get(&k.b)
            .ok_or_else(|| RegistrationError::MissingLabel(k.b.clone()))?;
        let local = (pa - pb).norm();
        if local <= 0.0 {
            return Err(RegistrationError::ZeroLocalDistance {
                a: k.a.clone(),
                b: k.b.clone(),
            });
        }
        num += k.distance * local;
        den += local * local;
        pairs.push((k, local));
    }
    let scale = num / den;
    let residuals = pairs
        .into_iter()
        .map(|(k, local)| DistanceResidual {
            a: k.a.clone(),
            b: k.b.clone(),
            known: k.distance,
            local,
            residual: k.distance - scale * local,
        })
        .collect();
    Ok(ScaleCalibration { scale, residuals })
}
