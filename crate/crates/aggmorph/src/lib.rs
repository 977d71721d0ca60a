//! Geometry and statistics for aggregate particle morphology studies.
//!
//! The crate covers the post-processing half of a photogrammetry pipeline:
//! validated triangle meshes and their bulk measurements, minimum-volume
//! oriented boxes, silhouette rasterization and 2D shape descriptors,
//! marker-based cloud registration and scale calibration, masked bundle
//! adjustment with synthetic turntable scenes, and the summary statistics
//! that compare 2D and 3D shape indicators.
//!
//! All lengths are unit-agnostic; callers pick a unit (centimeters in the
//! shipped pipeline) and every area, volume, and diameter follows from it.
//! Dimensionless ratios never depend on the unit choice.

pub mod hull;
pub mod mesh;
pub mod obb;
pub mod polygon;
pub mod registration;
pub mod report;
pub mod sfm;
pub mod shapes;
pub mod silhouette;

pub use hull::convex_hull;
pub use mesh::{caliper_diameter, GeometryError, TriangleMesh};
pub use obb::{fer_3d, min_volume_obb, sphericity_3d, OrientedBox};
pub use polygon::{circularity_2d, fer_2d, max_feret, min_feret_perp, SilhouettePolygon};
pub use registration::{estimate_similarity, SimilarityTransform};
pub use report::{Morphology3d, MorphologyRecord};
pub use sfm::{bundle_adjust, masked_error, total_error, SfmScene};
pub use silhouette::{render_silhouette, trace_boundary, RasterMask, SilhouetteError, ViewCamera};
