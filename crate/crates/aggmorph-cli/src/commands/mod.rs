//! Argument definitions and dispatch for the `aggmorph` tool, plus the
//! measurement helpers shared between subcommands.

pub mod analyze_masks;
pub mod analyze_mesh;
pub mod ba;
pub mod calibrate;
pub mod compare;
pub mod run;
pub mod silhouettes;
pub mod stitch;
pub mod synth_scene;
pub mod validate;

use crate::error::CliError;
use crate::io::csvio::csv_row;
use crate::io::{atomic_write, fmt_f64};
use crate::manifest::Units;
use aggmorph::polygon::{circularity_2d, fer_2d, max_feret, min_feret_perp, polygon_metrics};
use aggmorph::silhouette::{render_silhouette, trace_boundary, turntable_directions, ViewCamera};
use aggmorph::{RasterMask, TriangleMesh};
use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "aggmorph",
    version,
    about = "Morphology analysis for photogrammetric aggregate reconstructions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Volume, surface area, box dimensions, and shape ratios of a mesh
    AnalyzeMesh {
        /// OBJ or PLY mesh file
        mesh: PathBuf,
        /// Unit of the mesh coordinates
        #[arg(long, value_enum, default_value = "cm")]
        units: Units,
        /// Write the JSON here instead of standard output
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Per-view 2D shape metrics from synthetic turntable silhouettes
    Silhouettes {
        /// OBJ or PLY mesh file
        mesh: PathBuf,
        /// Number of views around the turntable
        #[arg(long, default_value_t = 12)]
        views: usize,
        /// Camera elevation above the horizon in degrees
        #[arg(long, default_value_t = 35.0)]
        elevation: f64,
        /// Rendered image width and height in pixels
        #[arg(long, default_value_t = 1024)]
        resolution: usize,
        /// Write the CSV here instead of standard output
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// 2D shape metrics of every PGM mask in a directory
    AnalyzeMasks {
        /// Directory of .pgm masks
        dir: PathBuf,
        /// Physical size of one pixel in centimeters
        #[arg(long)]
        pixel_pitch: Option<f64>,
        /// Write the CSV here instead of standard output
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Merge two partial clouds by their shared pin markers
    Stitch {
        /// Point cloud of the first scan (PLY or OBJ)
        cloud_a: PathBuf,
        /// Point cloud of the second scan (PLY or OBJ)
        cloud_b: PathBuf,
        /// Marker file with one partials entry per cloud
        #[arg(long)]
        markers: PathBuf,
        /// Where to write the merged cloud
        #[arg(long, default_value = "merged.ply")]
        output: PathBuf,
    },
    /// Metric scale from background markers with known separations
    Calibrate {
        /// Marker file with background markers
        #[arg(long)]
        markers: PathBuf,
        /// Known distances JSON
        #[arg(long)]
        distances: PathBuf,
        /// Optional cloud to rescale with the estimated factor
        #[arg(long)]
        apply: Option<PathBuf>,
        /// Where to write the rescaled cloud (required with --apply)
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Refine a scene with masked bundle adjustment
    Ba {
        /// Scene JSON (bare or wrapped)
        #[arg(long)]
        scene: PathBuf,
        /// Iteration budget
        #[arg(long, default_value_t = 100)]
        max_iters: usize,
        /// Write the refined scene JSON here instead of standard output
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Generate a synthetic turntable scene with ground truth
    SynthScene {
        /// Number of cameras around the turntable
        #[arg(long, default_value_t = 12)]
        views: usize,
        /// Camera elevation above the horizon in degrees
        #[arg(long, default_value_t = 35.0)]
        elevation: f64,
        /// Standard deviation of pixel noise
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Seed for all randomness
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of 3D points
        #[arg(long, default_value_t = 200)]
        points: usize,
        /// Fraction of spurious zero-weight observations to add
        #[arg(long, default_value_t = 0.0)]
        clutter: f64,
        /// Fraction of points genuinely observed per view; must be below 1
        /// to leave room for clutter
        #[arg(long, default_value_t = 1.0)]
        visibility: f64,
        /// Write the scene JSON here instead of standard output
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Volume error statistics over measured/reconstructed pairs
    Validate {
        /// CSV with header sample_id,measured_cm3,reconstructed_cm3
        #[arg(long)]
        pairs: PathBuf,
        /// Write the JSON here instead of standard output
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Cross-sample comparison tables from per-sample records
    Compare {
        /// Directory of per-sample record JSON files
        #[arg(long)]
        records: PathBuf,
        /// Directory for the three CSV tables
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Full pipeline over every sample in a manifest
    Run {
        /// Manifest JSON
        #[arg(long)]
        manifest: PathBuf,
    },
}

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::AnalyzeMesh {
            mesh,
            units,
            output,
        } => analyze_mesh::run(&mesh, units, output.as_deref()),
        Command::Silhouettes {
            mesh,
            views,
            elevation,
            resolution,
            output,
        } => silhouettes::run(&mesh, views, elevation, resolution, output.as_deref()),
        Command::AnalyzeMasks {
            dir,
            pixel_pitch,
            output,
        } => analyze_masks::run(&dir, pixel_pitch, output.as_deref()),
        Command::Stitch {
            cloud_a,
            cloud_b,
            markers,
            output,
        } => stitch::run(&cloud_a, &cloud_b, &markers, &output),
        Command::Calibrate {
            markers,
            distances,
            apply,
            output,
        } => calibrate::run(&markers, &distances, apply.as_deref(), output.as_deref()),
        Command::Ba {
            scene,
            max_iters,
            output,
        } => ba::run(&scene, max_iters, output.as_deref()),
        Command::SynthScene {
            views,
            elevation,
            noise,
            seed,
            points,
            clutter,
            visibility,
            output,
        } => synth_scene::run(
            views,
            elevation,
            noise,
            seed,
            points,
            clutter,
            visibility,
            output.as_deref(),
        ),
        Command::Validate { pairs, output } => validate::run(&pairs, output.as_deref()),
        Command::Compare { records, out_dir } => compare::run(&records, &out_dir),
        Command::Run { manifest } => run::run(&manifest),
    }
}

/// Writes to the file when given, otherwise to standard output.
pub fn emit(output: Option<&Path>, text: &str) -> Result<(), CliError> {
    match output {
        Some(path) => atomic_write(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// 2D measurements of one silhouette, with the raw lengths kept for CSVs.
pub struct ViewMetrics {
    pub label: String,
    pub fer_2d: f64,
    pub circularity: f64,
    pub l_max: f64,
    pub l_min: f64,
    pub area: f64,
    pub perimeter: f64,
}

/// Traces a mask and measures its outline.
pub fn mask_metrics(
    mask: &RasterMask,
    label: &str,
    context: &str,
) -> Result<ViewMetrics, CliError> {
    let poly = trace_boundary(mask).map_err(|e| CliError::invalid(context, e))?;
    let (l_max, angle) = max_feret(&poly);
    let l_min = min_feret_perp(&poly, angle);
    let (area, perimeter) = polygon_metrics(&poly);
    Ok(ViewMetrics {
        label: label.to_string(),
        fer_2d: fer_2d(l_max, l_min).map_err(|e| CliError::invalid(context, e))?,
        circularity: circularity_2d(area, perimeter).map_err(|e| CliError::invalid(context, e))?,
        l_max,
        l_min,
        area,
        perimeter,
    })
}

/// Renders turntable silhouettes of a mesh and measures each view.
pub fn mesh_view_metrics(
    mesh: &TriangleMesh,
    n_views: usize,
    elevation_deg: f64,
    resolution: usize,
    context: &str,
) -> Result<Vec<ViewMetrics>, CliError> {
    let mut rows = Vec::with_capacity(n_views);
    for (view, dir) in turntable_directions(n_views, elevation_deg)
        .iter()
        .enumerate()
    {
        let camera = ViewCamera::fitted_orthographic(
            dir.into_inner(),
            resolution,
            resolution,
            mesh.vertices(),
            0.1,
        )
        .map_err(|e| CliError::invalid(context, e))?;
        let mask = render_silhouette(mesh, &camera).map_err(|e| CliError::invalid(context, e))?;
        rows.push(mask_metrics(&mask, &view.to_string(), context)?);
    }
    Ok(rows)
}

/// CSV for per-view metrics; the first column is named by the caller.
pub fn metrics_csv(label_header: &str, rows: &[ViewMetrics]) -> String {
    let mut out = csv_row(&[
        label_header.to_string(),
        "fer_2d".into(),
        "circularity".into(),
        "l_max".into(),
        "l_min".into(),
        "area".into(),
        "perimeter".into(),
    ]);
    for r in rows {
        out.push_str(&csv_row(&[
            r.label.clone(),
            fmt_f64(r.fer_2d),
            fmt_f64(r.circularity),
            fmt_f64(r.l_max),
            fmt_f64(r.l_min),
            fmt_f64(r.area),
            fmt_f64(r.perimeter),
        ]));
    }
    out
}
