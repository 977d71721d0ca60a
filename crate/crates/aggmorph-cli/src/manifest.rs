//! Pipeline manifest: global settings plus one entry per sample, each
//! pointing at a mesh or at partial clouds with a marker file. Relative
//! paths resolve against the manifest's own directory.

use crate::error::CliError;
use serde::Deserialize;
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Units {
    Cm,
    Mm,
    In,
}

impl Units {
    pub fn factor_to_cm(self) -> f64 {
        match self {
            Units::Cm => 1.0,
            Units::Mm => 0.1,
            Units::In => 2.54,
        }
    }

    fn parse(name: &str) -> Option<Units> {
        match name {
            "cm" => Some(Units::Cm),
            "mm" => Some(Units::Mm),
            "in" => Some(Units::In),
            _ => None,
        }
    }
}

fn default_units() -> String {
    "cm".to_string()
}

fn default_views() -> usize {
    12
}

fn default_elevation() -> f64 {
    35.0
}

fn default_resolution() -> usize {
    1024
}

fn default_output_dir() -> String {
    "out".to_string()
}

#[derive(Debug, Clone, Deserialize)]
pub struct SettingsDto {
    #[serde(default = "default_units")]
    pub units: String,
    #[serde(default = "default_views")]
    pub views: usize,
    #[serde(default = "default_elevation")]
    pub elevation_deg: f64,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    #[serde(default)]
    pub ba_max_iterations: Option<usize>,
}

impl Default for SettingsDto {
    fn default() -> Self {
        SettingsDto {
            units: default_units(),
            views: default_views(),
            elevation_deg: default_elevation(),
            resolution: default_resolution(),
            output_dir: default_output_dir(),
            ba_max_iterations: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct SampleDto {
    pub id: String,
    #[serde(default)]
    pub mesh: Option<String>,
    #[serde(default)]
    pub partials: Vec<String>,
    #[serde(default)]
    pub markers: Option<String>,
    #[serde(default)]
    pub masks_dir: Option<String>,
    #[serde(default)]
    pub pixel_pitch_cm: Option<f64>,
    #[serde(default)]
    pub measured_cm3: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ManifestDto {
    #[serde(default)]
    pub settings: SettingsDto,
    pub samples: Vec<SampleDto>,
}

/// Validated manifest with absolute paths.
#[derive(Debug, Clone)]
pub struct Manifest {
    pub units: Units,
    pub views: usize,
    pub elevation_deg: f64,
    pub resolution: usize,
    pub output_dir: PathBuf,
    pub ba_max_iterations: Option<usize>,
    pub samples: Vec<Sample>,
}

#[derive(Debug, Clone)]
pub struct Sample {
    pub id: String,
    pub geometry: SampleGeometry,
    pub masks_dir: Option<PathBuf>,
    pub pixel_pitch_cm: Option<f64>,
    pub measured_cm3: Option<f64>,
}

#[derive(Debug, Clone)]
pub enum SampleGeometry {
    Mesh(PathBuf),
    Partials {
        clouds: Vec<PathBuf>,
        markers: PathBuf,
    },
}

pub fn load_manifest(path: &Path) -> Result<Manifest, CliError> {
    let text = crate::io::read_to_string(path)?;
    let dto: ManifestDto = serde_json::from_str(&text).map_err(|source| CliError::BadJson {
        path: path.display().to_string(),
        source,
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let resolve = |p: &str| -> PathBuf {
        let candidate = PathBuf::from(p);
        if candidate.is_absolute() {
            candidate
        } else {
            base.join(candidate)
        }
    };
    let context = path.display().to_string();

    let units = Units::parse(&dto.settings.units).ok_or_else(|| {
        CliError::invalid(
            &context,
            format!("units {:?} not in cm, mm, in", dto.settings.units),
        )
    })?;
    if dto.settings.views < 1 {
        return Err(CliError::invalid(&context, "views must be at least 1"));
    }

    let mut ids = BTreeSet::new();
    let mut samples = Vec::with_capacity(dto.samples.len());
    for s in &dto.samples {
        if !ids.insert(s.id.clone()) {
            return Err(CliError::invalid(
                &context,
                format!("duplicate sample id {:?}", s.id),
            ));
        }
        let geometry = match (&s.mesh, s.partials.len()) {
            (Some(mesh), 0) => SampleGeometry::Mesh(resolve(mesh)),
            (Some(_), _) => {
                return Err(CliError::invalid(
                    &context,
                    format!("sample {:?} sets both mesh and partials", s.id),
                ))
            }
            (None, 0) => {
                return Err(CliError::invalid(
                    &context,
                    format!("sample {:?} has neither mesh nor partials", s.id),
                ))
            }
            (None, 1) => {
                return Err(CliError::invalid(
                    &context,
                    format!(
                        "sample {:?} has a single partial; stitching needs at least 2",
                        s.id
                    ),
                ))
            }
            (None, _) => {
                let markers = s.markers.as_deref().ok_or_else(|| {
                    CliError::invalid(
                        &context,
                        format!("sample {:?} has partial clouds but no marker file", s.id),
                    )
                })?;
                SampleGeometry::Partials {
                    clouds: s.partials.iter().map(|p| resolve(p)).collect(),
                    markers: resolve(markers),
                }
            }
        };
        samples.push(Sample {
            id: s.id.clone(),
            geometry,
            masks_dir: s.masks_dir.as_deref().map(&resolve),
            pixel_pitch_cm: s.pixel_pitch_cm,
            measured_cm3: s.measured_cm3,
        });
    }

    Ok(Manifest {
        units,
        views: dto.settings.views,
        elevation_deg: dto.settings.elevation_deg,
        resolution: dto.settings.resolution,
        output_dir: resolve(&dto.settings.output_dir),
        ba_max_iterations: dto.settings.ba_max_iterations,
        samples,
    })
}
