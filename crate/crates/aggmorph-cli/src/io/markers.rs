//! Marker JSON: pin markers on the object, background markers, and known
//! physical distances. Multi-cloud samples carry one `partials` entry per
//! cloud, each with the pin positions in that cloud's own frame.

use crate::error::CliError;
use aggmorph::registration::{BackgroundMarker, KnownDistance, ObjectMarker};
use nalgebra::Point3;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObjectMarkerDto {
    pub label: String,
    pub head: [f64; 3],
    pub tail: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BackgroundMarkerDto {
    pub label: String,
    pub position: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnownDistanceDto {
    pub a_label: String,
    pub b_label: String,
    pub cm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartialDto {
    pub object_markers: Vec<ObjectMarkerDto>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MarkerFileDto {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub object_markers: Vec<ObjectMarkerDto>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub background_markers: Vec<BackgroundMarkerDto>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub known_distances: Vec<KnownDistanceDto>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub partials: Vec<PartialDto>,
}

/// A distances file is either a full marker document or a bare array of
/// known distances.
#[derive(Deserialize)]
#[serde(untagged)]
enum DistancesInput {
    Wrapped(MarkerFileDto),
    Bare(Vec<KnownDistanceDto>),
}

pub fn load_markers(path: &Path) -> Result<MarkerFileDto, CliError> {
    let text = crate::io::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|source| CliError::BadJson {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_distances(path: &Path) -> Result<Vec<KnownDistanceDto>, CliError> {
    let text = crate::io::read_to_string(path)?;
    let input: DistancesInput =
        serde_json::from_str(&text).map_err(|source| CliError::BadJson {
            path: path.display().to_string(),
            source,
        })?;
    Ok(match input {
        DistancesInput::Wrapped(f) => f.known_distances,
        DistancesInput::Bare(v) => v,
    })
}

pub fn object_markers(dtos: &[ObjectMarkerDto]) -> Vec<ObjectMarker> {
    dtos.iter()
        .map(|m| ObjectMarker {
            label: m.label.as_str().into(),
            head: Point3::new(m.head[0], m.head[1], m.head[2]),
            tail: Point3::new(m.tail[0], m.tail[1], m.tail[2]),
        })
        .collect()
}

pub fn background_markers(dtos: &[BackgroundMarkerDto]) -> Vec<BackgroundMarker> {
    dtos.iter()
        .map(|m| BackgroundMarker {
            label: m.label.as_str().into(),
            position: Point3::new(m.position[0], m.position[1], m.position[2]),
        })
        .collect()
}

pub fn known_distances(dtos: &[KnownDistanceDto]) -> Vec<KnownDistance> {
    dtos.iter()
        .map(|d| KnownDistance {
            a: d.a_label.as_str().into(),
            b: d.b_label.as_str().into(),
            distance: d.cm,
        })
        .collect()
}
