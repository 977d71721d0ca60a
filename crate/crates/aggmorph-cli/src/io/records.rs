//! Per-sample morphology records as JSON and the comparison tables as CSV.

use crate::error::CliError;
use crate::io::csvio::csv_row;
use crate::io::fmt_f64;
use aggmorph::report::{
    summarize_sample, ComparisonTables, Morphology3d, MorphologyRecord, ViewShape2d,
};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThreeDDto {
    pub volume: f64,
    pub surface_area: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub fer_3d: f64,
    pub sphericity: f64,
    pub c_over_b: f64,
    pub b_over_a: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ViewDto {
    pub view: usize,
    pub fer_2d: f64,
    pub circularity: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecordDto {
    pub sample_id: String,
    pub three_d: ThreeDDto,
    pub views: Vec<ViewDto>,
}

pub fn record_to_dto(record: &MorphologyRecord) -> RecordDto {
    let t = &record.three_d;
    RecordDto {
        sample_id: record.sample_id.clone(),
        three_d: ThreeDDto {
            volume: t.volume,
            surface_area: t.surface_area,
            a: t.a,
            b: t.b,
            c: t.c,
            fer_3d: t.fer_3d,
            sphericity: t.sphericity,
            c_over_b: t.c_over_b,
            b_over_a: t.b_over_a,
        },
        views: record
            .views
            .iter()
            .map(|v| ViewDto {
                view: v.view,
                fer_2d: v.fer_2d,
                circularity: v.circularity,
            })
            .collect(),
    }
}

/// Rebuilds a full record from its serialized form, revalidating the
/// internal consistency of the 3D block and recomputing view statistics.
pub fn dto_to_record(dto: &RecordDto, context: &str) -> Result<MorphologyRecord, CliError> {
    let t = &dto.three_d;
    let three_d = Morphology3d {
        volume: t.volume,
        surface_area: t.surface_area,
        a: t.a,
        b: t.b,
        c: t.c,
        fer_3d: t.fer_3d,
        sphericity: t.sphericity,
        c_over_b: t.c_over_b,
        b_over_a: t.b_over_a,
    };
    let views: Vec<ViewShape2d> = dto
        .views
        .iter()
        .map(|v| ViewShape2d {
            view: v.view,
            fer_2d: v.fer_2d,
            circularity: v.circularity,
        })
        .collect();
    summarize_sample(&dto.sample_id, three_d, views).map_err(|e| CliError::invalid(context, e))
}

pub fn load_record(path: &Path) -> Result<MorphologyRecord, CliError> {
    let text = crate::io::read_to_string(path)?;
    let dto: RecordDto = serde_json::from_str(&text).map_err(|source| CliError::BadJson {
        path: path.display().to_string(),
        source,
    })?;
    dto_to_record(&dto, &path.display().to_string())
}

/// Loads every `.json` record in a directory, ordered by file name.
pub fn load_records_dir(dir: &Path) -> Result<Vec<MorphologyRecord>, CliError> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("json"))
        .collect();
    paths.sort();
    paths.iter().map(|p| load_record(p)).collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// `sample_id,fer_3d,fer_2d_mean,fer_2d_min,fer_2d_max,fer_2d_cov`.
pub fn fer_table_csv(tables: &ComparisonTables) -> String {
    let mut out = csv_row(&[
        "sample_id".into(),
        "fer_3d".into(),
        "fer_2d_mean".into(),
        "fer_2d_min".into(),
        "fer_2d_max".into(),
        "fer_2d_cov".into(),
    ]);
    for r in &tables.elongation {
        out.push_str(&csv_row(&[
            r.sample_id.clone(),
            fmt_f64(r.fer_3d),
            fmt_f64(r.fer_2d_mean),
            fmt_f64(r.fer_2d_min),
            fmt_f64(r.fer_2d_max),
            opt(r.fer_2d_cov),
        ]));
    }
    out
}

/// `sample_id,sphericity,circularity_mean,circularity_min,circularity_max,circularity_cov`.
pub fn roundness_table_csv(tables: &ComparisonTables) -> String {
    let mut out = csv_row(&[
        "sample_id".into(),
        "sphericity".into(),
        "circularity_mean".into(),
        "circularity_min".into(),
        "circularity_max".into(),
        "circularity_cov".into(),
    ]);
    for r in &tables.roundness {
        out.push_str(&csv_row(&[
            r.sample_id.clone(),
            fmt_f64(r.sphericity),
            fmt_f64(r.circularity_mean),
            fmt_f64(r.circularity_min),
            fmt_f64(r.circularity_max),
            opt(r.circularity_cov),
        ]));
    }
    out
}

/// `sample_id,fer_2d_mean,c_over_a,c_over_b,b_over_a,lower,upper,margin_lower,margin_upper,inside`.
pub fn envelope_table_csv(tables: &ComparisonTables) -> String {
    let mut out = csv_row(&[
        "sample_id".into(),
        "fer_2d_mean".into(),
        "c_over_a".into(),
        "c_over_b".into(),
        "b_over_a".into(),
        "lower".into(),
        "upper".into(),
        "margin_lower".into(),
        "margin_upper".into(),
        "inside".into(),
    ]);
    for r in &tables.envelope {
        out.push_str(&csv_row(&[
            r.sample_id.clone(),
            fmt_f64(r.fer_2d_mean),
            fmt_f64(r.c_over_a),
            fmt_f64(r.c_over_b),
            fmt_f64(r.b_over_a),
            fmt_f64(r.check.lower),
            fmt_f64(r.check.upper),
            fmt_f64(r.check.margin_lower),
            fmt_f64(r.check.margin_upper),
            r.check.inside.to_string(),
        ]));
    }
    out
}
