//! Summary statistics and reporting records: per-sample morphology
//! summaries, volume error metrics, and the cross-sample comparison
//! tables relating 3D shape descriptors to their 2D projections.

use thiserror::Error;

/// Relative tolerance for checking that derived ratios in a record agree
/// with the dimensions they were derived from.
pub const RECORD_CONSISTENCY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReportError {
    #[error("input is empty")]
    EmptyInput,
    #[error("paired inputs differ in length: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("measurement {index} is {value}, must be positive")]
    NonPositiveMeasurement { index: usize, value: f64 },
    #[error("need {required} samples, got {actual}")]
    InsufficientSamples { required: usize, actual: usize },
    #[error("mean is zero, coefficient of variation is undefined")]
    ZeroMean,
    #[error("sample has no per-view shapes")]
    EmptyViews,
    #[error("record is inconsistent: {0}")]
    InvalidRecord(String),
    #[error("value {0} must be positive and finite")]
    NonPositiveInput(f64),
}

/// Descriptive statistics of one quantity across repeated observations.
///
/// `std_dev` and `cov` use the n-1 denominator and are absent for a
/// single observation; `cov` is also absent when the mean is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Stats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub std_dev: Option<f64>,
    pub cov: Option<f64>,
}

impl Stats {
    pub fn describe(values: &[f64]) -> Result<Stats, ReportError> {
        if values.is_empty() {
            return Err(ReportError::EmptyInput);
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let std_dev = (values.len() >= 2).then(|| {
            let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
            (ss / (n - 1.0)).sqrt()
        });
        let cov = std_dev.and_then(|s| (mean != 0.0).then(|| s / mean.abs()));
        Ok(Stats {
            mean,
            min,
            max,
            std_dev,
            cov,
        })
    }
}

/// Coefficient of variation (sample standard deviation over mean).
pub fn cov(values: &[f64]) -> Result<f64, ReportError> {
    if values.len() < 2 {
        return Err(ReportError::InsufficientSamples {
            required: 2,
            actual: values.len(),
        });
    }
    let stats = Stats::describe(values)?;
    stats.cov.ok_or(ReportError::ZeroMean)
}

/// Per-pair signed relative errors in percent: `(estimate - reference) /
/// reference * 100`.
fn percent_errors(reference: &[f64], estimate: &[f64]) -> Result<Vec<f64>, ReportError> {
    if reference.is_empty() {
        return Err(ReportError::EmptyInput);
    }
    if reference.len() != estimate.len() {
        return Err(ReportError::LengthMismatch {
            left: reference.len(),
            right: estimate.len(),
        });
    }
    reference
        .iter()
        .zip(estimate)
        .enumerate()
        .map(|(index, (&r, &e))| {
            if r.is_nan() || r <= 0.0 {
                return Err(ReportError::NonPositiveMeasurement { index, value: r });
            }
            Ok((e - r) / r * 100.0)
        })
        .collect()
}

/// Mean percentage error of estimates against references, in percent.
/// Positive means overestimation on average.
pub fn mean_percentage_error(reference: &[f64], estimate: &[f64]) -> Result<f64, ReportError> {
    let errors = percent_errors(reference, estimate)?;
    Ok(errors.iter().sum::<f64>() / errors.len() as f64)
}

/// Mean absolute percentage error of estimates against references, in
/// percent.
pub fn mean_absolute_percentage_error(
    reference: &[f64],
    estimate: &[f64],
) -> Result<f64, ReportError> {
    let errors = percent_errors(reference, estimate)?;
    Ok(errors.iter().map(|e| e.abs()).sum::<f64>() / errors.len() as f64)
}

/// 3D shape descriptors of one reconstructed sample. Dimensions `a <= b
/// <= c` are the sorted side lengths of the minimum-volume bounding box.
#[derive(Debug, Clone, PartialEq)]
pub struct Morphology3d {
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

impl Morphology3d {
    /// Derives the ratio descriptors from raw measurements. Dimensions
    /// may arrive in any order and are sorted ascending.
    pub fn from_measurements(
        volume: f64,
        surface_area: f64,
        dimensions: [f64; 3],
    ) -> Result<Morphology3d, ReportError> {
        for &v in [volume, surface_area].iter().chain(&dimensions) {
            if !v.is_finite() || v <= 0.0 {
                return Err(ReportError::NonPositiveInput(v));
            }
        }
        let mut dims = dimensions;
        dims.sort_by(f64::total_cmp);
        let [a, b, c] = dims;
        Ok(Morphology3d {
            volume,
            surface_area,
            a,
            b,
            c,
            fer_3d: c / a,
            sphericity: (36.0 * std::f64::consts::PI * volume * volume).cbrt() / surface_area,
            c_over_b: c / b,
            b_over_a: b / a,
        })
    }

    /// The same shape expressed in units scaled by `factor` per length:
    /// volume scales cubically, area quadratically, dimensions linearly,
    /// and every dimensionless ratio is copied unchanged.
    pub fn scaled(&self, factor: f64) -> Result<Morphology3d, ReportError> {
        if !factor.is_finite() || factor <= 0.0 {
            return Err(ReportError::NonPositiveInput(factor));
        }
        Ok(Morphology3d {
            volume: self.volume * factor.powi(3),
            surface_area: self.surface_area * factor.powi(2),
            a: self.a * factor,
            b: self.b * factor,
            c: self.c * factor,
            fer_3d: self.fer_3d,
            sphericity: self.sphericity,
            c_over_b: self.c_over_b,
            b_over_a: self.b_over_a,
        })
    }

    fn check_consistency(&self) -> Result<(), ReportError> {
        let checks = [
            ("dimension order", self.a <= self.b && self.b <= self.c),
            ("positive dimensions", self.a > 0.0),
            ("elongation", relative_close(self.fer_3d, self.c / self.a)),
            (
                "flatness ratio",
                relative_close(self.c_over_b, self.c / self.b),
            ),
            (
                "width ratio",
                relative_close(self.b_over_a, self.b / self.a),
            ),
            (
                "sphericity",
                relative_close(
                    self.sphericity,
                    (36.0 * std::f64::consts::PI * self.volume * self.volume).cbrt()
                        / self.surface_area,
                ),
            ),
        ];
        for (what, ok) in checks {
            if !ok {
                return Err(ReportError::InvalidRecord(format!(
                    "{what} disagrees with the stored dimensions"
                )));
            }
        }
        Ok(())
    }
}

fn relative_close(x: f64, y: f64) -> bool {
    (x - y).abs() <= RECORD_CONSISTENCY_TOL * x.abs().max(y.abs()).max(1.0)
}

/// 2D descriptors measured on the silhouette of one view.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewShape2d {
    pub view: usize,
    pub fer_2d: f64,
    pub circularity: f64,
}

/// One sample's full morphology summary: its 3D descriptors plus
/// per-view 2D descriptors and their spread.
#[derive(Debug, Clone, PartialEq)]
pub struct MorphologyRecord {
    pub sample_id: String,
    pub three_d: Morphology3d,
    pub views: Vec<ViewShape2d>,
    pub fer_2d_stats: Stats,
    pub circularity_stats: Stats,
}

/// Builds a sample record, validating that the 3D descriptors are
/// internally consistent and the per-view values are plausible.
pub fn summarize_sample(
    sample_id: &str,
    three_d: Morphology3d,
    views: Vec<ViewShape2d>,
) -> Result<MorphologyRecord, ReportError> {
    if views.is_empty() {
        return Err(ReportError::EmptyViews);
    }
    three_d.check_consistency()?;
    for v in &views {
        if v.fer_2d < 1.0 - RECORD_CONSISTENCY_TOL || !v.fer_2d.is_finite() {
            return Err(ReportError::InvalidRecord(format!(
                "view {} has aspect ratio {} below 1",
                v.view, v.fer_2d
            )));
        }
        if v.circularity.is_nan() || v.circularity <= 0.0 || v.circularity > 1.0 + 1e-6 {
            return Err(ReportError::InvalidRecord(format!(
                "view {} has circularity {} outside (0, 1]",
                v.view, v.circularity
            )));
        }
    }
    let fer_2d_stats = Stats::describe(&views.iter().map(|v| v.fer_2d).collect::<Vec<_>>())?;
    let circularity_stats =
        Stats::describe(&views.iter().map(|v| v.circularity).collect::<Vec<_>>())?;
    Ok(MorphologyRecord {
        sample_id: sample_id.to_string(),
        three_d,
        views,
        fer_2d_stats,
        circularity_stats,
    })
}

/// Whether a mean 2D aspect ratio falls inside the band spanned by the
/// two 3D aspect ratios of the same sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeCheck {
    pub lower: f64,
    pub upper: f64,
    /// `mean - lower`; non-negative when the mean clears the lower bound.
    pub margin_lower: f64,
    /// `mean - upper`; non-positive when the mean clears the upper bound.
    pub margin_upper: f64,
    pub inside: bool,
}

/// Checks a mean 2D aspect ratio against the `[min, max]` band of the
/// sample's two 3D aspect ratios.
pub fn envelope_check(mean_fer_2d: f64, c_over_b: f64, b_over_a: f64) -> EnvelopeCheck {
    let lower = c_over_b.min(b_over_a);
    let upper = c_over_b.max(b_over_a);
    let margin_lower = mean_fer_2d - lower;
    let margin_upper = mean_fer_2d - upper;
    EnvelopeCheck {
        lower,
        upper,
        margin_lower,
        margin_upper,
        inside: margin_lower >= 0.0 && margin_upper <= 0.0,
    }
}

/// Elongation comparison row, 3D against the 2D view spread.
#[derive(Debug, Clone, PartialEq)]
pub struct FerRow {
    pub sample_id: String,
    pub fer_3d: f64,
    pub fer_2d_mean: f64,
    pub fer_2d_min: f64,
    pub fer_2d_max: f64,
    pub fer_2d_cov: Option<f64>,
}

/// Roundness comparison row, sphericity against the circularity spread.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundnessRow {
    pub sample_id: String,
    pub sphericity: f64,
    pub circularity_mean: f64,
    pub circularity_min: f64,
    pub circularity_max: f64,
    pub circularity_cov: Option<f64>,
}

/// Envelope verdict row for one sample: the mean 2D aspect ratio against
/// all three 3D aspect ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeRow {
    pub sample_id: String,
    pub fer_2d_mean: f64,
    pub c_over_a: f64,
    pub c_over_b: f64,
    pub b_over_a: f64,
    pub check: EnvelopeCheck,
}

/// The three cross-sample comparison tables.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTables {
    /// Sorted by ascending 3D elongation.
    pub elongation: Vec<FerRow>,
    /// Sorted by ascending sphericity.
    pub roundness: Vec<RoundnessRow>,
    /// Sorted by ascending 3D elongation.
    pub envelope: Vec<EnvelopeRow>,
}

/// Reorganizes sample records into the comparison tables.
pub fn comparison_tables(records: &[MorphologyRecord]) -> Result<ComparisonTables, ReportError> {
    if records.is_empty() {
        return Err(ReportError::EmptyInput);
    }
    let mut elongation: Vec<FerRow> = records
        .iter()
        .map(|r| FerRow {
            sample_id: r.sample_id.clone(),
            fer_3d: r.three_d.fer_3d,
            fer_2d_mean: r.fer_2d_stats.mean,
            fer_2d_min: r.fer_2d_stats.min,
            fer_2d_max: r.fer_2d_stats.max,
            fer_2d_cov: r.fer_2d_stats.cov,
        })
        .collect();
    elongation.sort_by(|x, y| {
        f64::total_cmp(&x.fer_3d, &y.fer_3d).then_with(|| x.sample_id.cmp(&y.sample_id))
    });

    let mut roundness: Vec<RoundnessRow> = records
        .iter()
        .map(|r| RoundnessRow {
            sample_id: r.sample_id.clone(),
            sphericity: r.three_d.sphericity,
            circularity_mean: r.circularity_stats.mean,
            circularity_min: r.circularity_stats.min,
            circularity_max: r.circularity_stats.max,
            circularity_cov: r.circularity_stats.cov,
        })
        .collect();
    roundness.sort_by(|x, y| {
        f64::total_cmp(&x.sphericity, &y.sphericity).then_with(|| x.sample_id.cmp(&y.sample_id))
    });

    let mut keyed: Vec<(f64, EnvelopeRow)> = records
        .iter()
        .map(|r| {
            (
                r.three_d.fer_3d,
                EnvelopeRow {
                    sample_id: r.sample_id.clone(),
                    fer_2d_mean: r.fer_2d_stats.mean,
                    c_over_a: r.three_d.fer_3d,
                    c_over_b: r.three_d.c_over_b,
                    b_over_a: r.three_d.b_over_a,
                    check: envelope_check(
                        r.fer_2d_stats.mean,
                        r.three_d.c_over_b,
                        r.three_d.b_over_a,
                    ),
                },
            )
        })
        .collect();
    keyed
        .sort_by(|x, y| f64::total_cmp(&x.0, &y.0).then_with(|| x.1.sample_id.cmp(&y.1.sample_id)));
    let envelope = keyed.into_iter().map(|(_, row)| row).collect();

    Ok(ComparisonTables {
        elongation,
        roundness,
        envelope,
    })
}
