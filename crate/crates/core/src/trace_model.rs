//! Drawing templates, raw and normalized traces, and raw-input validation.
//!
//! Raw traces are measured in sheet millimeters: time runs rightward from the
//! HMD-on line, presence is measured from the middle line with positive values
//! toward the virtual world. Normalization divides time by the HMD-on/HMD-off
//! distance and presence by the middle-line-to-extreme distance.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_TIME_AXIS_MM: f64 = 200.0;
pub const DEFAULT_PRESENCE_HALF_RANGE_MM: f64 = 40.0;

/// Current version tag of every document this crate reads or writes.
pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TemplateError {
    #[error("{field} must be positive and finite, got {value}")]
    NonPositive { field: &'static str, value: f64 },
    #[error("duplicate tick label `{label}`")]
    DuplicateTickLabel { label: String },
    #[error("tick `{label}` at {x_mm}mm lies outside the time axis [0, {axis_mm}]")]
    TickOutsideAxis { label: String, x_mm: f64, axis_mm: f64 },
    #[error("ticks `{first}` and `{second}` share position {x_mm}mm")]
    DuplicateTickPosition { first: String, second: String, x_mm: f64 },
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace has no samples")]
    Empty,
    #[error("trace failed validation: {0}")]
    Invalid(ValidationReport),
    #[error("unsupported schema_version `{found}` (expected `{expected}`)")]
    SchemaVersion { found: String, expected: String },
    #[error("malformed trace document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Template(#[from] TemplateError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventTick {
    pub label: String,
    pub x_mm: f64,
}

/// Background shading of the sheet, from the middle line toward both extremes.
/// Grey levels are fractions of black (0 = white).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientSpec {
    pub from_grey: f64,
    pub to_grey: f64,
}

impl Default for GradientSpec {
    fn default() -> Self {
        Self {
            from_grey: 0.0,
            to_grey: 0.25,
        }
    }
}

/// Configuration accepted by [`build_template`]. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TemplateConfig {
    #[serde(default, alias = "time_len_mm", skip_serializing_if = "Option::is_none")]
    pub time_axis_len_mm: Option<f64>,
    #[serde(default, alias = "half_range_mm", skip_serializing_if = "Option::is_none")]
    pub presence_half_range_mm: Option<f64>,
    /// Extent of the real-world half of the sheet when it differs from the
    /// virtual-world half. Defaults to `presence_half_range_mm`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub negative_half_range_mm: Option<f64>,
    #[serde(default, alias = "ticks")]
    pub event_ticks: Vec<EventTick>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradient: Option<GradientSpec>,
}

/// Physical geometry of the drawing sheet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TemplateConfig")]
pub struct Template {
    pub time_axis_len_mm: f64,
    pub presence_half_range_mm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub negative_half_range_mm: Option<f64>,
    /// Sorted by position, labels unique.
    pub event_ticks: Vec<EventTick>,
    pub gradient: GradientSpec,
}

impl TryFrom<TemplateConfig> for Template {
    type Error = TemplateError;

    fn try_from(config: TemplateConfig) -> Result<Self, Self::Error> {
        build_template(config)
    }
}

impl Default for Template {
    fn default() -> Self {
        build_template(TemplateConfig::default()).expect("default template is valid")
    }
}

fn positive(field: &'static str, value: f64) -> Result<f64, TemplateError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(TemplateError::NonPositive { field, value })
    }
}

/// Builds a validated template, filling in the 200mm / 40mm defaults.
pub fn build_template(config: TemplateConfig) -> Result<Template, TemplateError> {
    let time_axis_len_mm = positive(
        "time_axis_len_mm",
        config.time_axis_len_mm.unwrap_or(DEFAULT_TIME_AXIS_MM),
    )?;
    let presence_half_range_mm = positive(
        "presence_half_range_mm",
        config
            .presence_half_range_mm
            .unwrap_or(DEFAULT_PRESENCE_HALF_RANGE_MM),
    )?;
    let negative_half_range_mm = config
        .negative_half_range_mm
        .map(|v| positive("negative_half_range_mm", v))
        .transpose()?;

    let mut seen = HashSet::new();
    for tick in &config.event_ticks {
        if !seen.insert(tick.label.as_str()) {
            return Err(TemplateError::DuplicateTickLabel {
                label: tick.label.clone(),
            });
        }
        if !(tick.x_mm.is_finite() && (0.0..=time_axis_len_mm).contains(&tick.x_mm)) {
            return Err(TemplateError::TickOutsideAxis {
                label: tick.label.clone(),
                x_mm: tick.x_mm,
                axis_mm: time_axis_len_mm,
            });
        }
    }
    let mut event_ticks = config.event_ticks;
    event_ticks.sort_by(|a, b| a.x_mm.total_cmp(&b.x_mm));
    for pair in event_ticks.windows(2) {
        if pair[0].x_mm == pair[1].x_mm {
            return Err(TemplateError::DuplicateTickPosition {
                first: pair[0].label.clone(),
                second: pair[1].label.clone(),
                x_mm: pair[0].x_mm,
            });
        }
    }

    Ok(Template {
        time_axis_len_mm,
        presence_half_range_mm,
        negative_half_range_mm,
        event_ticks,
        gradient: config.gradient.unwrap_or_default(),
    })
}

impl Template {
    pub fn hmd_on_x_mm(&self) -> f64 {
        0.0
    }

    pub fn hmd_off_x_mm(&self) -> f64 {
        self.time_axis_len_mm
    }

    pub fn start_dot(&self) -> RawSample {
        RawSample { x_mm: 0.0, y_mm: 0.0 }
    }

    pub fn negative_range_mm(&self) -> f64 {
        self.negative_half_range_mm
            .unwrap_or(self.presence_half_range_mm)
    }

    /// Tick positions as fractions of the timeline, in sheet order.
    pub fn tick_fractions(&self) -> Vec<(&str, f64)> {
        self.event_ticks
            .iter()
            .map(|t| (t.label.as_str(), t.x_mm / self.time_axis_len_mm))
            .collect()
    }

    pub fn time_to_unit(&self, x_mm: f64) -> f64 {
        x_mm / self.time_axis_len_mm
    }

    pub fn time_to_mm(&self, t: f64) -> f64 {
        t * self.time_axis_len_mm
    }

    pub fn presence_to_unit(&self, y_mm: f64) -> f64 {
        if y_mm >= 0.0 {
            y_mm / self.presence_half_range_mm
        } else {
            y_mm / self.negative_range_mm()
        }
    }

    pub fn presence_to_mm(&self, p: f64) -> f64 {
        if p >= 0.0 {
            p * self.presence_half_range_mm
        } else {
            p * self.negative_range_mm()
        }
    }
}

/// One digitized pen position in sheet millimeters. Serialized as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct RawSample {
    pub x_mm: f64,
    pub y_mm: f64,
}

impl From<[f64; 2]> for RawSample {
    fn from([x_mm, y_mm]: [f64; 2]) -> Self {
        Self { x_mm, y_mm }
    }
}

impl From<RawSample> for [f64; 2] {
    fn from(s: RawSample) -> Self {
        [s.x_mm, s.y_mm]
    }
}

/// A point of the normalized drawing: `t` is the fraction of the timeline,
/// `p` the presence in [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub t: f64,
    pub p: f64,
}

impl TracePoint {
    pub const fn new(t: f64, p: f64) -> Self {
        Self { t, p }
    }
}

impl fmt::Display for TracePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.4}, {:.4})", self.t, self.p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotationKind {
    BreakNote,
    ConstantNote,
    EventNote,
    FreeText,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub x_mm: f64,
    pub kind: AnnotationKind,
    #[serde(default)]
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedAnnotation {
    pub t: f64,
    pub kind: AnnotationKind,
    #[serde(default)]
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Capture {
    PaperScan,
    #[default]
    Digital,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SourceInfo {
    pub participant_id: String,
    #[serde(default)]
    pub group: String,
    #[serde(default)]
    pub capture: Capture,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawTrace {
    pub samples: Vec<RawSample>,
    #[serde(default)]
    pub annotations: Vec<Annotation>,
    pub source: SourceInfo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedTrace {
    pub samples: Vec<TracePoint>,
    #[serde(default)]
    pub annotations: Vec<NormalizedAnnotation>,
    pub source: SourceInfo,
}

impl NormalizedTrace {
    /// Time span covered by the drawing.
    pub fn span(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }
}

/// The trace document exchanged between the drawing front-end, scanners and
/// the pipeline. Units are always millimeters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceFile {
    #[serde(default = "schema_version")]
    pub schema_version: String,
    pub template: Template,
    pub samples: Vec<RawSample>,
    #[serde(default)]
    pub annotations: Vec<Annotation>,
    pub source: SourceInfo,
}

fn schema_version() -> String {
    SCHEMA_VERSION.to_owned()
}

impl TraceFile {
    pub fn new(template: Template, trace: RawTrace) -> Self {
        Self {
            schema_version: schema_version(),
            template,
            samples: trace.samples,
            annotations: trace.annotations,
            source: trace.source,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, TraceError> {
        let file: TraceFile = serde_json::from_str(text)?;
        check_schema_version(&file.schema_version)?;
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace file serializes")
    }

    pub fn raw_trace(&self) -> RawTrace {
        RawTrace {
            samples: self.samples.clone(),
            annotations: self.annotations.clone(),
            source: self.source.clone(),
        }
    }
}

pub fn check_schema_version(found: &str) -> Result<(), TraceError> {
    if found == SCHEMA_VERSION {
        Ok(())
    } else {
        Err(TraceError::SchemaVersion {
            found: found.to_owned(),
            expected: SCHEMA_VERSION.to_owned(),
        })
    }
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Fatal,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IssueCode {
    TooFewSamples,
    NonFinite,
    XDecreasing,
    StartDotMiss,
    OutOfRange,
    Clamped,
    EndsEarly,
    PastHmdOff,
    AnnotationOutsideAxis,
}

impl IssueCode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::TooFewSamples => "too-few-samples",
            Self::NonFinite => "non-finite",
            Self::XDecreasing => "x-decreasing",
            Self::StartDotMiss => "start-dot-miss",
            Self::OutOfRange => "out-of-range",
            Self::Clamped => "clamped",
            Self::EndsEarly => "ends-early",
            Self::PastHmdOff => "past-hmd-off",
            Self::AnnotationOutsideAxis => "annotation-outside-axis",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Issue {
    pub severity: Severity,
    pub code: IssueCode,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn has_fatal(&self) -> bool {
        self.issues.iter().any(|i| i.severity == Severity::Fatal)
    }

    pub fn fatal(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Fatal)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Warning)
    }

    pub fn has_code(&self, code: IssueCode) -> bool {
        self.issues.iter().any(|i| i.code == code)
    }

    fn push(&mut self, severity: Severity, code: IssueCode, sample: Option<usize>, message: String) {
        self.issues.push(Issue {
            severity,
            code,
            message,
            sample,
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for issue in &self.issues {
            if !first {
                f.write_str("; ")?;
            }
            first = false;
            write!(f, "{}: {}", issue.code.as_str(), issue.message)?;
        }
        Ok(())
    }
}

/// Thresholds applied by [`validate_trace_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidationLimits {
    /// Radius around the start dot the first sample must fall into.
    pub start_tolerance_mm: f64,
    /// Pen overshoot beyond the presence extremes that is clamped rather than rejected.
    pub clamp_tolerance_mm: f64,
    /// Traces ending before this fraction of the timeline get a warning.
    pub min_end_fraction: f64,
    /// Samples beyond this fraction of the timeline are fatal.
    pub max_end_fraction: f64,
}

impl Default for ValidationLimits {
    fn default() -> Self {
        Self {
            start_tolerance_mm: 5.0,
            clamp_tolerance_mm: 2.0,
            min_end_fraction: 0.9,
            max_end_fraction: 1.05,
        }
    }
}

pub fn validate_trace(trace: &RawTrace, template: &Template) -> ValidationReport {
    validate_trace_with(trace, template, &ValidationLimits::default())
}

pub fn validate_trace_with(
    trace: &RawTrace,
    template: &Template,
    limits: &ValidationLimits,
) -> ValidationReport {
    use IssueCode::*;
    use Severity::*;

    let mut report = ValidationReport::default();
    let samples = &trace.samples;
    if samples.len() < 2 {
        report.push(
            Fatal,
            TooFewSamples,
            None,
            format!("{} sample(s), at least 2 required", samples.len()),
        );
    }

    let mut finite = true;
    for (i, s) in samples.iter().enumerate() {
        if !(s.x_mm.is_finite() && s.y_mm.is_finite()) {
            report.push(Fatal, NonFinite, Some(i), format!("sample {i} is not finite"));
            finite = false;
        }
    }
    if !finite {
        return report;
    }

    if let Some(first) = samples.first() {
        let miss = first.x_mm.hypot(first.y_mm);
        if miss > limits.start_tolerance_mm {
            report.push(
                Fatal,
                StartDotMiss,
                Some(0),
                format!(
                    "first sample ({}, {}) is {miss:.3}mm from the start dot (tolerance {}mm)",
                    first.x_mm, first.y_mm, limits.start_tolerance_mm
                ),
            );
        }
    }

    for (i, pair) in samples.windows(2).enumerate() {
        if pair[1].x_mm < pair[0].x_mm {
            report.push(
                Fatal,
                XDecreasing,
                Some(i + 1),
                format!(
                    "x decreases from {} to {} at sample {}",
                    pair[0].x_mm,
                    pair[1].x_mm,
                    i + 1
                ),
            );
        }
    }

    let upper = template.presence_half_range_mm;
    let lower = -template.negative_range_mm();
    for (i, s) in samples.iter().enumerate() {
        let excess = if s.y_mm > upper {
            s.y_mm - upper
        } else if s.y_mm < lower {
            lower - s.y_mm
        } else {
            continue;
        };
        if excess <= limits.clamp_tolerance_mm {
            report.push(
                Warning,
                Clamped,
                Some(i),
                format!("y={}mm exceeds the presence range by {excess:.3}mm; clamped", s.y_mm),
            );
        } else {
            report.push(
                Fatal,
                OutOfRange,
                Some(i),
                format!("y={}mm exceeds the presence range by {excess:.3}mm", s.y_mm),
            );
        }
    }

    let max_x = template.time_axis_len_mm * limits.max_end_fraction;
    if let Some((i, s)) = samples.iter().enumerate().find(|(_, s)| s.x_mm > max_x) {
        report.push(
            Fatal,
            PastHmdOff,
            Some(i),
            format!("x={}mm lies beyond {max_x}mm", s.x_mm),
        );
    }

    if let Some(last) = samples.last() {
        let end = template.time_to_unit(last.x_mm);
        if samples.len() >= 2 && end < limits.min_end_fraction {
            report.push(
                Warning,
                EndsEarly,
                Some(samples.len() - 1),
                format!(
                    "trace ends at {:.1}% of the timeline (expected at least {:.1}%)",
                    end * 100.0,
                    limits.min_end_fraction * 100.0
                ),
            );
        }
    }

    for (i, a) in trace.annotations.iter().enumerate() {
        if !(a.x_mm.is_finite() && (0.0..=template.time_axis_len_mm).contains(&a.x_mm)) {
            report.push(
                Fatal,
                AnnotationOutsideAxis,
                None,
                format!("annotation {i} at {}mm lies outside the time axis", a.x_mm),
            );
        }
    }

    report
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

pub fn normalize(trace: &RawTrace, template: &Template) -> Result<NormalizedTrace, TraceError> {
    normalize_with(trace, template, &ValidationLimits::default())
}

/// Validates, clamps pen overshoot, and maps the trace into timeline fractions
/// and presence units.
pub fn normalize_with(
    trace: &RawTrace,
    template: &Template,
    limits: &ValidationLimits,
) -> Result<NormalizedTrace, TraceError> {
    if trace.samples.is_empty() {
        return Err(TraceError::Empty);
    }
    let report = validate_trace_with(trace, template, limits);
    if report.has_fatal() {
        return Err(TraceError::Invalid(report));
    }
    let upper = template.presence_half_range_mm;
    let lower = -template.negative_range_mm();
    let samples = trace
        .samples
        .iter()
        .map(|s| TracePoint {
            t: template.time_to_unit(s.x_mm),
            p: template.presence_to_unit(s.y_mm.clamp(lower, upper)),
        })
        .collect();
    let annotations = trace
        .annotations
        .iter()
        .map(|a| NormalizedAnnotation {
            t: template.time_to_unit(a.x_mm),
            kind: a.kind,
            text: a.text.clone(),
        })
        .collect();
    Ok(NormalizedTrace {
        samples,
        annotations,
        source: trace.source.clone(),
    })
}

/// Maps a normalized trace back onto a template's millimeter geometry.
pub fn denormalize(trace: &NormalizedTrace, template: &Template) -> RawTrace {
    RawTrace {
        samples: trace
            .samples
            .iter()
            .map(|s| RawSample {
                x_mm: template.time_to_mm(s.t),
                y_mm: template.presence_to_mm(s.p),
            })
            .collect(),
        annotations: trace
            .annotations
            .iter()
            .map(|a| Annotation {
                x_mm: template.time_to_mm(a.t),
                kind: a.kind,
                text: a.text.clone(),
            })
            .collect(),
        source: trace.source.clone(),
    }
}
