//! Named points, time and shift parameters, and the five drawing prerequisites.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::segmentation::{segment_phases, Phase, PhaseKind, SegmentationParams};
use crate::trace_model::{AnnotationKind, NormalizedAnnotation, NormalizedTrace, TracePoint};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("no phases to describe")]
    NoPhases,
    #[error("model incomplete (prerequisite {prerequisite}): {reason}")]
    Incomplete {
        prerequisite: PrerequisiteId,
        reason: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BreakPoints {
    pub p_dropping: TracePoint,
    pub p_break: TracePoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelPoints {
    pub p_transition: TracePoint,
    pub p_experience: TracePoint,
    pub p_mentalexit: TracePoint,
    pub p_physicalexit: Option<TracePoint>,
    pub p_return: TracePoint,
    pub breaks: Vec<BreakPoints>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BreakParameters {
    pub t_dropping: f64,
    pub sh_break: f64,
    pub t_raising: Option<f64>,
    /// Duration of the plateau between the drop and whatever follows it.
    pub recovery_plateau: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    pub t_transition: f64,
    pub sh_transition: f64,
    /// Time until the drawing first crosses the middle line upward.
    pub t_transition_midcross: Option<f64>,
    pub t_experience: f64,
    pub t_exit: f64,
    pub t_mental: f64,
    pub t_physical: f64,
    pub breaks: Vec<BreakParameters>,
    pub drop_raise_ratio: Option<f64>,
}

impl Parameters {
    pub fn mean_t_dropping(&self) -> Option<f64> {
        mean(self.breaks.iter().map(|b| b.t_dropping))
    }

    pub fn mean_t_raising(&self) -> Option<f64> {
        mean(self.breaks.iter().filter_map(|b| b.t_raising))
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Locates the exit drop: the last dropping phase, followed by nothing but
/// constant phases.
fn final_drop_index(phases: &[Phase]) -> Result<usize, ModelError> {
    let idx = phases
        .iter()
        .rposition(|p| p.kind == PhaseKind::Dropping)
        .ok_or_else(|| ModelError::Incomplete {
            prerequisite: PrerequisiteId::B,
            reason: "the drawing has no dropping phase, so no return to the real world".into(),
        })?;
    if let Some(after) = phases[idx + 1..].iter().find(|p| p.kind == PhaseKind::Raising) {
        return Err(ModelError::Incomplete {
            prerequisite: PrerequisiteId::B,
            reason: format!(
                "presence rises again after the last drop (from t={:.3})",
                after.start.t
            ),
        });
    }
    Ok(idx)
}

fn value_at(samples: &[TracePoint], t: f64) -> Option<TracePoint> {
    let i = samples.iter().position(|s| s.t >= t)?;
    let hit = samples[i];
    if hit.t == t || i == 0 {
        return Some(TracePoint::new(t, hit.p));
    }
    let prev = samples[i - 1];
    let w = (t - prev.t) / (hit.t - prev.t);
    Some(TracePoint::new(t, prev.p + w * (hit.p - prev.p)))
}

/// Extracts the named points of the model from a phase sequence.
pub fn extract_points(phases: &[Phase], trace: &NormalizedTrace) -> Result<ModelPoints, ModelError> {
    let (Some(first_sample), Some(last_sample)) = (trace.samples.first(), trace.samples.last()) else {
        return Err(ModelError::NoPhases);
    };
    if phases.is_empty() {
        return Err(ModelError::NoPhases);
    }
    let exit_idx = final_drop_index(phases)?;

    let p_transition = *first_sample;
    let p_experience = match phases[0].kind {
        PhaseKind::Raising => phases[0].end,
        _ => p_transition,
    };
    let p_mentalexit = phases[exit_idx].start;
    let p_return = *last_sample;
    let p_physicalexit = if p_return.t >= 1.0 && p_mentalexit.t <= 1.0 {
        value_at(&trace.samples, 1.0)
    } else {
        None
    };

    let breaks = phases[..exit_idx]
        .iter()
        .filter(|p| p.kind == PhaseKind::Dropping)
        .map(|p| BreakPoints {
            p_dropping: p.start,
            p_break: p.end,
        })
        .collect();

    Ok(ModelPoints {
        p_transition,
        p_experience,
        p_mentalexit,
        p_physicalexit,
        p_return,
        breaks,
    })
}

fn midline_crossing(phases: &[Phase]) -> Option<f64> {
    phases.iter().find_map(|ph| {
        let (a, b) = (ph.start, ph.end);
        (a.p <= 0.0 && b.p > 0.0).then(|| {
            if b.t == a.t {
                a.t
            } else {
                a.t + (0.0 - a.p) / (b.p - a.p) * (b.t - a.t)
            }
        })
    })
}

fn break_recovery(phases: &[Phase], drop_idx: usize) -> (Option<f64>, Option<f64>) {
    match (phases.get(drop_idx + 1), phases.get(drop_idx + 2)) {
        (Some(next), _) if next.kind == PhaseKind::Raising => (Some(next.duration()), None),
        (Some(plateau), Some(after))
            if plateau.kind == PhaseKind::Constant && after.kind == PhaseKind::Raising =>
        {
            (Some(after.duration()), Some(plateau.duration()))
        }
        (Some(plateau), _) if plateau.kind == PhaseKind::Constant => (None, Some(plateau.duration())),
        _ => (None, None),
    }
}

/// Derives time and shift parameters from the points and their phases.
pub fn compute_parameters(points: &ModelPoints, phases: &[Phase]) -> Parameters {
    let t_transition = points.p_experience.t - points.p_transition.t;
    let sh_transition = points.p_experience.p - points.p_transition.p;
    let t_experience = points.p_mentalexit.t - points.p_experience.t;
    let t_exit = points.p_return.t - points.p_mentalexit.t;
    let t_physical = points
        .p_physicalexit
        .map(|pe| points.p_return.t - pe.t)
        .unwrap_or(0.0);
    let t_mental = t_exit - t_physical;

    let breaks: Vec<BreakParameters> = points
        .breaks
        .iter()
        .map(|b| {
            let phase_idx = phases
                .iter()
                .position(|p| p.kind == PhaseKind::Dropping && p.start == b.p_dropping && p.end == b.p_break);
            let (t_raising, recovery_plateau) = phase_idx
                .map(|i| break_recovery(phases, i))
                .unwrap_or((None, None));
            BreakParameters {
                t_dropping: b.p_break.t - b.p_dropping.t,
                sh_break: b.p_break.p - b.p_dropping.p,
                t_raising,
                recovery_plateau,
            }
        })
        .collect();

    let recovered: Vec<&BreakParameters> = breaks.iter().filter(|b| b.t_raising.is_some()).collect();
    let drop_raise_ratio = {
        let d = mean(recovered.iter().map(|b| b.t_dropping));
        let r = mean(recovered.iter().filter_map(|b| b.t_raising));
        match (d, r) {
            (Some(d), Some(r)) if r > 0.0 => Some(d / r),
            _ => None,
        }
    };

    Parameters {
        t_transition,
        sh_transition,
        t_transition_midcross: midline_crossing(phases).map(|t| t - points.p_transition.t),
        t_experience,
        t_exit,
        t_mental,
        t_physical,
        breaks,
        drop_raise_ratio,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrerequisiteId {
    A,
    B,
    C,
    D,
    E,
}

impl PrerequisiteId {
    pub const ALL: [PrerequisiteId; 5] = [Self::A, Self::B, Self::C, Self::D, Self::E];
}

impl fmt::Display for PrerequisiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Self::A => "a",
            Self::B => "b",
            Self::C => "c",
            Self::D => "d",
            Self::E => "e",
        };
        f.write_str(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PrerequisiteConfig {
    /// Half-axes of the start-dot tolerance ellipse in normalized units
    /// (5mm on a 200mm x 40mm sheet).
    pub start_tolerance_t: f64,
    pub start_tolerance_p: f64,
    /// Final presence at or below this counts as back in the real world.
    pub return_threshold: f64,
    pub experience_min_fraction: f64,
    /// How far an annotated break may sit from its dropping phase.
    pub annotation_tolerance: f64,
}

impl Default for PrerequisiteConfig {
    fn default() -> Self {
        Self {
            start_tolerance_t: 0.025,
            start_tolerance_p: 0.125,
            return_threshold: -0.5,
            experience_min_fraction: 0.5,
            annotation_tolerance: 0.025,
        }
    }
}

impl PrerequisiteConfig {
    /// Derives the start-dot ellipse from a millimeter tolerance on a given sheet.
    pub fn with_start_tolerance_mm(mut self, tolerance_mm: f64, template: &crate::trace_model::Template) -> Self {
        self.start_tolerance_t = tolerance_mm / template.time_axis_len_mm;
        self.start_tolerance_p = tolerance_mm / template.presence_half_range_mm;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrerequisiteResult {
    pub id: PrerequisiteId,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformanceReport {
    pub entries: Vec<PrerequisiteResult>,
}

impl ConformanceReport {
    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn failed(&self) -> Vec<PrerequisiteId> {
        self.entries.iter().filter(|e| !e.passed).map(|e| e.id).collect()
    }

    pub fn get(&self, id: PrerequisiteId) -> &PrerequisiteResult {
        self.entries
            .iter()
            .find(|e| e.id == id)
            .expect("report holds all five prerequisites")
    }
}

/// Evaluates the five structural expectations of a drawing.
pub fn check_prerequisites(
    points: &ModelPoints,
    phases: &[Phase],
    params: &Parameters,
    annotations: &[NormalizedAnnotation],
    config: &PrerequisiteConfig,
) -> ConformanceReport {
    let start = points.p_transition;
    let start_miss = (start.t / config.start_tolerance_t).hypot(start.p / config.start_tolerance_p);
    let a = PrerequisiteResult {
        id: PrerequisiteId::A,
        passed: start_miss <= 1.0,
        detail: format!("line starts at {start}"),
    };

    let b = PrerequisiteResult {
        id: PrerequisiteId::B,
        passed: points.p_return.p <= config.return_threshold,
        detail: format!(
            "line ends at {} (threshold p <= {})",
            points.p_return, config.return_threshold
        ),
    };

    let exit_start = points.p_mentalexit;
    let drops: Vec<&Phase> = phases
        .iter()
        .filter(|p| p.kind == PhaseKind::Dropping && p.start != exit_start)
        .collect();
    let notes: Vec<&NormalizedAnnotation> = annotations
        .iter()
        .filter(|a| a.kind == AnnotationKind::BreakNote)
        .collect();
    let stray: Vec<f64> = notes
        .iter()
        .filter(|n| {
            !drops.iter().any(|d| {
                n.t >= d.start.t - config.annotation_tolerance && n.t <= d.end.t + config.annotation_tolerance
            })
        })
        .map(|n| n.t)
        .collect();
    let rising_breaks = params.breaks.iter().filter(|b| b.sh_break >= 0.0).count();
    let c = PrerequisiteResult {
        id: PrerequisiteId::C,
        passed: stray.is_empty() && rising_breaks == 0,
        detail: if notes.is_empty() {
            format!("{} break(s), no annotated breaks", params.breaks.len())
        } else if stray.is_empty() {
            format!("{} annotated break(s) coincide with dropping phases", notes.len())
        } else {
            let at: Vec<String> = stray.iter().map(|t| format!("{t:.3}")).collect();
            format!("annotated break(s) at t={} do not lie on a dropping phase", at.join(", "))
        },
    };

    let d = PrerequisiteResult {
        id: PrerequisiteId::D,
        passed: params.t_experience >= config.experience_min_fraction,
        detail: format!(
            "experience covers {:.1}% of the timeline (minimum {:.1}%)",
            params.t_experience * 100.0,
            config.experience_min_fraction * 100.0
        ),
    };

    let transition_ok = params.t_transition > params.t_exit;
    let transition_detail = if transition_ok {
        format!("transition longer than exit ({:.3} > {:.3})", params.t_transition, params.t_exit)
    } else {
        format!("transition shorter than exit ({:.3} <= {:.3})", params.t_transition, params.t_exit)
    };
    let (recovery_ok, recovery_detail) = match (params.mean_t_raising(), params.mean_t_dropping()) {
        (Some(r), Some(dr)) if r > dr => (true, format!("recovery longer than drop ({r:.4} > {dr:.4})")),
        (Some(r), Some(dr)) => (false, format!("recovery shorter than drop ({r:.4} <= {dr:.4})")),
        _ => (true, "no recovered breaks to compare".to_owned()),
    };
    let e = PrerequisiteResult {
        id: PrerequisiteId::E,
        passed: transition_ok && recovery_ok,
        detail: format!("{transition_detail}; {recovery_detail}"),
    };

    ConformanceReport {
        entries: vec![a, b, c, d, e],
    }
}

/// Phases, points and parameters of one drawing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveModel {
    pub phases: Vec<Phase>,
    pub points: ModelPoints,
    pub parameters: Parameters,
}

impl DescriptiveModel {
    pub fn from_trace(trace: &NormalizedTrace, params: &SegmentationParams) -> Result<Self, ModelError> {
        let phases = segment_phases(trace, params);
        Self::from_phases(phases, trace)
    }

    pub fn from_phases(phases: Vec<Phase>, trace: &NormalizedTrace) -> Result<Self, ModelError> {
        let points = extract_points(&phases, trace)?;
        let parameters = compute_parameters(&points, &phases);
        Ok(Self {
            phases,
            points,
            parameters,
        })
    }

    pub fn conformance(&self, annotations: &[NormalizedAnnotation], config: &PrerequisiteConfig) -> ConformanceReport {
        check_prerequisites(&self.points, &self.phases, &self.parameters, annotations, config)
    }
}
