//! Turning a noisy normalized trace into constant / raising / dropping phases.
//!
//! The trace is first reduced to a polyline with Ramer-Douglas-Peucker, then
//! each chord is labeled by its slope. Short, low-shift wiggles are folded into
//! a neighbor so pen jitter does not split a phase.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::trace_model::{NormalizedTrace, TracePoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentationParams {
    /// Maximum perpendicular distance of a dropped sample from the simplified polyline.
    pub tolerance: f64,
    /// Slopes with a smaller magnitude (presence units per timeline) are constant.
    pub eps_slope: f64,
    /// Phases shorter than this (fraction of timeline) are candidates for absorption.
    pub min_duration: f64,
}

impl Default for SegmentationParams {
    fn default() -> Self {
        Self {
            tolerance: 0.02,
            eps_slope: 0.1,
            min_duration: 0.01,
        }
    }
}

/// One chord of the simplified polyline. A vertical stroke yields a segment of
/// zero duration whose slope is infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: TracePoint,
    pub end: TracePoint,
}

impl Segment {
    pub fn duration(&self) -> f64 {
        self.end.t - self.start.t
    }

    pub fn shift(&self) -> f64 {
        self.end.p - self.start.p
    }

    pub fn slope(&self) -> f64 {
        slope_of(self.shift(), self.duration())
    }
}

fn slope_of(shift: f64, duration: f64) -> f64 {
    if duration > 0.0 {
        shift / duration
    } else if shift > 0.0 {
        f64::INFINITY
    } else if shift < 0.0 {
        f64::NEG_INFINITY
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseKind {
    Constant,
    Raising,
    Dropping,
}

impl PhaseKind {
    pub fn from_slope(slope: f64, eps_slope: f64) -> Self {
        if slope.abs() < eps_slope {
            Self::Constant
        } else if slope > 0.0 {
            Self::Raising
        } else {
            Self::Dropping
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Constant => "constant",
            Self::Raising => "raising",
            Self::Dropping => "dropping",
        }
    }
}

impl fmt::Display for PhaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub kind: PhaseKind,
    pub start: TracePoint,
    pub end: TracePoint,
}

impl Phase {
    pub fn duration(&self) -> f64 {
        self.end.t - self.start.t
    }

    pub fn shift(&self) -> f64 {
        self.end.p - self.start.p
    }

    pub fn slope(&self) -> f64 {
        slope_of(self.shift(), self.duration())
    }

    fn chord(&self) -> Segment {
        Segment {
            start: self.start,
            end: self.end,
        }
    }
}

/// Distance from `p` to the segment `a`-`b` in the (t, p) plane.
pub(crate) fn segment_distance(p: TracePoint, a: TracePoint, b: TracePoint) -> f64 {
    let (dt, dp) = (b.t - a.t, b.p - a.p);
    let len_sq = dt * dt + dp * dp;
    if len_sq == 0.0 {
        return (p.t - a.t).hypot(p.p - a.p);
    }
    let along = ((p.t - a.t) * dt + (p.p - a.p) * dp) / len_sq;
    let along = along.clamp(0.0, 1.0);
    (p.t - (a.t + along * dt)).hypot(p.p - (a.p + along * dp))
}

/// Ramer-Douglas-Peucker simplification of the trace. Endpoints are kept
/// exactly; every dropped sample lies within `tolerance` of the result.
pub fn simplify(trace: &NormalizedTrace, tolerance: f64) -> Vec<Segment> {
    simplify_points(&trace.samples, tolerance)
}

pub fn simplify_points(samples: &[TracePoint], tolerance: f64) -> Vec<Segment> {
    let mut points: Vec<TracePoint> = Vec::with_capacity(samples.len());
    for &s in samples {
        if points.last() != Some(&s) {
            points.push(s);
        }
    }
    if points.len() < 2 {
        return Vec::new();
    }

    let last = points.len() - 1;
    let mut keep = vec![false; points.len()];
    keep[0] = true;
    keep[last] = true;
    let mut stack = vec![(0usize, last)];
    while let Some((first, end)) = stack.pop() {
        if end <= first + 1 {
            continue;
        }
        let (a, b) = (points[first], points[end]);
        let mut farthest = first;
        let mut max_dist = 0.0;
        for (i, &p) in points.iter().enumerate().take(end).skip(first + 1) {
            let d = segment_distance(p, a, b);
            if d > max_dist {
                max_dist = d;
                farthest = i;
            }
        }
        if max_dist > tolerance {
            keep[farthest] = true;
            stack.push((farthest, end));
            stack.push((first, farthest));
        }
    }

    let kept: Vec<TracePoint> = points
        .iter()
        .zip(&keep)
        .filter_map(|(p, &k)| k.then_some(*p))
        .collect();
    kept.windows(2)
        .map(|w| Segment {
            start: w[0],
            end: w[1],
        })
        .collect()
}

/// Labels contiguous segments and folds them into phases.
pub fn classify(segments: &[Segment], params: &SegmentationParams) -> Vec<Phase> {
    let mut phases: Vec<Phase> = segments
        .iter()
        .map(|s| Phase {
            kind: PhaseKind::from_slope(s.slope(), params.eps_slope),
            start: s.start,
            end: s.end,
        })
        .collect();
    merge_same_kind(&mut phases);

    while phases.len() > 1 {
        let Some(idx) = next_absorbable(&phases, params) else {
            break;
        };
        absorb(&mut phases, idx, params);
        merge_same_kind(&mut phases);
    }
    phases
}

/// Simplifies and classifies a trace.
///
/// Slopes, distances and durations are measured against the time the trace
/// actually covers, so shifting or stretching the time axis does not change
/// the result. Phase endpoints are always original samples.
pub fn segment_phases(trace: &NormalizedTrace, params: &SegmentationParams) -> Vec<Phase> {
    let samples = &trace.samples;
    let (Some(first), Some(last)) = (samples.first(), samples.last()) else {
        return Vec::new();
    };
    let (origin, span) = (first.t, last.t - first.t);
    if !(span > 0.0 && span.is_finite()) {
        return classify(&simplify_points(samples, params.tolerance), params);
    }
    let unit: Vec<TracePoint> = samples
        .iter()
        .map(|s| TracePoint::new((s.t - origin) / span, s.p))
        .collect();
    let phases = classify(&simplify_points(&unit, params.tolerance), params);

    let mut cursor = 0;
    let mut original = |q: TracePoint| {
        while unit[cursor] != q {
            cursor += 1;
        }
        samples[cursor]
    };
    phases
        .into_iter()
        .map(|ph| Phase {
            kind: ph.kind,
            start: original(ph.start),
            end: original(ph.end),
        })
        .collect()
}

/// The polyline through the phase boundaries.
pub fn phase_vertices(phases: &[Phase]) -> Vec<TracePoint> {
    let mut out = Vec::with_capacity(phases.len() + 1);
    if let Some(first) = phases.first() {
        out.push(first.start);
    }
    out.extend(phases.iter().map(|p| p.end));
    out
}

fn merge_same_kind(phases: &mut Vec<Phase>) {
    let mut merged: Vec<Phase> = Vec::with_capacity(phases.len());
    for phase in phases.drain(..) {
        match merged.last_mut() {
            Some(prev) if prev.kind == phase.kind => prev.end = phase.end,
            _ => merged.push(phase),
        }
    }
    *phases = merged;
}

/// Junction errors closer than this count as a tie.
const TIE_EPSILON: f64 = 1e-12;

fn next_absorbable(phases: &[Phase], params: &SegmentationParams) -> Option<usize> {
    phases
        .iter()
        .enumerate()
        .filter(|(_, p)| {
            p.duration() < params.min_duration && p.shift().abs() < 2.0 * params.tolerance
        })
        .min_by(|(ia, a), (ib, b)| a.duration().total_cmp(&b.duration()).then(ia.cmp(ib)))
        .map(|(i, _)| i)
}

/// Merges phase `idx` into the neighbor whose straightened chord stays closest
/// to the removed junction; ties go left.
fn absorb(phases: &mut Vec<Phase>, idx: usize, params: &SegmentationParams) {
    let target = phases[idx];
    let left = idx.checked_sub(1).map(|i| phases[i]);
    let right = phases.get(idx + 1).copied();

    let left_error = left.map(|l| segment_distance(l.end, l.start, target.end));
    let right_error = right.map(|r| segment_distance(r.start, target.start, r.end));
    let into_left = match (left_error, right_error) {
        (Some(l), Some(r)) => l <= r + TIE_EPSILON,
        (Some(_), None) => true,
        _ => false,
    };

    let (keep_idx, merged) = if into_left {
        let l = left.expect("left neighbor exists");
        (idx - 1, Phase { kind: l.kind, start: l.start, end: target.end })
    } else {
        let r = right.expect("right neighbor exists");
        (idx, Phase { kind: r.kind, start: target.start, end: r.end })
    };
    phases[keep_idx] = relabel(merged, params);
    phases.remove(if into_left { idx } else { idx + 1 });
}

/// Keeps the absorbing neighbor's kind unless the merged chord contradicts it.
fn relabel(mut phase: Phase, params: &SegmentationParams) -> Phase {
    let chord_kind = PhaseKind::from_slope(phase.chord().slope(), params.eps_slope);
    let consistent = match phase.kind {
        PhaseKind::Constant => chord_kind == PhaseKind::Constant,
        PhaseKind::Raising => phase.shift() > 0.0,
        PhaseKind::Dropping => phase.shift() < 0.0,
    };
    if !consistent {
        phase.kind = chord_kind;
    }
    phase
}
