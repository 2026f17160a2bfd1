//! Generators shared by the integration tests.
#![allow(dead_code)]

use presence_trace_core::segmentation::{PhaseKind, SegmentationParams};
use presence_trace_core::trace_model::{NormalizedTrace, RawSample, RawTrace, SourceInfo, TracePoint};
use rand::rngs::StdRng;
use rand::Rng;

pub const STEPS: usize = 500;
pub const STEP: f64 = 1.0 / STEPS as f64;

/// A noise-free piecewise-linear drawing sampled on a uniform grid.
#[derive(Debug, Clone)]
pub struct Generated {
    /// Grid indices of the piece boundaries, first 0 and last `STEPS`.
    pub breaks: Vec<usize>,
    pub kinds: Vec<PhaseKind>,
    pub values: Vec<f64>,
}

impl Generated {
    pub fn trace(&self) -> NormalizedTrace {
        NormalizedTrace {
            samples: self
                .values
                .iter()
                .enumerate()
                .map(|(i, &p)| TracePoint::new(i as f64 / STEPS as f64, p))
                .collect(),
            annotations: vec![],
            source: SourceInfo {
                participant_id: "gen".into(),
                group: "A".into(),
                ..Default::default()
            },
        }
    }

    fn vertex(&self, k: usize) -> (f64, f64) {
        let i = self.breaks[k];
        (i as f64 / STEPS as f64, self.values[i])
    }
}

fn distance_to_chord(a: (f64, f64), b: (f64, f64), q: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let w = (((q.0 - a.0) * dx + (q.1 - a.1) * dy) / len2).clamp(0.0, 1.0);
    ((q.0 - a.0 - w * dx).powi(2) + (q.1 - a.1 - w * dy).powi(2)).sqrt()
}

/// Every breakpoint survives simplification when each chord that skips one
/// has some skipped breakpoint clearly beyond the tolerance.
pub fn detectable(g: &Generated, params: &SegmentationParams) -> bool {
    let n = g.breaks.len();
    for i in 0..n {
        for j in i + 2..n {
            let (a, b) = (g.vertex(i), g.vertex(j));
            let far = (i + 1..j).any(|k| distance_to_chord(a, b, g.vertex(k)) > 1.5 * params.tolerance);
            if !far {
                return false;
            }
        }
    }
    true
}

fn pick_kind(rng: &mut StdRng, previous: Option<PhaseKind>) -> PhaseKind {
    loop {
        let k = match rng.gen_range(0..3) {
            0 => PhaseKind::Constant,
            1 => PhaseKind::Raising,
            _ => PhaseKind::Dropping,
        };
        if Some(k) != previous {
            return k;
        }
    }
}

/// Draws a candidate; pieces last at least six grid steps, constant slopes
/// stay within 0.04 and the others are between 0.3 and 6 in magnitude.
pub fn generate(rng: &mut StdRng) -> Option<Generated> {
    let pieces = rng.gen_range(2..=9);
    let min_len = 6;
    let spare = STEPS - pieces * min_len;
    let mut cuts: Vec<usize> = (0..pieces - 1).map(|_| rng.gen_range(0..=spare)).collect();
    cuts.sort_unstable();
    let mut breaks = vec![0];
    for (k, c) in cuts.iter().chain(std::iter::once(&spare)).enumerate() {
        breaks.push(c + (k + 1) * min_len);
    }

    let mut values = vec![0.0; STEPS + 1];
    values[0] = rng.gen_range(-0.3..0.3);
    let mut kinds = Vec::new();
    let mut previous = None;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = (b - a) as f64 * STEP;
        let start = values[a];
        let kind = pick_kind(rng, previous);
        let slope = match kind {
            PhaseKind::Constant => rng.gen_range(-0.04..0.04),
            PhaseKind::Raising => rng.gen_range(0.3..6.0),
            PhaseKind::Dropping => -rng.gen_range(0.3..6.0),
        };
        let end = start + slope * len;
        if !(-1.0..=1.0).contains(&end) {
            return None;
        }
        for i in a..=b {
            values[i] = start + slope * ((i - a) as f64 * STEP);
        }
        kinds.push(kind);
        previous = Some(kind);
    }
    Some(Generated { breaks, kinds, values })
}

/// Keeps drawing until a candidate passes the detectability check.
pub fn generate_detectable(rng: &mut StdRng, params: &SegmentationParams, rejected: &mut usize) -> Generated {
    loop {
        match generate(rng) {
            Some(g) if detectable(&g, params) => return g,
            _ => *rejected += 1,
        }
    }
}

/// A monotone hand-drawn line on a sheet of the given size.
pub fn raw_trace(rng: &mut StdRng, len_mm: f64, half_mm: f64) -> RawTrace {
    let n = rng.gen_range(2..200);
    let end = len_mm * rng.gen_range(0.92..1.04);
    let mut xs: Vec<f64> = (0..n).map(|_| rng.gen_range(2.0..end)).collect();
    xs.sort_by(f64::total_cmp);
    xs[0] = rng.gen_range(0.0..2.0);
    xs.push(end);
    let samples = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| RawSample {
            x_mm: x,
            y_mm: if i == 0 { rng.gen_range(-2.0..2.0) } else { rng.gen_range(-half_mm..half_mm) },
        })
        .collect();
    RawTrace {
        samples,
        annotations: vec![],
        source: SourceInfo {
            participant_id: "raw".into(),
            ..Default::default()
        },
    }
}
