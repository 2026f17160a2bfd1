//! Constructed study data with known statistics.
//!
//! Raw study drawings are not available, so these stores are built from
//! polylines whose breaks are placed by hand. Every fixture goes through the
//! regular segmentation, model and matching code; nothing is injected into the
//! records directly.

use std::collections::BTreeMap;

use crate::analysis::{analyze_session, AnalysisConfig, EventSet, GroundTruthEvent, SessionRecord, ANY_GROUP};
use crate::descriptive_model::{ModelError, PrerequisiteId};
use crate::trace_model::{AnnotationKind, NormalizedAnnotation, NormalizedTrace, SourceInfo, TracePoint};

pub const STUDY_ID: &str = "fixture";

/// The five breaks, strongest first.
pub const BIP_LABELS: [&str; 5] = ["Cable Malfunction", "White Screen", "Teleport", "Failed Interaction", "Vibration"];

/// Event ticks of the five-task sheet, spaced so that matching windows do not
/// touch and leave a short gap between them.
pub const TASK_TICKS: [f64; 5] = [0.13, 0.30, 0.47, 0.64, 0.81];

/// Order of the breaks per randomization group, as 1-based ranks.
pub const GROUP_ORDERS: [(&str, [u32; 5]); 3] = [("A", [2, 4, 5, 3, 1]), ("B", [5, 4, 2, 1, 3]), ("C", [1, 4, 3, 5, 2])];

/// One expected cell of the detection table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Table1Cell {
    pub event: &'static str,
    pub group: &'static str,
    pub pos: usize,
    pub detection_pct: f64,
    pub mean_sh_break: Option<f64>,
    pub mean_p_break: Option<f64>,
}

const fn cell(
    event: &'static str,
    group: &'static str,
    pos: usize,
    detection_pct: f64,
    means: Option<(f64, f64)>,
) -> Table1Cell {
    let (mean_sh_break, mean_p_break) = match means {
        Some((sh, pb)) => (Some(sh), Some(pb)),
        None => (None, None),
    };
    Table1Cell {
        event,
        group,
        pos,
        detection_pct,
        mean_sh_break,
        mean_p_break,
    }
}

/// Published detection rates and mean intensities per break and group.
pub const TABLE1: [Table1Cell; 15] = [
    cell("Cable Malfunction", "A", 5, 100.0, Some((-0.33, -0.72))),
    cell("Cable Malfunction", "B", 4, 90.0, Some((-0.28, -0.33))),
    cell("Cable Malfunction", "C", 1, 70.0, Some((-0.28, -0.34))),
    cell("White Screen", "A", 1, 60.0, Some((-0.38, -0.4))),
    cell("White Screen", "B", 3, 70.0, Some((-0.25, -0.03))),
    cell("White Screen", "C", 5, 70.0, Some((-0.28, -0.29))),
    cell("Teleport", "A", 4, 30.0, Some((-0.45, -0.15))),
    cell("Teleport", "B", 5, 50.0, Some((-0.18, 0.08))),
    cell("Teleport", "C", 3, 40.0, Some((-0.3, -0.11))),
    cell("Failed Interaction", "A", 2, 70.0, Some((-0.2, -0.23))),
    cell("Failed Interaction", "B", 2, 90.0, Some((-0.15, 0.23))),
    cell("Failed Interaction", "C", 2, 50.0, Some((-0.34, -0.2))),
    cell("Vibration", "A", 3, 20.0, Some((-0.1, 0.19))),
    cell("Vibration", "B", 1, 0.0, None),
    cell("Vibration", "C", 4, 20.0, Some((-0.22, 0.09))),
];

/// Traces plus the ground truth they were drawn against.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub events: EventSet,
    pub traces: Vec<NormalizedTrace>,
}

impl Fixture {
    pub fn analyze(&self, config: &AnalysisConfig) -> Result<Vec<SessionRecord>, ModelError> {
        self.traces
            .iter()
            .map(|trace| {
                let events = self
                    .events
                    .events_for(&trace.source.group)
                    .expect("fixture groups have events");
                analyze_session(STUDY_ID, trace.clone(), events, config)
            })
            .collect()
    }
}

fn polyline(vertices: &[(f64, f64)], participant: &str, group: &str) -> NormalizedTrace {
    NormalizedTrace {
        samples: vertices.iter().map(|&(t, p)| TracePoint::new(t, p)).collect(),
        annotations: Vec::new(),
        source: SourceInfo {
            participant_id: participant.to_owned(),
            group: group.to_owned(),
            ..Default::default()
        },
    }
}

/// A break to draw right after an event tick.
#[derive(Debug, Clone, Copy)]
struct Drawn {
    tick: f64,
    sh: f64,
    p_break: f64,
}

impl Drawn {
    fn level(&self) -> f64 {
        self.p_break - self.sh
    }
}

const OPENING_LEVEL: f64 = 0.6;
const OPENING_END: f64 = 0.06;
const BREAK_DELAY: f64 = 0.01;
const BREAK_DROP: f64 = 0.01;
const BREAK_RAISE: f64 = 0.0125;
const EXIT_START: f64 = 0.95;
const EXIT_LEVEL: f64 = -0.95;

/// Vertices of a drawing with one break per entry of `breaks` (in tick
/// order). Between breaks the drawing returns to the next plateau level,
/// dropping in the gap between matching windows when the level is lower.
fn five_task_vertices(breaks: &[Drawn]) -> Vec<(f64, f64)> {
    let mut v = vec![(0.0, 0.0)];
    match breaks.first() {
        Some(first) if first.level() <= OPENING_LEVEL - 0.05 => {
            v.push((OPENING_END, OPENING_LEVEL));
            v.push((0.08, OPENING_LEVEL));
            v.push((0.092, first.level()));
        }
        Some(first) => v.push((OPENING_END, first.level())),
        None => v.push((OPENING_END, OPENING_LEVEL)),
    }
    for (i, b) in breaks.iter().enumerate() {
        let start = b.tick + BREAK_DELAY;
        let bottom = start + BREAK_DROP;
        v.push((start, b.level()));
        v.push((bottom, b.p_break));
        let next = breaks.get(i + 1).map(Drawn::level);
        match next {
            Some(level) if level >= b.p_break + 0.1 => v.push((bottom + BREAK_RAISE, level)),
            _ => {
                let recovered = (b.p_break + 0.4).min(0.95);
                v.push((bottom + BREAK_RAISE, recovered));
                if let Some(level) = next {
                    debug_assert!(recovered - level > 0.1);
                    let gap = b.tick + 0.125;
                    v.push((gap + 0.004, recovered));
                    v.push((gap + 0.016, level));
                }
            }
        }
    }
    let last = v.last().expect("non-empty").1;
    v.push((EXIT_START, last));
    v.push((1.0, EXIT_LEVEL));
    v
}

/// Symmetric spread around zero: paired +1/-1, with a trailing 0 for odd counts.
fn spread(j: usize, k: usize) -> f64 {
    if k % 2 == 1 && j == k - 1 {
        0.0
    } else if j % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn five_task_events(group: &str, order: [u32; 5]) -> (String, Vec<GroundTruthEvent>) {
    let events = order
        .iter()
        .zip(TASK_TICKS)
        .map(|(&rank, tick_t)| GroundTruthEvent {
            label: BIP_LABELS[rank as usize - 1].to_owned(),
            tick_t,
            expected_bip: true,
            bip_rank: Some(rank),
        })
        .collect();
    (group.to_owned(), events)
}

/// Thirty records in three groups of ten whose matched breaks reproduce
/// [`TABLE1`].
pub fn table1() -> Fixture {
    let mut traces = Vec::new();
    for (group, order) in GROUP_ORDERS {
        let mut per_record: Vec<Vec<Drawn>> = vec![Vec::new(); 10];
        for (pos, &rank) in order.iter().enumerate() {
            let label = BIP_LABELS[rank as usize - 1];
            let c = TABLE1
                .iter()
                .find(|c| c.event == label && c.group == group)
                .expect("every cell is listed");
            let k = (c.detection_pct / 10.0).round() as usize;
            let (Some(sh), Some(pb)) = (c.mean_sh_break, c.mean_p_break) else {
                continue;
            };
            for j in 0..k {
                let record = (2 * rank as usize + j) % 10;
                per_record[record].push(Drawn {
                    tick: TASK_TICKS[pos],
                    sh: sh + 0.03 * spread(j, k),
                    p_break: pb + 0.02 * spread(j, k),
                });
            }
        }
        for (i, breaks) in per_record.iter_mut().enumerate() {
            breaks.sort_by(|a, b| a.tick.total_cmp(&b.tick));
            traces.push(polyline(
                &five_task_vertices(breaks),
                &format!("{group}{:02}", i + 1),
                group,
            ));
        }
    }
    let groups: BTreeMap<_, _> = GROUP_ORDERS.iter().map(|&(g, o)| five_task_events(g, o)).collect();
    Fixture {
        events: EventSet::new(groups).expect("valid events"),
        traces,
    }
}

/// Median presence at the break per event, strongest first.
pub const INTENSITY_MEDIANS: [f64; 5] = [-0.5, -0.3, -0.1, 0.0, 0.2];

/// Ten records that report every break, with presence at the break centered
/// on [`INTENSITY_MEDIANS`].
pub fn intensity() -> Fixture {
    const OFFSETS: [f64; 10] = [-0.04, -0.03, -0.02, -0.01, 0.0, 0.0, 0.01, 0.02, 0.03, 0.04];
    let traces = (0..10)
        .map(|r| {
            let breaks: Vec<Drawn> = INTENSITY_MEDIANS
                .iter()
                .zip(TASK_TICKS)
                .map(|(&m, tick)| Drawn {
                    tick,
                    sh: -0.2,
                    p_break: m + OFFSETS[(r + 3) % 10],
                })
                .collect();
            polyline(&five_task_vertices(&breaks), &format!("I{:02}", r + 1), "A")
        })
        .collect();
    let groups = BTreeMap::from([five_task_events("A", [1, 2, 3, 4, 5])]);
    Fixture {
        events: EventSet::new(groups).expect("valid events"),
        traces,
    }
}

/// Target values of the global-statistics fixture.
pub mod global_targets {
    pub const T_TRANSITION_MEAN: f64 = 0.21;
    pub const T_TRANSITION_SD: f64 = 0.10;
    pub const T_EXIT_MEAN: f64 = 0.08;
    pub const T_EXIT_SD: f64 = 0.05;
    pub const TOTAL_BIPS: usize = 118;
    pub const MATCHED_BIPS: usize = 97;
    pub const DROP_RAISE_RATIO: f64 = 0.8;
}

pub const GLOBAL_TICKS: [f64; 4] = [0.45, 0.57, 0.69, 0.81];

/// Thirty records with 118 breaks, 97 of them at an event. Transition and
/// exit durations take two values each, placed symmetrically so that the
/// sample mean and SD hit the targets.
pub fn global_stats() -> Fixture {
    use global_targets::*;
    const N: usize = 30;
    const UNEXPLAINED_AT: f64 = 0.33;
    const DROPS: [f64; 2] = [0.008, 0.012];
    const RAISES: [f64; 2] = [0.01, 0.015];
    const PLATEAU: f64 = 0.7;
    const BOTTOM: f64 = 0.4;

    // With two values at mean ± d over n samples the sample SD is d·sqrt(n/(n-1)).
    let half = ((N - 1) as f64 / N as f64).sqrt();
    let mut counter = 0usize;
    let traces = (0..N)
        .map(|r| {
            let sign_t = if r % 2 == 1 { 1.0 } else { -1.0 };
            let sign_x = if r < N / 2 { 1.0 } else { -1.0 };
            let t_transition = T_TRANSITION_MEAN + sign_t * T_TRANSITION_SD * half;
            let t_exit = T_EXIT_MEAN + sign_x * T_EXIT_SD * half;

            let matched = match r {
                0 | 1 => 2,
                2..=20 => 3,
                _ => 4,
            };
            let mut starts: Vec<f64> = Vec::new();
            if r <= 20 {
                starts.push(UNEXPLAINED_AT);
            }
            starts.extend(GLOBAL_TICKS.iter().take(matched).map(|t| t + BREAK_DELAY));

            let mut v = vec![(0.0, 0.0), (t_transition, PLATEAU)];
            for s in starts {
                let (d, u) = (DROPS[counter % 2], RAISES[counter % 2]);
                counter += 1;
                v.extend([(s, PLATEAU), (s + d, BOTTOM), (s + d + u, PLATEAU)]);
            }
            v.extend([(1.0 - t_exit, PLATEAU), (1.0, -0.9)]);
            polyline(&v, &format!("G{:02}", r + 1), "G")
        })
        .collect();

    let events = GLOBAL_TICKS
        .iter()
        .enumerate()
        .map(|(i, &tick_t)| GroundTruthEvent {
            label: format!("task {}", i + 1),
            tick_t,
            expected_bip: true,
            bip_rank: None,
        })
        .collect();
    Fixture {
        events: EventSet::new(BTreeMap::from([(ANY_GROUP.to_owned(), events)])).expect("valid events"),
        traces,
    }
}

/// Corners of the reference drawing: opening raise, two breaks (one abrupt,
/// one gradual), and the exit.
pub const EXEMPLAR_CORNERS: [(f64, f64); 10] = [
    (0.0, 0.0),
    (0.18, 0.7),
    (0.35, 0.7),
    (0.37, 0.1),
    (0.41, 0.65),
    (0.55, 0.65),
    (0.62, 0.2),
    (0.72, 0.75),
    (0.92, 0.75),
    (1.0, -0.95),
];

/// The reference drawing sampled every 0.002 with a small hand tremor.
pub fn exemplar() -> NormalizedTrace {
    const STEPS: usize = 500;
    let samples = (0..=STEPS)
        .map(|i| {
            let t = i as f64 / STEPS as f64;
            let k = EXEMPLAR_CORNERS
                .windows(2)
                .position(|w| t <= w[1].0)
                .expect("t within the drawing");
            let (a, b) = (EXEMPLAR_CORNERS[k], EXEMPLAR_CORNERS[k + 1]);
            let p = a.1 + (t - a.0) / (b.0 - a.0) * (b.1 - a.1);
            TracePoint::new(t, p + 0.004 * (157.0 * t).sin())
        })
        .collect();
    NormalizedTrace {
        samples,
        annotations: vec![NormalizedAnnotation {
            t: 0.36,
            kind: AnnotationKind::BreakNote,
            text: "game froze".into(),
        }],
        source: SourceInfo {
            participant_id: "P04".into(),
            group: "A".into(),
            ..Default::default()
        },
    }
}

/// Five drawings, each violating exactly the named prerequisite.
pub fn prerequisite_violations() -> Vec<(PrerequisiteId, NormalizedTrace)> {
    let good = |transition_end: f64, exit_start: f64| {
        vec![
            (0.0, 0.0),
            (transition_end, 0.7),
            (0.5, 0.7),
            (0.52, 0.3),
            (0.56, 0.7),
            (exit_start, 0.7),
            (1.0, -0.9),
        ]
    };

    let mut late_start = good(0.2, 0.9);
    late_start[0] = (0.05, 0.0);

    let mut shallow_return = good(0.2, 0.9);
    shallow_return[6] = (1.0, -0.2);

    let mut misplaced_note = polyline(&good(0.2, 0.9), "c", "A");
    misplaced_note.annotations.push(NormalizedAnnotation {
        t: 0.3,
        kind: AnnotationKind::BreakNote,
        text: "felt strange".into(),
    });

    vec![
        (PrerequisiteId::A, polyline(&late_start, "a", "A")),
        (PrerequisiteId::B, polyline(&shallow_return, "b", "A")),
        (PrerequisiteId::C, misplaced_note),
        (PrerequisiteId::D, polyline(&good(0.4, 0.88), "d", "A")),
        (PrerequisiteId::E, polyline(&good(0.05, 0.92), "e", "A")),
    ]
}
