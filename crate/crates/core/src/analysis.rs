//! Break-in-presence reports, matching against known events, and aggregation
//! of analyzed sessions into detection and intensity statistics.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::descriptive_model::{
    ConformanceReport, DescriptiveModel, ModelError, ModelPoints, Parameters, PrerequisiteConfig,
};
use crate::segmentation::{Phase, SegmentationParams};
use crate::trace_model::{check_schema_version, NormalizedTrace, TraceError, TracePoint, SCHEMA_VERSION};

/// Window edges are inclusive; this absorbs rounding in `tick ± width`.
const WINDOW_EDGE_SLACK: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("no analyzed records to aggregate")]
    NoRecords,
    #[error("event `{label}` has tick {tick_t} outside [0, 1]")]
    TickOutOfRange { label: String, tick_t: f64 },
    #[error("duplicate event label `{label}` in group `{group}`")]
    DuplicateLabel { group: String, label: String },
    #[error("bip_rank {rank} used twice in group `{group}`")]
    DuplicateRank { group: String, rank: u32 },
    #[error("no events defined for group `{group}`")]
    UnknownGroup { group: String },
    #[error(transparent)]
    Document(#[from] TraceError),
    #[error("malformed events document: {0}")]
    Parse(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthEvent {
    pub label: String,
    pub tick_t: f64,
    #[serde(default = "yes")]
    pub expected_bip: bool,
    /// 1 is the strongest expected break.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bip_rank: Option<u32>,
}

fn yes() -> bool {
    true
}

/// Known events per randomization group. The group `*` applies to any group
/// without its own list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSet {
    #[serde(default = "schema_version")]
    pub schema_version: String,
    pub groups: BTreeMap<String, Vec<GroundTruthEvent>>,
}

fn schema_version() -> String {
    SCHEMA_VERSION.to_owned()
}

pub const ANY_GROUP: &str = "*";

impl EventSet {
    pub fn new(groups: BTreeMap<String, Vec<GroundTruthEvent>>) -> Result<Self, AnalysisError> {
        let mut set = Self {
            schema_version: schema_version(),
            groups,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn from_json(text: &str) -> Result<Self, AnalysisError> {
        let mut set: EventSet = serde_json::from_str(text)?;
        check_schema_version(&set.schema_version)?;
        set.validate()?;
        Ok(set)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("event set serializes")
    }

    fn validate(&mut self) -> Result<(), AnalysisError> {
        for (group, events) in &mut self.groups {
            let mut labels = HashSet::new();
            let mut ranks = HashSet::new();
            for e in events.iter() {
                if !(e.tick_t.is_finite() && (0.0..=1.0).contains(&e.tick_t)) {
                    return Err(AnalysisError::TickOutOfRange {
                        label: e.label.clone(),
                        tick_t: e.tick_t,
                    });
                }
                if !labels.insert(e.label.clone()) {
                    return Err(AnalysisError::DuplicateLabel {
                        group: group.clone(),
                        label: e.label.clone(),
                    });
                }
                if let (true, Some(rank)) = (e.expected_bip, e.bip_rank) {
                    if !ranks.insert(rank) {
                        return Err(AnalysisError::DuplicateRank {
                            group: group.clone(),
                            rank,
                        });
                    }
                }
            }
            events.sort_by(|a, b| a.tick_t.total_cmp(&b.tick_t));
        }
        Ok(())
    }

    pub fn events_for(&self, group: &str) -> Result<&[GroundTruthEvent], AnalysisError> {
        self.groups
            .get(group)
            .or_else(|| self.groups.get(ANY_GROUP))
            .map(Vec::as_slice)
            .ok_or_else(|| AnalysisError::UnknownGroup {
                group: group.to_owned(),
            })
    }

    /// Rank of an event label, taken from the first group that ranks it.
    pub fn rank_of(&self, label: &str) -> Option<u32> {
        self.groups
            .values()
            .flatten()
            .find(|e| e.label == label && e.bip_rank.is_some())
            .and_then(|e| e.bip_rank)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchWindow {
    pub before: f64,
    pub after: f64,
}

impl Default for MatchWindow {
    fn default() -> Self {
        Self {
            before: 0.025,
            after: 0.125,
        }
    }
}

impl MatchWindow {
    pub fn contains(&self, tick_t: f64, t: f64) -> bool {
        t >= tick_t - self.before - WINDOW_EDGE_SLACK && t <= tick_t + self.after + WINDOW_EDGE_SLACK
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BipReport {
    pub p_dropping: TracePoint,
    pub p_break: TracePoint,
    pub sh_break: f64,
    pub t_dropping: f64,
    pub t_raising: Option<f64>,
    #[serde(default)]
    pub recovery_plateau: Option<f64>,
    pub matched_event: Option<String>,
}

/// One report per interior break of the model, not yet matched.
pub fn bip_reports(points: &ModelPoints, params: &Parameters) -> Vec<BipReport> {
    points
        .breaks
        .iter()
        .zip(&params.breaks)
        .map(|(pts, prm)| BipReport {
            p_dropping: pts.p_dropping,
            p_break: pts.p_break,
            sh_break: prm.sh_break,
            t_dropping: prm.t_dropping,
            t_raising: prm.t_raising,
            recovery_plateau: prm.recovery_plateau,
            matched_event: None,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowOverlap {
    pub first: String,
    pub second: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MatchOutcome {
    /// For each BIP, the index of the event it was assigned to.
    pub assignment: Vec<Option<usize>>,
    /// BIPs that fall in no event window, or lost every window to a nearer BIP.
    pub unexplained: Vec<usize>,
    pub overlaps: Vec<WindowOverlap>,
}

impl MatchOutcome {
    pub fn matched_count(&self) -> usize {
        self.assignment.iter().flatten().count()
    }

    /// The BIP assigned to event `event_idx`, if any.
    pub fn bip_for_event(&self, event_idx: usize) -> Option<usize> {
        self.assignment.iter().position(|a| *a == Some(event_idx))
    }
}

/// Greedily assigns BIPs to events in tick order. Only events expected to
/// cause a break take part. Each event takes the candidate whose drop starts
/// nearest its tick; ties go to the earlier BIP.
pub fn match_events(bips: &[BipReport], events: &[GroundTruthEvent], window: &MatchWindow) -> MatchOutcome {
    let mut assignment: Vec<Option<usize>> = vec![None; bips.len()];
    let mut order: Vec<usize> = (0..events.len()).filter(|&i| events[i].expected_bip).collect();
    order.sort_by(|&a, &b| events[a].tick_t.total_cmp(&events[b].tick_t).then(a.cmp(&b)));

    let mut overlaps = Vec::new();
    for pair in order.windows(2) {
        let (a, b) = (&events[pair[0]], &events[pair[1]]);
        if b.tick_t - window.before <= a.tick_t + window.after {
            overlaps.push(WindowOverlap {
                first: a.label.clone(),
                second: b.label.clone(),
            });
        }
    }

    for &ei in &order {
        let tick = events[ei].tick_t;
        let winner = bips
            .iter()
            .enumerate()
            .filter(|(bi, b)| {
                assignment[*bi].is_none()
                    && (window.contains(tick, b.p_dropping.t) || window.contains(tick, b.p_break.t))
            })
            .min_by(|(ia, a), (ib, b)| {
                let da = (a.p_dropping.t - tick).abs();
                let db = (b.p_dropping.t - tick).abs();
                da.total_cmp(&db)
                    .then(a.p_dropping.t.total_cmp(&b.p_dropping.t))
                    .then(ia.cmp(ib))
            })
            .map(|(bi, _)| bi);
        if let Some(bi) = winner {
            assignment[bi] = Some(ei);
        }
    }

    let unexplained = assignment
        .iter()
        .enumerate()
        .filter_map(|(i, a)| a.is_none().then_some(i))
        .collect();
    MatchOutcome {
        assignment,
        unexplained,
        overlaps,
    }
}

/// Writes the matched event labels into the reports.
pub fn apply_matches(bips: &mut [BipReport], events: &[GroundTruthEvent], outcome: &MatchOutcome) {
    for (bip, assigned) in bips.iter_mut().zip(&outcome.assignment) {
        bip.matched_event = assigned.map(|ei| events[ei].label.clone());
    }
}

// ---------------------------------------------------------------------------
// Session records
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SessionKey {
    pub study_id: String,
    pub participant_id: String,
}

impl std::fmt::Display for SessionKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.study_id, self.participant_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStatus {
    /// Validated and normalized, not yet modeled.
    Provisional,
    Analyzed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub schema_version: String,
    pub study_id: String,
    pub participant_id: String,
    pub group: String,
    pub status: RecordStatus,
    pub trace: Option<NormalizedTrace>,
    #[serde(default)]
    pub phases: Vec<Phase>,
    pub points: Option<ModelPoints>,
    pub parameters: Option<Parameters>,
    #[serde(default)]
    pub bip_reports: Vec<BipReport>,
    pub conformance: Option<ConformanceReport>,
    /// Effective configuration of the run that produced the record.
    #[serde(default)]
    pub run_config: Option<serde_json::Value>,
}

impl SessionRecord {
    pub fn provisional(study_id: &str, trace: NormalizedTrace) -> Self {
        Self {
            schema_version: schema_version(),
            study_id: study_id.to_owned(),
            participant_id: trace.source.participant_id.clone(),
            group: trace.source.group.clone(),
            status: RecordStatus::Provisional,
            trace: Some(trace),
            phases: Vec::new(),
            points: None,
            parameters: None,
            bip_reports: Vec::new(),
            conformance: None,
            run_config: None,
        }
    }

    pub fn key(&self) -> SessionKey {
        SessionKey {
            study_id: self.study_id.clone(),
            participant_id: self.participant_id.clone(),
        }
    }

    pub fn is_analyzed(&self) -> bool {
        self.status == RecordStatus::Analyzed && self.points.is_some() && self.parameters.is_some()
    }

    pub fn matched_count(&self) -> usize {
        self.bip_reports.iter().filter(|b| b.matched_event.is_some()).count()
    }

    pub fn bip_for(&self, event: &str) -> Option<&BipReport> {
        self.bip_reports
            .iter()
            .find(|b| b.matched_event.as_deref() == Some(event))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    pub segmentation: SegmentationParams,
    pub window: MatchWindow,
    pub prerequisites: PrerequisiteConfig,
}

/// Runs the whole model on one normalized drawing.
pub fn analyze_session(
    study_id: &str,
    trace: NormalizedTrace,
    events: &[GroundTruthEvent],
    config: &AnalysisConfig,
) -> Result<SessionRecord, ModelError> {
    let model = DescriptiveModel::from_trace(&trace, &config.segmentation)?;
    let conformance = model.conformance(&trace.annotations, &config.prerequisites);
    let mut bips = bip_reports(&model.points, &model.parameters);
    let outcome = match_events(&bips, events, &config.window);
    apply_matches(&mut bips, events, &outcome);

    let mut record = SessionRecord::provisional(study_id, trace);
    record.status = RecordStatus::Analyzed;
    record.phases = model.phases;
    record.points = Some(model.points);
    record.parameters = Some(model.parameters);
    record.bip_reports = bips;
    record.conformance = Some(conformance);
    Ok(record)
}

// ---------------------------------------------------------------------------
// Descriptive statistics
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    /// Sample standard deviation; absent below two values.
    pub sd: Option<f64>,
    pub n: usize,
}

impl MeanSd {
    pub fn of(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = (n > 1).then(|| {
            let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
            (ss / (n - 1) as f64).sqrt()
        });
        Some(Self { mean, sd, n })
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSummary {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    /// Points beyond 1.5 IQR. They stay in every statistic above.
    pub outliers: Vec<f64>,
}

impl BoxSummary {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let q1 = quantile_sorted(&sorted, 0.25);
        let median = quantile_sorted(&sorted, 0.5);
        let q3 = quantile_sorted(&sorted, 0.75);
        let iqr = q3 - q1;
        let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
        let inside = sorted.iter().copied().filter(|v| (lo_fence..=hi_fence).contains(v));
        let whisker_low = inside.clone().fold(f64::INFINITY, f64::min);
        let whisker_high = inside.fold(f64::NEG_INFINITY, f64::max);
        let outliers = sorted
            .iter()
            .copied()
            .filter(|v| !(lo_fence..=hi_fence).contains(v))
            .collect();
        Some(Self {
            n: sorted.len(),
            min: sorted[0],
            q1,
            median,
            q3,
            max: sorted[sorted.len() - 1],
            whisker_low,
            whisker_high,
            outliers,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRow {
    pub event: String,
    pub group: String,
    /// 1-based position of the event among the group's expected breaks.
    pub pos: Option<usize>,
    pub detection_pct: f64,
    pub mean_sh_break: Option<f64>,
    pub mean_p_break: Option<f64>,
    pub n_matched: usize,
    pub n_records: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantCount {
    pub study_id: String,
    pub participant_id: String,
    pub group: String,
    /// All detected breaks, matched or not.
    pub bip_count: usize,
    pub matched: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalStats {
    pub sessions: usize,
    pub t_transition: Option<MeanSd>,
    pub t_transition_midcross: Option<MeanSd>,
    pub t_exit: Option<MeanSd>,
    pub experience_fraction: Option<MeanSd>,
    pub p_return_t: Option<MeanSd>,
    pub p_return_p: Option<MeanSd>,
    pub bips_per_participant: Option<MeanSd>,
    pub total_bips: usize,
    pub matched_bips: usize,
    pub unexplained_bips: usize,
    pub correct_position_rate: Option<f64>,
    pub drop_raise_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventIntensity {
    pub event: String,
    pub bip_rank: Option<u32>,
    pub n: usize,
    pub p_break: Option<BoxSummary>,
    pub mean_sh_break: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub detection: Vec<DetectionRow>,
    pub participants: Vec<ParticipantCount>,
    pub global: GlobalStats,
    pub intensity: Vec<EventIntensity>,
}

fn analyzed_sorted(records: &[SessionRecord]) -> Vec<&SessionRecord> {
    let mut out: Vec<&SessionRecord> = records.iter().filter(|r| r.is_analyzed()).collect();
    out.sort_by_key(|r| r.key());
    out
}

fn mean_of(values: &[f64]) -> Option<f64> {
    MeanSd::of(values).map(|m| m.mean)
}

/// Event order shared by every table: strongest rank first, unranked last.
fn event_order(events: &EventSet) -> Vec<String> {
    let labels: BTreeSet<&str> = events.groups.values().flatten().map(|e| e.label.as_str()).collect();
    let mut ordered: Vec<String> = labels.into_iter().map(str::to_owned).collect();
    ordered.sort_by_key(|l| (events.rank_of(l).unwrap_or(u32::MAX), l.clone()));
    ordered
}

/// Detection frequency and mean intensity per event and group.
pub fn detection_table(records: &[SessionRecord], events: &EventSet) -> Vec<DetectionRow> {
    let records = analyzed_sorted(records);
    let mut by_group: BTreeMap<&str, Vec<&SessionRecord>> = BTreeMap::new();
    for r in &records {
        by_group.entry(r.group.as_str()).or_default().push(r);
    }

    let mut rows = Vec::new();
    for label in event_order(events) {
        for (group, members) in &by_group {
            let Ok(group_events) = events.events_for(group) else {
                continue;
            };
            let expected: Vec<&GroundTruthEvent> = group_events.iter().filter(|e| e.expected_bip).collect();
            let Some(pos) = expected.iter().position(|e| e.label == label) else {
                continue;
            };
            let hits: Vec<&BipReport> = members.iter().filter_map(|r| r.bip_for(&label)).collect();
            let sh: Vec<f64> = hits.iter().map(|b| b.sh_break).collect();
            let pb: Vec<f64> = hits.iter().map(|b| b.p_break.p).collect();
            rows.push(DetectionRow {
                event: label.clone(),
                group: (*group).to_owned(),
                pos: Some(pos + 1),
                detection_pct: 100.0 * hits.len() as f64 / members.len() as f64,
                mean_sh_break: mean_of(&sh),
                mean_p_break: mean_of(&pb),
                n_matched: hits.len(),
                n_records: members.len(),
            });
        }
    }
    rows
}

/// Full cross-session summary of analyzed records.
pub fn aggregate(records: &[SessionRecord], events: &EventSet) -> Result<AggregateStats, AnalysisError> {
    let sorted = analyzed_sorted(records);
    if sorted.is_empty() {
        return Err(AnalysisError::NoRecords);
    }
    let params: Vec<&Parameters> = sorted.iter().filter_map(|r| r.parameters.as_ref()).collect();
    let points: Vec<&ModelPoints> = sorted.iter().filter_map(|r| r.points.as_ref()).collect();
    let collect = |f: &dyn Fn(&Parameters) -> f64| params.iter().map(|p| f(p)).collect::<Vec<_>>();

    let participants: Vec<ParticipantCount> = sorted
        .iter()
        .map(|r| ParticipantCount {
            study_id: r.study_id.clone(),
            participant_id: r.participant_id.clone(),
            group: r.group.clone(),
            bip_count: r.bip_reports.len(),
            matched: r.matched_count(),
        })
        .collect();
    let counts: Vec<f64> = participants.iter().map(|p| p.bip_count as f64).collect();
    let total_bips: usize = participants.iter().map(|p| p.bip_count).sum();
    let matched_bips: usize = participants.iter().map(|p| p.matched).sum();

    let all_bips: Vec<&BipReport> = sorted.iter().flat_map(|r| &r.bip_reports).collect();
    let recovered: Vec<&&BipReport> = all_bips.iter().filter(|b| b.t_raising.is_some()).collect();
    let drop_raise_ratio = match (
        mean_of(&recovered.iter().map(|b| b.t_dropping).collect::<Vec<_>>()),
        mean_of(&recovered.iter().filter_map(|b| b.t_raising).collect::<Vec<_>>()),
    ) {
        (Some(d), Some(r)) if r > 0.0 => Some(d / r),
        _ => None,
    };

    let midcross: Vec<f64> = params.iter().filter_map(|p| p.t_transition_midcross).collect();
    let global = GlobalStats {
        sessions: sorted.len(),
        t_transition: MeanSd::of(&collect(&|p| p.t_transition)),
        t_transition_midcross: MeanSd::of(&midcross),
        t_exit: MeanSd::of(&collect(&|p| p.t_exit)),
        experience_fraction: MeanSd::of(&collect(&|p| p.t_experience)),
        p_return_t: MeanSd::of(&points.iter().map(|p| p.p_return.t).collect::<Vec<_>>()),
        p_return_p: MeanSd::of(&points.iter().map(|p| p.p_return.p).collect::<Vec<_>>()),
        bips_per_participant: MeanSd::of(&counts),
        total_bips,
        matched_bips,
        unexplained_bips: total_bips - matched_bips,
        correct_position_rate: (total_bips > 0).then(|| matched_bips as f64 / total_bips as f64),
        drop_raise_ratio,
    };

    let intensity = event_order(events)
        .into_iter()
        .map(|label| {
            let hits: Vec<&BipReport> = all_bips
                .iter()
                .copied()
                .filter(|b| b.matched_event.as_deref() == Some(label.as_str()))
                .collect();
            let pb: Vec<f64> = hits.iter().map(|b| b.p_break.p).collect();
            let sh: Vec<f64> = hits.iter().map(|b| b.sh_break).collect();
            EventIntensity {
                bip_rank: events.rank_of(&label),
                event: label,
                n: hits.len(),
                p_break: BoxSummary::of(&pb),
                mean_sh_break: mean_of(&sh),
            }
        })
        .collect();

    Ok(AggregateStats {
        detection: detection_table(records, events),
        participants,
        global,
        intensity,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderedEvent {
    pub event: String,
    pub median_p_break: f64,
    pub bip_rank: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityOrdering {
    /// Strongest (closest to the real world) first.
    pub ordered: Vec<OrderedEvent>,
    /// Events without a single matched break.
    pub omitted: Vec<String>,
    /// Pairwise agreements with the expected ranking; ties count one half.
    pub concordance: Option<f64>,
    pub pairs: usize,
}

/// Orders events by the median presence at the break.
pub fn intensity_ordering(stats: &AggregateStats) -> IntensityOrdering {
    let mut ordered = Vec::new();
    let mut omitted = Vec::new();
    for e in &stats.intensity {
        match &e.p_break {
            Some(summary) => ordered.push(OrderedEvent {
                event: e.event.clone(),
                median_p_break: summary.median,
                bip_rank: e.bip_rank,
            }),
            None => omitted.push(e.event.clone()),
        }
    }
    ordered.sort_by(|a, b| a.median_p_break.total_cmp(&b.median_p_break));

    let ranked: Vec<&OrderedEvent> = ordered.iter().filter(|e| e.bip_rank.is_some()).collect();
    let mut agreements = 0.0;
    let mut pairs = 0;
    for i in 0..ranked.len() {
        for j in i + 1..ranked.len() {
            pairs += 1;
            let (a, b) = (ranked[i], ranked[j]);
            if a.median_p_break == b.median_p_break {
                agreements += 0.5;
            } else if a.bip_rank < b.bip_rank {
                agreements += 1.0;
            }
        }
    }
    IntensityOrdering {
        ordered,
        omitted,
        concordance: (pairs > 0).then_some(agreements),
        pairs,
    }
}
