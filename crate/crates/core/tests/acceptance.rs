//! Acceptance checks. Prints one PASS/FAIL line per criterion and fails the
//! run if any criterion fails.

mod support;

use std::path::PathBuf;

use presence_trace_core::analysis::{
    aggregate, analyze_session, detection_table, intensity_ordering, AnalysisConfig, GroundTruthEvent, SessionRecord,
};
use presence_trace_core::descriptive_model::{extract_points, DescriptiveModel, PrerequisiteConfig, PrerequisiteId};
use presence_trace_core::fixtures::{self, global_targets, Fixture, TABLE1};
use presence_trace_core::persistence::{
    detection_csv, global_stats_json, render_boxplot, render_overlay, OverlayOptions, SessionStore, NO_VALUE,
};
use presence_trace_core::segmentation::{segment_phases, PhaseKind, SegmentationParams};
use presence_trace_core::trace_model::{
    build_template, denormalize, normalize, normalize_with, NormalizedTrace, RawSample, RawTrace, SourceInfo, TemplateConfig,
    TracePoint, ValidationLimits,
};
use rand::rngs::StdRng;
use rand::SeedableRng;

const SEED: u64 = 0x5eed_0f_b1d5;
const MEAN_TOLERANCE: f64 = 0.005;
const ROUND_TRIP_TOLERANCE: f64 = 1e-9;

struct Outcome {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn check(name: &'static str, result: Result<String, String>) -> Outcome {
    match result {
        Ok(detail) => Outcome { name, passed: true, detail },
        Err(detail) => Outcome { name, passed: false, detail },
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn segmentation_oracle() -> Result<String, String> {
    let params = SegmentationParams::default();
    let mut rng = StdRng::seed_from_u64(SEED);
    let mut rejected = 0;
    let mut labels = 0usize;
    for n in 0..1000 {
        let g = support::generate_detectable(&mut rng, &params, &mut rejected);
        let phases = segment_phases(&g.trace(), &params);

        let found: Vec<f64> = phases.windows(2).map(|w| w[0].end.t).collect();
        let expected: Vec<f64> = g.breaks[1..g.breaks.len() - 1]
            .iter()
            .map(|&i| i as f64 * support::STEP)
            .collect();
        ensure(found.len() == expected.len(), || {
            format!("trace {n}: {} boundaries, generator has {}", found.len(), expected.len())
        })?;
        for (f, e) in found.iter().zip(&expected) {
            ensure((f - e).abs() <= support::STEP + 1e-12, || {
                format!("trace {n}: boundary {f} vs generator {e}")
            })?;
        }

        for i in 0..support::STEPS {
            let (a, b) = (g.values[i], g.values[i + 1]);
            let brute = PhaseKind::from_slope((b - a) / support::STEP, params.eps_slope);
            let mid = (i as f64 + 0.5) * support::STEP;
            let phase = phases
                .iter()
                .find(|p| p.start.t <= mid && mid <= p.end.t)
                .ok_or_else(|| format!("trace {n}: no phase covers t={mid}"))?;
            ensure(phase.kind == brute, || {
                format!("trace {n}: interval at t={mid} labeled {} by the phase, {} by slope", phase.kind, brute)
            })?;
            labels += 1;
        }
    }
    Ok(format!(
        "1000 traces ({rejected} undetectable candidates redrawn), {labels} interval labels agree"
    ))
}

/// Millimeter tolerances grow with the sheet.
fn scaled_limits(k: f64) -> ValidationLimits {
    let base = ValidationLimits::default();
    ValidationLimits {
        start_tolerance_mm: base.start_tolerance_mm * k,
        clamp_tolerance_mm: base.clamp_tolerance_mm * k,
        ..base
    }
}

fn normalization_round_trip() -> Result<String, String> {
    use rand::Rng;
    let mut rng = StdRng::seed_from_u64(SEED ^ 1);
    let mut worst: f64 = 0.0;
    let mut scaled_worst: f64 = 0.0;
    for n in 0..1000 {
        let len = rng.gen_range(100.0..300.0);
        let half = rng.gen_range(20.0..60.0);
        let template = build_template(TemplateConfig {
            time_axis_len_mm: Some(len),
            presence_half_range_mm: Some(half),
            ..Default::default()
        })
        .map_err(|e| e.to_string())?;
        let raw = support::raw_trace(&mut rng, len, half);
        let norm = normalize(&raw, &template).map_err(|e| format!("trace {n}: {e}"))?;
        let back = denormalize(&norm, &template);
        for (a, b) in raw.samples.iter().zip(&back.samples) {
            worst = worst.max((a.x_mm - b.x_mm).abs()).max((a.y_mm - b.y_mm).abs());
        }

        // Scaling sheet and drawing together must not change the normalized line.
        let exponent = rng.gen_range(-3..=3);
        let k = 2f64.powi(exponent);
        let scaled_template = build_template(TemplateConfig {
            time_axis_len_mm: Some(len * k),
            presence_half_range_mm: Some(half * k),
            ..Default::default()
        })
        .map_err(|e| e.to_string())?;
        let scaled = RawTrace {
            samples: raw
                .samples
                .iter()
                .map(|s| RawSample { x_mm: s.x_mm * k, y_mm: s.y_mm * k })
                .collect(),
            ..raw.clone()
        };
        let scaled_norm = normalize_with(&scaled, &scaled_template, &scaled_limits(k)).map_err(|e| format!("trace {n}: {e}"))?;
        ensure(scaled_norm.samples == norm.samples, || format!("trace {n}: scale 2^{exponent} changed the line"))?;

        let k = rng.gen_range(0.5..3.0);
        let odd_template = build_template(TemplateConfig {
            time_axis_len_mm: Some(len * k),
            presence_half_range_mm: Some(half * k),
            ..Default::default()
        })
        .map_err(|e| e.to_string())?;
        let odd = RawTrace {
            samples: raw
                .samples
                .iter()
                .map(|s| RawSample { x_mm: s.x_mm * k, y_mm: s.y_mm * k })
                .collect(),
            ..raw
        };
        let odd_norm = normalize_with(&odd, &odd_template, &scaled_limits(k)).map_err(|e| format!("trace {n}: {e}"))?;
        for (a, b) in norm.samples.iter().zip(&odd_norm.samples) {
            scaled_worst = scaled_worst.max((a.t - b.t).abs()).max((a.p - b.p).abs());
        }
    }
    ensure(worst <= ROUND_TRIP_TOLERANCE, || format!("round-trip error {worst:e} mm"))?;
    ensure(scaled_worst <= 1e-12, || format!("arbitrary scale error {scaled_worst:e}"))?;
    Ok(format!(
        "max round-trip error {worst:.1e} mm over 1000 traces; power-of-two scaling bit-identical, arbitrary scaling within {scaled_worst:.1e}"
    ))
}

fn all_fixture_traces() -> Vec<NormalizedTrace> {
    let mut traces = Vec::new();
    for f in [fixtures::table1(), fixtures::global_stats(), fixtures::intensity()] {
        traces.extend(f.traces);
    }
    traces.push(fixtures::exemplar());
    traces.extend(fixtures::prerequisite_violations().into_iter().map(|(_, t)| t));
    traces
}

fn sh_sign_invariant() -> Result<String, String> {
    let params = SegmentationParams::default();
    let mut rng = StdRng::seed_from_u64(SEED ^ 2);
    let mut rejected = 0;
    let mut traces = all_fixture_traces();
    traces.extend((0..1000).map(|_| support::generate_detectable(&mut rng, &params, &mut rejected).trace()));

    let (mut breaks, mut violations, mut modeled) = (0, 0, 0);
    for trace in &traces {
        let phases = segment_phases(trace, &params);
        let Ok(points) = extract_points(&phases, trace) else {
            continue;
        };
        modeled += 1;
        let model = DescriptiveModel::from_phases(phases, trace).map_err(|e| e.to_string())?;
        for (b, p) in points.breaks.iter().zip(&model.parameters.breaks) {
            breaks += 1;
            if !(p.sh_break < 0.0 && b.p_break.p < b.p_dropping.p) {
                violations += 1;
            }
        }
    }
    ensure(violations == 0 && breaks > 0, || format!("{violations} violations among {breaks} breaks"))?;
    Ok(format!("{breaks} breaks in {modeled} modeled traces, 0 violations"))
}

fn table1_reproduction() -> Result<String, String> {
    let f = fixtures::table1();
    let records = f.analyze(&AnalysisConfig::default()).map_err(|e| e.to_string())?;
    ensure(records.len() == 30, || format!("{} records", records.len()))?;
    let rows = detection_table(&records, &f.events);
    let mut worst: f64 = 0.0;
    for c in &TABLE1 {
        let row = rows
            .iter()
            .find(|r| r.event == c.event && r.group == c.group)
            .ok_or_else(|| format!("missing row {} {}", c.event, c.group))?;
        ensure(row.pos == Some(c.pos), || format!("{} {}: pos {:?}", c.event, c.group, row.pos))?;
        ensure(row.detection_pct == c.detection_pct, || {
            format!("{} {}: {}% detected, expected {}%", c.event, c.group, row.detection_pct, c.detection_pct)
        })?;
        for (got, want) in [(row.mean_sh_break, c.mean_sh_break), (row.mean_p_break, c.mean_p_break)] {
            match (got, want) {
                (Some(g), Some(w)) => worst = worst.max((g - w).abs()),
                (None, None) => {}
                _ => return Err(format!("{} {}: mean presence mismatch {got:?} vs {want:?}", c.event, c.group)),
            }
        }
    }
    ensure(worst <= MEAN_TOLERANCE, || format!("mean error {worst}"))?;

    let csv = detection_csv(&rows, None);
    let dash = format!("Vibration,B,1,0,{NO_VALUE},{NO_VALUE},0,10");
    ensure(csv.lines().any(|l| l == dash), || format!("no `{dash}` row in\n{csv}"))?;
    Ok(format!("15 cells: detection exact, means within {worst:.1e}, Vibration/B renders `-`"))
}

fn edge_trace(drop_start: f64, drop_end: f64) -> NormalizedTrace {
    let v = [
        (0.0, 0.0),
        (0.2, 0.7),
        (drop_start, 0.7),
        (drop_end, 0.3),
        (drop_end + 0.03, 0.7),
        (0.92, 0.7),
        (1.0, -0.9),
    ];
    NormalizedTrace {
        samples: v.iter().map(|&(t, p)| TracePoint::new(t, p)).collect(),
        annotations: vec![],
        source: SourceInfo::default(),
    }
}

fn window_edges() -> Result<String, String> {
    let tick = 0.5;
    let events = [GroundTruthEvent {
        label: "task".into(),
        tick_t: tick,
        expected_bip: true,
        bip_rank: None,
    }];
    let config = AnalysisConfig::default();
    let cases = [
        ("break at tick-0.025", edge_trace(tick - 0.045, tick - 0.025), true),
        ("drop at tick+0.125", edge_trace(tick + 0.125, tick + 0.145), true),
        ("break at tick-0.0251", edge_trace(tick - 0.0451, tick - 0.0251), false),
        ("drop at tick+0.1251", edge_trace(tick + 0.1251, tick + 0.1451), false),
    ];
    for (name, trace, expect) in cases {
        let record = analyze_session("edges", trace, &events, &config).map_err(|e| e.to_string())?;
        ensure(record.bip_reports.len() == 1, || format!("{name}: {} breaks", record.bip_reports.len()))?;
        let matched = record.matched_count() == 1;
        ensure(matched == expect, || format!("{name}: matched={matched}"))?;
    }
    Ok("-0.025 and +0.125 match; -0.0251 and +0.1251 do not".into())
}

fn global_stats_fixture() -> Result<String, String> {
    use global_targets::*;
    let f = fixtures::global_stats();
    let records = f.analyze(&AnalysisConfig::default()).map_err(|e| e.to_string())?;
    let stats = aggregate(&records, &f.events).map_err(|e| e.to_string())?;
    let g = &stats.global;
    let tt = g.t_transition.ok_or("no transition statistics")?;
    let te = g.t_exit.ok_or("no exit statistics")?;
    let ratio = g.drop_raise_ratio.ok_or("no drop/raise ratio")?;
    let rate = g.correct_position_rate.ok_or("no position rate")?;
    let close = |a: f64, b: f64| (a - b).abs() <= MEAN_TOLERANCE;
    ensure(close(tt.mean, T_TRANSITION_MEAN) && close(tt.sd.unwrap_or(f64::NAN), T_TRANSITION_SD), || {
        format!("transition {tt:?}")
    })?;
    ensure(close(te.mean, T_EXIT_MEAN) && close(te.sd.unwrap_or(f64::NAN), T_EXIT_SD), || format!("exit {te:?}"))?;
    ensure(g.total_bips == TOTAL_BIPS && g.matched_bips == MATCHED_BIPS, || {
        format!("{} of {} matched", g.matched_bips, g.total_bips)
    })?;
    ensure(close(rate, 97.0 / 118.0), || format!("position rate {rate}"))?;
    ensure(close(ratio, DROP_RAISE_RATIO), || format!("ratio {ratio}"))?;
    Ok(format!(
        "transition {:.3} (SD {:.3}), exit {:.3} (SD {:.3}), {} of {} matched ({:.3}), ratio {:.3}",
        tt.mean,
        tt.sd.unwrap_or(f64::NAN),
        te.mean,
        te.sd.unwrap_or(f64::NAN),
        g.matched_bips,
        g.total_bips,
        rate,
        ratio
    ))
}

fn prerequisite_suite() -> Result<String, String> {
    let params = SegmentationParams::default();
    let config = PrerequisiteConfig::default();
    for (id, trace) in fixtures::prerequisite_violations() {
        let model = DescriptiveModel::from_trace(&trace, &params).map_err(|e| format!("{id}: {e}"))?;
        let failed = model.conformance(&trace.annotations, &config).failed();
        ensure(failed == [id], || format!("violation of {id} flagged as {failed:?}"))?;
    }
    let exemplar = fixtures::exemplar();
    let model = DescriptiveModel::from_trace(&exemplar, &params).map_err(|e| e.to_string())?;
    let report = model.conformance(&exemplar.annotations, &config);
    ensure(report.all_passed(), || format!("exemplar fails {:?}", report.failed()))?;
    ensure(model.points.breaks.len() == 2, || format!("exemplar has {} breaks", model.points.breaks.len()))?;
    let ids: Vec<String> = PrerequisiteId::ALL.iter().map(|i| i.to_string()).collect();
    Ok(format!("each of {} flagged alone; exemplar passes all five", ids.join(",")))
}

fn scratch_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("presence-acceptance-{}-{tag}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).expect("temp dir");
    dir
}

/// Analyze, store, reload and export everything once.
fn pipeline_outputs(fixture: &Fixture, tag: &str) -> Result<Vec<(String, Vec<u8>)>, String> {
    let dir = scratch_dir(tag);
    let config = AnalysisConfig::default();
    let run_config = serde_json::to_value(config).map_err(|e| e.to_string())?;
    let store_path = dir.join("records.ndjson");
    let mut store = SessionStore::open(&store_path).map_err(|e| e.to_string())?;
    for mut record in fixture.analyze(&config).map_err(|e| e.to_string())? {
        record.run_config = Some(run_config.clone());
        store.write_record(&record).map_err(|e| e.to_string())?;
    }
    let reopened = SessionStore::open(&store_path).map_err(|e| e.to_string())?;
    let records: Vec<SessionRecord> = reopened.records().cloned().collect();
    let export_path = dir.join("export.ndjson");
    reopened.export(&export_path).map_err(|e| e.to_string())?;
    let stats = aggregate(&records, &fixture.events).map_err(|e| e.to_string())?;
    let overlay = render_overlay(
        &records,
        &OverlayOptions {
            mark_points: true,
            run_config: Some(run_config.clone()),
            ..Default::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let outputs = vec![
        ("records.ndjson".to_owned(), std::fs::read(&export_path).map_err(|e| e.to_string())?),
        ("table1.csv".to_owned(), detection_csv(&stats.detection, Some(&run_config)).into_bytes()),
        ("global_stats.json".to_owned(), global_stats_json(&stats, Some(&run_config)).into_bytes()),
        ("boxplot.svg".to_owned(), render_boxplot(&stats, Some(&run_config)).into_bytes()),
        ("overlay.svg".to_owned(), overlay.into_bytes()),
    ];
    let _ = std::fs::remove_dir_all(&dir);
    Ok(outputs)
}

fn determinism() -> Result<String, String> {
    let fixture = fixtures::table1();
    let first = pipeline_outputs(&fixture, "first")?;
    let second = pipeline_outputs(&fixture, "second")?;
    let mut shuffled = fixture.clone();
    shuffled.traces.reverse();
    let third = pipeline_outputs(&shuffled, "shuffled")?;
    let mut bytes = 0;
    for (((name, a), (_, b)), (_, c)) in first.iter().zip(&second).zip(&third) {
        ensure(a == b, || format!("{name} differs between runs"))?;
        ensure(a == c, || format!("{name} depends on the order records were written"))?;
        bytes += a.len();
    }
    Ok(format!(
        "{} outputs ({bytes} bytes) identical across two runs and under reversed input order",
        first.len()
    ))
}

fn intensity_concordance() -> Result<String, String> {
    let f = fixtures::intensity();
    let records = f.analyze(&AnalysisConfig::default()).map_err(|e| e.to_string())?;
    let stats = aggregate(&records, &f.events).map_err(|e| e.to_string())?;
    let ordering = intensity_ordering(&stats);
    let concordance = ordering.concordance.ok_or("no ranked pairs")?;
    ensure(ordering.pairs == 10 && concordance == 10.0, || {
        format!("{concordance}/{} concordant", ordering.pairs)
    })?;
    let medians: Vec<String> = ordering.ordered.iter().map(|o| format!("{:.2}", o.median_p_break)).collect();
    Ok(format!("10/10 concordant pairs; medians {}", medians.join(" < ")))
}

fn main() {
    let outcomes = [
        check("segmentation oracle", segmentation_oracle()),
        check("normalization round-trip", normalization_round_trip()),
        check("sh sign invariant", sh_sign_invariant()),
        check("Table 1 reproduction", table1_reproduction()),
        check("matching window edges", window_edges()),
        check("global statistics", global_stats_fixture()),
        check("prerequisite suite", prerequisite_suite()),
        check("determinism", determinism()),
        check("intensity ordering", intensity_concordance()),
    ];
    let mut failures = 0;
    for o in &outcomes {
        println!("{} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
        failures += usize::from(!o.passed);
    }
    if failures > 0 {
        eprintln!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
