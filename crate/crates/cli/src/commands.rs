//! Subcommand implementations. Each returns the JSON summary printed on stdout.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use presence_trace_core::analysis::{
    aggregate, analyze_session, detection_table, AnalysisError, EventSet, GroundTruthEvent, SessionRecord,
};
use presence_trace_core::descriptive_model::DescriptiveModel;
use presence_trace_core::fixtures;
use presence_trace_core::persistence::{
    detection_csv, global_stats_json, render_boxplot, render_overlay, render_template_with, OverlayOptions,
    SessionStore, StoreError,
};
use presence_trace_core::trace_model::{
    denormalize, normalize_with, validate_trace_with, EventTick, NormalizedTrace, Template, TraceFile,
    ValidationReport,
};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{text}");
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write_text(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn store_error(path: &Path, err: StoreError) -> CliError {
    match err {
        StoreError::Io(source) => CliError::io(path, source),
        StoreError::Parse { .. } | StoreError::Schema { .. } | StoreError::MalformedKey(_) => {
            CliError::schema(path, err)
        }
        other => CliError::Other(format!("{}: {other}", path.display())),
    }
}

fn open_store(path: &Path) -> Result<SessionStore> {
    if !path.exists() {
        return Err(CliError::MissingFile { path: path.to_owned() });
    }
    SessionStore::open(path).map_err(|e| store_error(path, e))
}

fn load_events(path: &Path) -> Result<EventSet> {
    let text = read_text(path)?;
    EventSet::from_json(&text).map_err(|e| CliError::schema(path, e))
}

pub fn load_trace_file(path: &Path) -> Result<TraceFile> {
    let text = read_text(path)?;
    TraceFile::from_json(&text).map_err(|e| CliError::schema(path, e))
}

fn warning_line(path: &Path, report: &ValidationReport) {
    for issue in report.warnings() {
        let line = json!({
            "warning": issue.code.as_str(),
            "path": path,
            "message": issue.message,
        });
        eprintln!("{line}");
    }
}

/// Reads, validates and normalizes drawings against the sheet each was drawn on.
/// Nothing is returned unless every file passes validation.
fn ingest_files(files: &[PathBuf], config: &RunConfig) -> Result<Vec<NormalizedTrace>> {
    let mut loaded = Vec::with_capacity(files.len());
    for path in files {
        let file = load_trace_file(path)?;
        let raw = file.raw_trace();
        let report = validate_trace_with(&raw, &file.template, &config.validation);
        if report.has_fatal() {
            return Err(CliError::Validation {
                path: path.clone(),
                report,
            });
        }
        if !config.groups.is_empty() && !config.groups.contains(&raw.source.group) {
            return Err(CliError::schema(
                path,
                format!("group `{}` is not one of {:?}", raw.source.group, config.groups),
            ));
        }
        loaded.push((path, raw, file.template, report));
    }
    let mut traces = Vec::with_capacity(loaded.len());
    for (path, raw, template, report) in loaded {
        warning_line(path, &report);
        let trace = normalize_with(&raw, &template, &config.validation)
            .map_err(|e| CliError::Other(format!("{}: {e}", path.display())))?;
        traces.push(trace);
    }
    Ok(traces)
}

pub fn template(config: &RunConfig, out: &Path, group: Option<&str>) -> Result<Value> {
    let mut sheet_config = config.template.clone();
    if let Some(group) = group {
        let path = config.events()?;
        let events = load_events(path)?;
        let list = events.events_for(group).map_err(|e| CliError::schema(path, e))?;
        let len = config.sheet()?.time_axis_len_mm;
        sheet_config.event_ticks = list
            .iter()
            .map(|e| EventTick {
                label: e.label.clone(),
                x_mm: e.tick_t * len,
            })
            .collect();
    }
    let sheet = presence_trace_core::trace_model::build_template(sheet_config)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let echo = config.echo();
    let svg = out.join("template.svg");
    let json_path = out.join("template.json");
    write_text(&svg, &render_template_with(&sheet, Some(&echo)))?;
    // Extra keys are ignored when the file is read back as a template.
    let mut doc = serde_json::to_value(&sheet).expect("template serializes");
    doc["run_config"] = echo;
    write_text(&json_path, &serde_json::to_string_pretty(&doc).expect("template serializes"))?;
    Ok(json!({"command": "template", "outputs": [svg, json_path]}))
}

pub fn ingest(config: &RunConfig, files: &[PathBuf]) -> Result<Value> {
    let store_path = config.store()?;
    let traces = ingest_files(files, config)?;
    let mut store = SessionStore::open(store_path).map_err(|e| store_error(store_path, e))?;
    let echo = config.echo();
    for trace in &traces {
        let mut record = SessionRecord::provisional(&config.study, trace.clone());
        record.run_config = Some(echo.clone());
        store
            .write_record(&record)
            .map_err(|e| store_error(store_path, e))?;
    }
    Ok(json!({"command": "ingest", "ingested": traces.len(), "store": store_path}))
}

fn events_for<'a>(events: Option<&'a (PathBuf, EventSet)>, group: &str) -> Result<&'a [GroundTruthEvent]> {
    match events {
        None => Ok(&[]),
        Some((path, set)) => set.events_for(group).map_err(|e| CliError::schema(path, e)),
    }
}

/// Models every provisional drawing. Sessions whose model cannot be completed
/// are skipped and reported; the rest are still written.
pub fn analyze(config: &RunConfig, files: &[PathBuf], out: Option<&Path>) -> Result<Value> {
    let traces: Vec<(String, NormalizedTrace)> = if files.is_empty() {
        let path = config.store()?;
        open_store(path)?
            .records()
            .filter_map(|r| r.trace.clone().map(|t| (r.study_id.clone(), t)))
            .collect()
    } else {
        ingest_files(files, config)?
            .into_iter()
            .map(|t| (config.study.clone(), t))
            .collect()
    };
    let events = match &config.events {
        Some(path) => Some((path.clone(), load_events(path)?)),
        None => None,
    };

    let analysis = config.analysis();
    let echo = config.echo();
    let mut store = SessionStore::in_memory();
    let mut incomplete = Vec::new();
    for (study, trace) in traces {
        let key = format!("{study}/{}", trace.source.participant_id);
        let group_events = events_for(events.as_ref(), &trace.source.group)?;
        match analyze_session(&study, trace, group_events, &analysis) {
            Ok(mut record) => {
                record.run_config = Some(echo.clone());
                store.write_record(&record).map_err(|e| CliError::Other(e.to_string()))?;
            }
            Err(e) => incomplete.push((key, e.to_string())),
        }
    }

    let breaks: Vec<Value> = store
        .records()
        .map(|r| json!({"session": r.key().to_string(), "breaks": r.bip_reports.len(), "matched": r.matched_count()}))
        .collect();
    match out {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
            }
            store.export(path).map_err(|e| store_error(path, e))?;
        }
        None => {
            for record in store.records() {
                emit(&presence_trace_core::persistence::to_line(record).expect("record serializes"));
            }
        }
    }
    if !incomplete.is_empty() {
        return Err(CliError::Incomplete { sessions: incomplete });
    }
    Ok(json!({"command": "analyze", "analyzed": store.len(), "sessions": breaks}))
}

/// Validation findings and prerequisite conformance for each drawing.
pub fn validate(config: &RunConfig, files: &[PathBuf], out: Option<&Path>) -> Result<(Value, bool)> {
    let mut entries = Vec::new();
    let mut any_fatal = false;
    for path in files {
        let file = load_trace_file(path)?;
        let raw = file.raw_trace();
        let report = validate_trace_with(&raw, &file.template, &config.validation);
        any_fatal |= report.has_fatal();
        let mut entry = json!({
            "path": path,
            "participant_id": raw.source.participant_id,
            "group": raw.source.group,
            "issues": report.issues,
        });
        if !report.has_fatal() {
            let trace = normalize_with(&raw, &file.template, &config.validation)
                .map_err(|e| CliError::Other(format!("{}: {e}", path.display())))?;
            match DescriptiveModel::from_trace(&trace, &config.segmentation) {
                Ok(model) => {
                    let conformance = model.conformance(&trace.annotations, &config.prerequisites);
                    entry["conforms"] = json!(conformance.all_passed());
                    entry["prerequisites"] = json!(conformance.entries);
                }
                Err(e) => {
                    entry["conforms"] = json!(false);
                    entry["model_error"] = json!(e.to_string());
                }
            }
        }
        entries.push(entry);
    }
    let doc = json!({
        "schema_version": presence_trace_core::trace_model::SCHEMA_VERSION,
        "run_config": config.echo(),
        "drawings": entries,
    });
    let text = serde_json::to_string_pretty(&doc).expect("report serializes");
    match out {
        Some(path) => write_text(path, &text)?,
        None => emit(&text),
    }
    Ok((json!({"command": "validate", "drawings": files.len(), "fatal": any_fatal}), any_fatal))
}

fn analyzed_records(config: &RunConfig) -> Result<Vec<SessionRecord>> {
    let path = config.store()?;
    let records: Vec<SessionRecord> = open_store(path)?.records().cloned().collect();
    Ok(records)
}

pub fn aggregate_cmd(config: &RunConfig, out: &Path) -> Result<Value> {
    let records = analyzed_records(config)?;
    let events_path = config.events()?;
    let events = load_events(events_path)?;
    let stats = aggregate(&records, &events).map_err(|e| match e {
        AnalysisError::NoRecords => CliError::Other(format!("{}: {e}", config.store().unwrap().display())),
        other => CliError::schema(events_path, other),
    })?;
    let echo = config.echo();
    let csv = out.join("table1.csv");
    let stats_path = out.join("global_stats.json");
    let boxplot = out.join("boxplot.svg");
    write_text(&csv, &detection_csv(&detection_table(&records, &events), Some(&echo)))?;
    write_text(&stats_path, &global_stats_json(&stats, Some(&echo)))?;
    write_text(&boxplot, &render_boxplot(&stats, Some(&echo)))?;
    Ok(json!({"command": "aggregate", "outputs": [csv, stats_path, boxplot]}))
}

pub fn render(config: &RunConfig, out: &Path, mark_points: bool) -> Result<Value> {
    let records = analyzed_records(config)?;
    let options = OverlayOptions {
        template: config.sheet()?,
        mark_points,
        run_config: Some(config.echo()),
    };
    let svg = render_overlay(&records, &options)
        .map_err(|e| CliError::Other(format!("{}: {e}", config.store().unwrap().display())))?;
    write_text(out, &svg)?;
    Ok(json!({"command": "render", "outputs": [out]}))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FixtureName {
    Table1,
    Global,
    Intensity,
    Exemplar,
}

/// Writes a synthetic study as trace files (and its events document).
pub fn fixture(name: FixtureName, out: &Path, sheet: &Template) -> Result<Value> {
    let (traces, events) = match name {
        FixtureName::Table1 => split(fixtures::table1()),
        FixtureName::Global => split(fixtures::global_stats()),
        FixtureName::Intensity => split(fixtures::intensity()),
        FixtureName::Exemplar => (vec![fixtures::exemplar()], None),
    };
    let mut outputs = Vec::new();
    for trace in &traces {
        let path = out.join("traces").join(format!("{}.json", trace.source.participant_id));
        write_text(&path, &TraceFile::new(sheet.clone(), denormalize(trace, sheet)).to_json())?;
        outputs.push(path);
    }
    if let Some(events) = events {
        let path = out.join("events.json");
        write_text(&path, &events.to_json())?;
        outputs.push(path);
    }
    Ok(json!({"command": "fixture", "outputs": outputs}))
}

fn split(fixture: fixtures::Fixture) -> (Vec<NormalizedTrace>, Option<EventSet>) {
    (fixture.traces, Some(fixture.events))
}
