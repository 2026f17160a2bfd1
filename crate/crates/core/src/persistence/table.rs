use serde_json::{json, Value};

use super::{quantize, to_line};
use crate::analysis::{intensity_ordering, AggregateStats, DetectionRow};
use crate::trace_model::SCHEMA_VERSION;

const HEADER: [&str; 8] = [
    "event",
    "group",
    "pos",
    "detection_pct",
    "mean_sh_break",
    "mean_p_break",
    "n_matched",
    "n_records",
];

/// Placeholder for a mean over zero matches.
pub const NO_VALUE: &str = "-";

fn number(x: f64) -> String {
    format!("{}", quantize(x))
}

fn optional(x: Option<f64>) -> String {
    x.map(number).unwrap_or_else(|| NO_VALUE.to_owned())
}

/// One row per event and group. When a run configuration is given it is
/// echoed on a leading `#` comment line.
pub fn detection_csv(rows: &[DetectionRow], run_config: Option<&Value>) -> String {
    let mut out = String::new();
    if let Some(cfg) = run_config {
        out.push_str("# run_config: ");
        out.push_str(&to_line(cfg).expect("config serializes"));
        out.push('\n');
    }
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(HEADER).expect("in-memory write");
    for row in rows {
        writer
            .write_record([
                row.event.clone(),
                row.group.clone(),
                row.pos.map(|p| p.to_string()).unwrap_or_default(),
                number(row.detection_pct),
                optional(row.mean_sh_break),
                optional(row.mean_p_break),
                row.n_matched.to_string(),
                row.n_records.to_string(),
            ])
            .expect("in-memory write");
    }
    let bytes = writer.into_inner().expect("in-memory flush");
    out.push_str(std::str::from_utf8(&bytes).expect("csv is utf-8"));
    out
}

/// Key/value document with global statistics, per-participant counts and
/// per-event intensity summaries.
pub fn global_stats_json(stats: &AggregateStats, run_config: Option<&Value>) -> String {
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "run_config": run_config,
        "global": stats.global,
        "participants": stats.participants,
        "intensity": stats.intensity,
        "intensity_ordering": intensity_ordering(stats),
    });
    let mut v: Value = serde_json::from_str(&to_line(&doc).expect("stats serialize")).expect("valid json");
    if let Value::Object(map) = &mut v {
        map.retain(|_, val| !val.is_null());
    }
    serde_json::to_string_pretty(&v).expect("stats serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(event: &str, pct: f64, sh: Option<f64>, pb: Option<f64>) -> DetectionRow {
        DetectionRow {
            event: event.into(),
            group: "B".into(),
            pos: Some(1),
            detection_pct: pct,
            mean_sh_break: sh,
            mean_p_break: pb,
            n_matched: 0,
            n_records: 10,
        }
    }

    #[test]
    fn missing_means_render_as_dash() {
        let csv = detection_csv(&[row("Vibration", 0.0, None, None), row("Cable Malfunction", 90.0, Some(-0.28), Some(-0.33))], None);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "event,group,pos,detection_pct,mean_sh_break,mean_p_break,n_matched,n_records");
        assert_eq!(lines[1], "Vibration,B,1,0,-,-,0,10");
        assert_eq!(lines[2], "Cable Malfunction,B,1,90,-0.28,-0.33,0,10");
    }

    #[test]
    fn config_is_echoed() {
        let cfg = json!({"tolerance": 0.02});
        let csv = detection_csv(&[], Some(&cfg));
        assert!(csv.starts_with("# run_config: {\"tolerance\":0.02}\n"));
    }
}
