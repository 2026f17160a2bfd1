#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use presence_trace_core::trace_model::{RawSample, RawTrace, SourceInfo, Template, TraceFile};
use serde_json::Value;

pub fn run(dir: &Path, args: &[&str]) -> Output {
    run_with_env(dir, args, &[])
}

pub fn run_with_env(dir: &Path, args: &[&str], env: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_presence-trace"));
    cmd.current_dir(dir).args(args).env_remove("PRESENCE_TRACE_CONFIG");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

/// The last stderr line, which is the summary or the error record.
pub fn last_stderr(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().unwrap_or_default();
    serde_json::from_str(line).unwrap_or_else(|_| panic!("stderr is not JSON: {text}"))
}

/// A drawing on the default sheet through the given (t, p) vertices, 2mm apart.
pub fn polyline_file(vertices: &[(f64, f64)], participant: &str, group: &str) -> TraceFile {
    let sheet = Template::default();
    let mut samples = Vec::new();
    for w in vertices.windows(2) {
        let ((t0, p0), (t1, p1)) = (w[0], w[1]);
        let steps = (((t1 - t0) * 100.0).ceil() as usize).max(1);
        for k in 0..steps {
            let f = k as f64 / steps as f64;
            samples.push(RawSample {
                x_mm: sheet.time_to_mm(t0 + f * (t1 - t0)),
                y_mm: sheet.presence_to_mm(p0 + f * (p1 - p0)),
            });
        }
    }
    let (t, p) = *vertices.last().unwrap();
    samples.push(RawSample {
        x_mm: sheet.time_to_mm(t),
        y_mm: sheet.presence_to_mm(p),
    });
    TraceFile::new(
        sheet,
        RawTrace {
            samples,
            annotations: Vec::new(),
            source: SourceInfo {
                participant_id: participant.into(),
                group: group.into(),
                ..Default::default()
            },
        },
    )
}

pub fn write_file(path: &Path, file: &TraceFile) {
    std::fs::write(path, file.to_json()).unwrap();
}

pub const GOOD: [(f64, f64); 7] = [(0.0, 0.0), (0.2, 0.8), (0.4, 0.8), (0.45, 0.3), (0.55, 0.7), (0.8, 0.7), (1.0, -0.9)];
