//! Effective run configuration: defaults, then a JSON config file, then flags.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use presence_trace_core::analysis::{AnalysisConfig, MatchWindow};
use presence_trace_core::descriptive_model::PrerequisiteConfig;
use presence_trace_core::segmentation::SegmentationParams;
use presence_trace_core::trace_model::{build_template, Template, TemplateConfig, ValidationLimits, SCHEMA_VERSION};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, Result};

pub const CONFIG_ENV: &str = "PRESENCE_TRACE_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: String,
    pub study: String,
    pub segmentation: SegmentationParams,
    pub window: MatchWindow,
    pub prerequisites: PrerequisiteConfig,
    pub validation: ValidationLimits,
    pub template: TemplateConfig,
    /// Accepted randomization groups; empty accepts any.
    pub groups: Vec<String>,
    // Locations are inputs, not results, so they stay out of the echoed config.
    #[serde(skip_serializing)]
    pub store: Option<PathBuf>,
    #[serde(skip_serializing)]
    pub events: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_owned(),
            study: "study".to_owned(),
            segmentation: SegmentationParams::default(),
            window: MatchWindow::default(),
            prerequisites: PrerequisiteConfig::default(),
            validation: ValidationLimits::default(),
            template: TemplateConfig::default(),
            groups: Vec::new(),
            store: None,
            events: None,
        }
    }
}

/// Flags shared by every subcommand. Names mirror the config fields.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON config file; defaults to $PRESENCE_TRACE_CONFIG
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
    /// Study identifier stored with every record
    #[arg(long, global = true)]
    pub study: Option<String>,
    /// Simplification tolerance in presence units
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    /// Slopes below this magnitude count as constant
    #[arg(long, global = true)]
    pub eps_slope: Option<f64>,
    /// Shortest phase kept on its own, as a fraction of the timeline
    #[arg(long, global = true)]
    pub min_duration: Option<f64>,
    /// Matching window before an event tick
    #[arg(long, global = true)]
    pub window_before: Option<f64>,
    /// Matching window after an event tick
    #[arg(long, global = true)]
    pub window_after: Option<f64>,
    /// Final presence at or below this counts as a return to the real world
    #[arg(long, global = true)]
    pub return_threshold: Option<f64>,
    /// Minimum share of the timeline spent in the experience
    #[arg(long, global = true)]
    pub experience_min: Option<f64>,
    /// Start-dot tolerance in millimeters
    #[arg(long, global = true)]
    pub start_tolerance_mm: Option<f64>,
    /// Pen overshoot that is clamped instead of rejected, in millimeters
    #[arg(long, global = true)]
    pub clamp_tolerance_mm: Option<f64>,
    /// Session record store (NDJSON)
    #[arg(long, global = true)]
    pub store: Option<PathBuf>,
    /// Ground-truth events document
    #[arg(long, global = true)]
    pub events: Option<PathBuf>,
}

fn set<T>(target: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *target = v;
    }
}

impl RunConfig {
    pub fn load(overrides: &Overrides) -> Result<Self> {
        let mut config = match &overrides.config {
            Some(path) => Self::from_file(path)?,
            None => Self::default(),
        };
        let o = overrides.clone();
        set(&mut config.study, o.study);
        set(&mut config.segmentation.tolerance, o.tolerance);
        set(&mut config.segmentation.eps_slope, o.eps_slope);
        set(&mut config.segmentation.min_duration, o.min_duration);
        set(&mut config.window.before, o.window_before);
        set(&mut config.window.after, o.window_after);
        set(&mut config.prerequisites.return_threshold, o.return_threshold);
        set(&mut config.prerequisites.experience_min_fraction, o.experience_min);
        set(&mut config.validation.start_tolerance_mm, o.start_tolerance_mm);
        set(&mut config.validation.clamp_tolerance_mm, o.clamp_tolerance_mm);
        if o.store.is_some() {
            config.store = o.store;
        }
        if o.events.is_some() {
            config.events = o.events;
        }
        config.check()?;
        // The start-dot ellipse follows the millimeter tolerance on the configured sheet.
        let sheet = config.sheet()?;
        config.prerequisites = config
            .prerequisites
            .with_start_tolerance_mm(config.validation.start_tolerance_mm, &sheet);
        Ok(config)
    }

    fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let config: Self = serde_json::from_str(&text).map_err(|e| CliError::schema(path, e))?;
        if config.schema_version != SCHEMA_VERSION {
            return Err(CliError::schema(
                path,
                format!(
                    "config schema version {} (expected {SCHEMA_VERSION})",
                    config.schema_version
                ),
            ));
        }
        Ok(config)
    }

    fn check(&self) -> Result<()> {
        let positive = [
            ("tolerance", self.segmentation.tolerance),
            ("eps-slope", self.segmentation.eps_slope),
            ("min-duration", self.segmentation.min_duration),
            ("window-before", self.window.before),
            ("window-after", self.window.after),
            ("experience-min", self.prerequisites.experience_min_fraction),
            ("start-tolerance-mm", self.validation.start_tolerance_mm),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        let clamp = self.validation.clamp_tolerance_mm;
        if !(clamp.is_finite() && clamp >= 0.0) {
            return Err(CliError::Config(format!("clamp-tolerance-mm must not be negative, got {clamp}")));
        }
        let r = self.prerequisites.return_threshold;
        if !(r.is_finite() && (-1.0..=1.0).contains(&r)) {
            return Err(CliError::Config(format!("return-threshold must lie in [-1, 1], got {r}")));
        }
        if self.study.is_empty() {
            return Err(CliError::Config("study must not be empty".into()));
        }
        Ok(())
    }

    pub fn sheet(&self) -> Result<Template> {
        build_template(self.template.clone()).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn analysis(&self) -> AnalysisConfig {
        AnalysisConfig {
            segmentation: self.segmentation,
            window: self.window,
            prerequisites: self.prerequisites,
        }
    }

    /// The configuration as echoed into every output.
    pub fn echo(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn store(&self) -> Result<&Path> {
        self.store
            .as_deref()
            .ok_or_else(|| CliError::Config("no record store given (--store)".into()))
    }

    pub fn events(&self) -> Result<&Path> {
        self.events
            .as_deref()
            .ok_or_else(|| CliError::Config("no events document given (--events)".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        fs::write(&path, r#"{"segmentation": {"tolerance": 0.05}, "study": "pilot"}"#).unwrap();
        let config = RunConfig::load(&Overrides {
            config: Some(path),
            study: Some("main".into()),
            eps_slope: Some(0.2),
            ..Default::default()
        })
        .unwrap();
        assert_eq!(config.segmentation.tolerance, 0.05);
        assert_eq!(config.segmentation.eps_slope, 0.2);
        assert_eq!(config.segmentation.min_duration, 0.01);
        assert_eq!(config.study, "main");
    }

    #[test]
    fn rejects_non_positive_parameters() {
        let err = RunConfig::load(&Overrides {
            tolerance: Some(0.0),
            ..Default::default()
        })
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn unknown_fields_are_schema_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        fs::write(&path, r#"{"tolerence": 0.05}"#).unwrap();
        let err = RunConfig::load(&Overrides {
            config: Some(path),
            ..Default::default()
        })
        .unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }

    #[test]
    fn echo_leaves_out_paths() {
        let config = RunConfig {
            store: Some("records.ndjson".into()),
            ..Default::default()
        };
        let echo = config.echo();
        assert!(echo.get("store").is_none());
        assert_eq!(echo["segmentation"]["eps_slope"], 0.1);
    }
}
