//! Python bindings. Structured values cross the boundary as plain dicts and
//! lists with the same shape as the JSON documents the pipeline reads and writes.

use presence_trace_core::analysis::{self, AnalysisConfig, EventSet, GroundTruthEvent, SessionRecord};
use presence_trace_core::descriptive_model::DescriptiveModel;
use presence_trace_core::fixtures;
use presence_trace_core::persistence::{self, OverlayOptions, SessionStore};
use presence_trace_core::segmentation::{self, SegmentationParams};
use presence_trace_core::trace_model::{
    self, EventTick, NormalizedTrace, RawTrace, TemplateConfig, TracePoint,
};
use pyo3::create_exception;
use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::de::DeserializeOwned;
use serde::Serialize;

create_exception!(presence_trace, PresenceTraceError, PyValueError);

fn err(e: impl ToString) -> PyErr {
    PresenceTraceError::new_err(e.to_string())
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<PyObject> {
    let text = serde_json::to_string(value).map_err(err)?;
    Ok(py.import_bound("json")?.call_method1("loads", (text,))?.unbind())
}

fn from_py<T: DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = obj
        .py()
        .import_bound("json")?
        .call_method1("dumps", (obj,))?
        .extract()?;
    serde_json::from_str(&text).map_err(err)
}

/// Geometry of the drawing sheet in millimeters.
#[pyclass(module = "presence_trace", frozen)]
#[derive(Clone)]
struct Template {
    inner: trace_model::Template,
}

#[pymethods]
impl Template {
    #[new]
    #[pyo3(signature = (time_axis_len_mm=None, presence_half_range_mm=None, negative_half_range_mm=None, event_ticks=Vec::new()))]
    fn new(
        time_axis_len_mm: Option<f64>,
        presence_half_range_mm: Option<f64>,
        negative_half_range_mm: Option<f64>,
        event_ticks: Vec<(String, f64)>,
    ) -> PyResult<Self> {
        let config = TemplateConfig {
            time_axis_len_mm,
            presence_half_range_mm,
            negative_half_range_mm,
            event_ticks: event_ticks
                .into_iter()
                .map(|(label, x_mm)| EventTick { label, x_mm })
                .collect(),
            gradient: None,
        };
        let inner = trace_model::build_template(config).map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_dict(doc: &Bound<'_, PyAny>) -> PyResult<Self> {
        Ok(Self { inner: from_py(doc)? })
    }

    fn to_dict(&self, py: Python<'_>) -> PyResult<PyObject> {
        to_py(py, &self.inner)
    }

    #[getter]
    fn time_axis_len_mm(&self) -> f64 {
        self.inner.time_axis_len_mm
    }

    #[getter]
    fn presence_half_range_mm(&self) -> f64 {
        self.inner.presence_half_range_mm
    }

    #[getter]
    fn event_ticks(&self) -> Vec<(String, f64)> {
        self.inner
            .event_ticks
            .iter()
            .map(|t| (t.label.clone(), t.x_mm))
            .collect()
    }

    fn time_to_unit(&self, x_mm: f64) -> f64 {
        self.inner.time_to_unit(x_mm)
    }

    fn presence_to_unit(&self, y_mm: f64) -> f64 {
        self.inner.presence_to_unit(y_mm)
    }

    fn render_svg(&self) -> String {
        persistence::render_template(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "Template(time_axis_len_mm={}, presence_half_range_mm={}, ticks={})",
            self.inner.time_axis_len_mm,
            self.inner.presence_half_range_mm,
            self.inner.event_ticks.len()
        )
    }
}

fn sheet(template: Option<&Template>) -> trace_model::Template {
    template.map(|t| t.inner.clone()).unwrap_or_default()
}

/// Validation issues of a raw drawing (`samples` in millimeters).
#[pyfunction]
#[pyo3(signature = (trace, template=None))]
fn validate_trace(py: Python<'_>, trace: &Bound<'_, PyAny>, template: Option<&Template>) -> PyResult<PyObject> {
    let raw: RawTrace = from_py(trace)?;
    to_py(py, &trace_model::validate_trace(&raw, &sheet(template)).issues)
}

/// Maps a raw drawing into timeline fractions and presence units.
#[pyfunction]
#[pyo3(signature = (trace, template=None))]
fn normalize(py: Python<'_>, trace: &Bound<'_, PyAny>, template: Option<&Template>) -> PyResult<PyObject> {
    let raw: RawTrace = from_py(trace)?;
    to_py(py, &trace_model::normalize(&raw, &sheet(template)).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (trace, template=None))]
fn denormalize(py: Python<'_>, trace: &Bound<'_, PyAny>, template: Option<&Template>) -> PyResult<PyObject> {
    let normalized: NormalizedTrace = from_py(trace)?;
    to_py(py, &trace_model::denormalize(&normalized, &sheet(template)))
}

fn seg_params(tolerance: Option<f64>, eps_slope: Option<f64>, min_duration: Option<f64>) -> SegmentationParams {
    let d = SegmentationParams::default();
    SegmentationParams {
        tolerance: tolerance.unwrap_or(d.tolerance),
        eps_slope: eps_slope.unwrap_or(d.eps_slope),
        min_duration: min_duration.unwrap_or(d.min_duration),
    }
}

/// Phases of a drawing given as `(t, p)` pairs.
#[pyfunction]
#[pyo3(signature = (samples, tolerance=None, eps_slope=None, min_duration=None))]
fn segment_phases(
    py: Python<'_>,
    samples: Vec<(f64, f64)>,
    tolerance: Option<f64>,
    eps_slope: Option<f64>,
    min_duration: Option<f64>,
) -> PyResult<PyObject> {
    if samples.len() < 2 {
        return Err(err("at least two samples are needed"));
    }
    let trace = NormalizedTrace {
        samples: samples.into_iter().map(|(t, p)| TracePoint::new(t, p)).collect(),
        annotations: Vec::new(),
        source: Default::default(),
    };
    to_py(py, &segmentation::segment_phases(&trace, &seg_params(tolerance, eps_slope, min_duration)))
}

/// Distinctive points, parameters and prerequisite conformance of one drawing.
#[pyfunction]
#[pyo3(signature = (trace, tolerance=None, eps_slope=None, min_duration=None))]
fn describe(
    py: Python<'_>,
    trace: &Bound<'_, PyAny>,
    tolerance: Option<f64>,
    eps_slope: Option<f64>,
    min_duration: Option<f64>,
) -> PyResult<PyObject> {
    let trace: NormalizedTrace = from_py(trace)?;
    let model = DescriptiveModel::from_trace(&trace, &seg_params(tolerance, eps_slope, min_duration)).map_err(err)?;
    let conformance = model.conformance(&trace.annotations, &Default::default());
    let out = PyDict::new_bound(py);
    out.set_item("phases", to_py(py, &model.phases)?)?;
    out.set_item("points", to_py(py, &model.points)?)?;
    out.set_item("parameters", to_py(py, &model.parameters)?)?;
    out.set_item("conformance", to_py(py, &conformance)?)?;
    Ok(out.into_any().unbind())
}

fn analysis_config(config: Option<&Bound<'_, PyAny>>) -> PyResult<AnalysisConfig> {
    config.map_or_else(|| Ok(AnalysisConfig::default()), from_py)
}

/// Full session record for a normalized drawing matched against `events`.
#[pyfunction]
#[pyo3(signature = (trace, events=None, study_id="study", config=None))]
fn analyze(
    py: Python<'_>,
    trace: &Bound<'_, PyAny>,
    events: Option<&Bound<'_, PyAny>>,
    study_id: &str,
    config: Option<&Bound<'_, PyAny>>,
) -> PyResult<PyObject> {
    let trace: NormalizedTrace = from_py(trace)?;
    let events: Vec<GroundTruthEvent> = events.map_or_else(|| Ok(Vec::new()), from_py)?;
    let record = analysis::analyze_session(study_id, trace, &events, &analysis_config(config)?).map_err(err)?;
    to_py(py, &persistence::quantized(&record).map_err(err)?)
}

/// Cross-session statistics of analyzed records.
#[pyfunction]
fn aggregate(py: Python<'_>, records: &Bound<'_, PyAny>, events: &Bound<'_, PyAny>) -> PyResult<PyObject> {
    let records: Vec<SessionRecord> = from_py(records)?;
    let events: EventSet = from_py(events)?;
    let events = EventSet::new(events.groups).map_err(err)?;
    to_py(py, &analysis::aggregate(&records, &events).map_err(err)?)
}

/// Detection table as CSV text.
#[pyfunction]
fn detection_csv(records: &Bound<'_, PyAny>, events: &Bound<'_, PyAny>) -> PyResult<String> {
    let records: Vec<SessionRecord> = from_py(records)?;
    let events: EventSet = from_py(events)?;
    let events = EventSet::new(events.groups).map_err(err)?;
    Ok(persistence::detection_csv(&analysis::detection_table(&records, &events), None))
}

#[pyfunction]
#[pyo3(signature = (records, template=None, mark_points=false))]
fn render_overlay(records: &Bound<'_, PyAny>, template: Option<&Template>, mark_points: bool) -> PyResult<String> {
    let records: Vec<SessionRecord> = from_py(records)?;
    let options = OverlayOptions {
        template: sheet(template),
        mark_points,
        run_config: None,
    };
    persistence::render_overlay(&records, &options).map_err(err)
}

/// Synthetic study: `(normalized traces, events document)`.
#[pyfunction]
fn fixture(py: Python<'_>, name: &str) -> PyResult<(PyObject, PyObject)> {
    let fx = match name {
        "table1" => fixtures::table1(),
        "global" => fixtures::global_stats(),
        "intensity" => fixtures::intensity(),
        "exemplar" => return Ok((to_py(py, &vec![fixtures::exemplar()])?, py.None())),
        other => return Err(PyKeyError::new_err(format!("unknown fixture `{other}`"))),
    };
    Ok((to_py(py, &fx.traces)?, to_py(py, &fx.events)?))
}

/// Append-only NDJSON store of session records.
#[pyclass(module = "presence_trace")]
struct Store {
    inner: SessionStore,
}

#[pymethods]
impl Store {
    #[new]
    #[pyo3(signature = (path=None))]
    fn new(path: Option<std::path::PathBuf>) -> PyResult<Self> {
        let inner = match path {
            Some(p) => SessionStore::open(p).map_err(err)?,
            None => SessionStore::in_memory(),
        };
        Ok(Self { inner })
    }

    fn write_record(&mut self, record: &Bound<'_, PyAny>) -> PyResult<()> {
        let record: SessionRecord = from_py(record)?;
        self.inner.write_record(&record).map_err(err)
    }

    fn records(&self, py: Python<'_>) -> PyResult<PyObject> {
        to_py(py, &self.inner.records().collect::<Vec<_>>())
    }

    fn export(&self, path: std::path::PathBuf) -> PyResult<()> {
        self.inner.export(path).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[pymodule]
pub fn presence_trace(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("PresenceTraceError", m.py().get_type_bound::<PresenceTraceError>())?;
    m.add("SCHEMA_VERSION", trace_model::SCHEMA_VERSION)?;
    m.add_class::<Template>()?;
    m.add_class::<Store>()?;
    m.add_function(wrap_pyfunction!(validate_trace, m)?)?;
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(denormalize, m)?)?;
    m.add_function(wrap_pyfunction!(segment_phases, m)?)?;
    m.add_function(wrap_pyfunction!(describe, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(aggregate, m)?)?;
    m.add_function(wrap_pyfunction!(detection_csv, m)?)?;
    m.add_function(wrap_pyfunction!(render_overlay, m)?)?;
    m.add_function(wrap_pyfunction!(fixture, m)?)?;
    Ok(())
}
