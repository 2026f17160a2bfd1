use std::sync::Once;

use presence_trace::presence_trace;
use pyo3::prelude::*;

static INIT: Once = Once::new();

/// Registers the extension module with an embedded interpreter.
pub fn interpreter() {
    INIT.call_once(|| {
        pyo3::append_to_inittab!(presence_trace);
        pyo3::prepare_freethreaded_python();
    });
}

/// Runs `code` with the module imported as `pt` and returns the value bound to `result`.
pub fn eval<T: for<'py> FromPyObject<'py>>(code: &str) -> PyResult<T> {
    interpreter();
    Python::with_gil(|py| {
        let globals = pyo3::types::PyDict::new_bound(py);
        py.run_bound(&format!("import presence_trace as pt\n{code}"), Some(&globals), None)?;
        globals
            .get_item("result")?
            .expect("snippet binds `result`")
            .extract()
    })
}
