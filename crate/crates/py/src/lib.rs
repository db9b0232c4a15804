//! Python bindings. Structured results (deltas, snapshots, requests) cross
//! the boundary as plain dicts and lists built from their JSON form.

use std::path::PathBuf;

use engine::collocation::parse_field;
use engine::priority;
use engine::{
    Category, InputMode, Lexicon, OccurrenceVector, PriorityFunction, Resolution,
    Session as Inner, SessionConfig, SessionError,
};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyKeyError, PyValueError};
use pyo3::prelude::*;

create_exception!(mindstream, MindstreamError, PyException);

fn to_py_err(err: SessionError) -> PyErr {
    match err {
        SessionError::UnknownActor { .. } => PyKeyError::new_err(err.to_string()),
        SessionError::FutureC { .. } | SessionError::InvalidConfig(_) => {
            PyValueError::new_err(err.to_string())
        }
        other => MindstreamError::new_err(other.to_string()),
    }
}

fn to_python<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| MindstreamError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn function(name: &str) -> PyResult<PriorityFunction> {
    name.parse().map_err(|e: priority::PriorityError| PyValueError::new_err(e.to_string()))
}

fn occurrences(positions: Vec<u64>) -> PyResult<OccurrenceVector> {
    OccurrenceVector::from_unordered(positions).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// An incremental session: feed text with `step`, query with `snapshot`.
#[pyclass(name = "Session", module = "mindstream")]
struct PySession {
    inner: Inner,
}

#[pymethods]
impl PySession {
    #[new]
    #[pyo3(signature = (mode = "annotated", lexicon = None))]
    fn new(mode: &str, lexicon: Option<PathBuf>) -> PyResult<Self> {
        let mode: InputMode = mode.parse().map_err(PyValueError::new_err)?;
        let config = SessionConfig { mode, lexicon_path: lexicon.clone(), ..SessionConfig::default() };
        let mut inner = Inner::new(config).map_err(to_py_err)?;
        if let Some(path) = lexicon {
            let lexicon = Lexicon::from_file(path).map_err(|e| to_py_err(e.into()))?;
            inner.set_lexicon(lexicon);
        }
        Ok(PySession { inner })
    }

    fn step(&mut self, py: Python<'_>, text: &str) -> PyResult<Py<PyAny>> {
        let delta = self.inner.step(text).map_err(to_py_err)?;
        to_python(py, &delta)
    }

    #[pyo3(signature = (request_id, actor = None, object = None, confirm_new = false, discard = false))]
    fn resolve(
        &mut self,
        py: Python<'_>,
        request_id: &str,
        actor: Option<String>,
        object: Option<&str>,
        confirm_new: bool,
        discard: bool,
    ) -> PyResult<Py<PyAny>> {
        let resolution = match (discard, actor) {
            (true, None) => Resolution::Discard,
            (false, Some(actor)) => {
                let object = object
                    .map(|o| parse_field(o, Category::Noun))
                    .transpose()
                    .map_err(|e| PyValueError::new_err(e.to_string()))?;
                Resolution::Bind { actor, object, confirm_new }
            }
            _ => return Err(PyValueError::new_err("give exactly one of actor or discard=True")),
        };
        let delta = self.inner.resolve(request_id, resolution).map_err(to_py_err)?;
        to_python(py, &delta)
    }

    #[pyo3(signature = (actor, r#fn = "f1", c = None, delta = None))]
    fn snapshot(
        &self,
        py: Python<'_>,
        actor: &str,
        r#fn: &str,
        c: Option<u64>,
        delta: Option<f64>,
    ) -> PyResult<Py<PyAny>> {
        let snapshot =
            self.inner.snapshot(actor, function(r#fn)?, c, delta).map_err(to_py_err)?;
        to_python(py, &snapshot)
    }

    #[pyo3(signature = (c = None))]
    fn actors(&self, c: Option<u64>) -> Vec<String> {
        let names = match c {
            Some(c) => self.inner.store().actors_as_of(c),
            None => self.inner.actors(),
        };
        names.into_iter().map(str::to_string).collect()
    }

    fn pending(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_python(py, &self.inner.pending())
    }

    fn dropped(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_python(py, &self.inner.dropped())
    }

    /// Emitted collocations as wire lines, oldest first.
    fn event_log(&self) -> Vec<String> {
        self.inner.event_log().iter().map(|c| c.to_wire()).collect()
    }

    #[getter]
    fn position(&self) -> u64 {
        self.inner.position_counter()
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = Inner::from_json(text).map_err(to_py_err)?;
        Ok(PySession { inner })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(path).map_err(to_py_err)
    }

    /// Loads a session file; raw-mode sessions get their lexicon back when
    /// the recorded path is still readable.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let mut inner = Inner::load(path).map_err(to_py_err)?;
        if let Some(lex) = inner.config().lexicon_path.clone() {
            if let Ok(lexicon) = Lexicon::from_file(lex) {
                inner.set_lexicon(lexicon);
            }
        }
        Ok(PySession { inner })
    }

    fn __repr__(&self) -> String {
        format!(
            "Session(position={}, actors={})",
            self.inner.position_counter(),
            self.inner.actors().len()
        )
    }
}

#[pyfunction]
#[pyo3(signature = (c, positions, base = priority::DEFAULT_F1_BASE))]
fn f1(c: u64, positions: Vec<u64>, base: f64) -> PyResult<f64> {
    priority::f1_with_base(c, &occurrences(positions)?, base)
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pyfunction]
fn f2(c: u64, positions: Vec<u64>) -> PyResult<f64> {
    priority::f2(c, &occurrences(positions)?).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pyfunction]
fn f3(c: u64, positions: Vec<u64>) -> PyResult<f64> {
    priority::f3(c, &occurrences(positions)?).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pyfunction]
fn a_hat(d: u64) -> PyResult<f64> {
    priority::a_hat(d).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pyfunction]
fn display_value(priority: f64) -> String {
    priority::display_value(priority)
}

#[pymodule]
#[pyo3(name = "mindstream")]
fn mindstream_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySession>()?;
    m.add_function(wrap_pyfunction!(f1, m)?)?;
    m.add_function(wrap_pyfunction!(f2, m)?)?;
    m.add_function(wrap_pyfunction!(f3, m)?)?;
    m.add_function(wrap_pyfunction!(a_hat, m)?)?;
    m.add_function(wrap_pyfunction!(display_value, m)?)?;
    m.add("MindstreamError", m.py().get_type::<MindstreamError>())?;
    Ok(())
}
