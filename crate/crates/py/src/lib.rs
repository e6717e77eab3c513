//! Python bindings: time scales, delta integrals, the built-in problems and
//! the verification and solver entry points. Structured results come back as
//! plain dicts with the same layout as the `tsvar` command line reports.

use std::sync::Mutex;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use tsvar::calculus::{improper_integral as improper, integrate_fn, ImproperConfig};
use tsvar::expr::Expr;
use tsvar::variational::{el_residual, solve_truncated, verify_candidate_with, Terminal, Trajectory};
use tsvar::{problems, Error, GridFunction, Problem, ProblemFile, TimeScale};

pyo3::create_exception!(tsvar, TsvarError, PyRuntimeError);

fn err(e: Error) -> PyErr {
    match e {
        Error::Parse { .. }
        | Error::InvalidProblem(_)
        | Error::InvalidTimeScale(_)
        | Error::PartialsMismatch { .. }
        | Error::DimensionMismatch { .. } => PyValueError::new_err(e.to_string()),
        _ => TsvarError::new_err(e.to_string()),
    }
}

fn to_py<'py>(py: Python<'py>, v: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn rows(f: &GridFunction) -> Vec<(f64, Vec<f64>)> {
    f.times()
        .iter()
        .enumerate()
        .map(|(i, t)| (*t, f.value(i).to_vec()))
        .collect()
}

#[pyclass(name = "TimeScale", module = "tsvar", frozen)]
struct PyTimeScale {
    inner: TimeScale,
}

#[pymethods]
impl PyTimeScale {
    /// Parses the time-scale DSL, e.g. `union(interval(0,1), arith(2,1))`.
    #[new]
    fn new(dsl: &str) -> PyResult<Self> {
        Ok(PyTimeScale {
            inner: TimeScale::parse(dsl).map_err(err)?,
        })
    }

    #[staticmethod]
    fn naturals() -> Self {
        PyTimeScale {
            inner: TimeScale::naturals(),
        }
    }

    #[getter]
    fn a(&self) -> f64 {
        self.inner.a()
    }

    fn contains(&self, t: f64) -> bool {
        self.inner.contains(t)
    }

    fn sigma(&self, t: f64) -> PyResult<f64> {
        self.inner.sigma(t).map_err(err)
    }

    fn rho(&self, t: f64) -> PyResult<f64> {
        self.inner.rho(t).map_err(err)
    }

    fn mu(&self, t: f64) -> PyResult<f64> {
        self.inner.mu(t).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("TimeScale('{}')", self.inner)
    }
}

/// Runs `body` with an evaluator for `f`, which is either an expression in
/// `t` or a Python callable. Callable errors are re-raised afterwards.
fn with_integrand<R: Send>(
    py: Python<'_>,
    f: &Bound<'_, PyAny>,
    body: impl FnOnce(&(dyn Fn(f64) -> f64 + Sync)) -> tsvar::Result<R> + Send,
) -> PyResult<R> {
    if let Ok(src) = f.extract::<String>() {
        let e = Expr::parse(&src, &["t"]).map_err(err)?;
        return py.detach(|| body(&|t| e.eval(&[t]))).map_err(err);
    }
    if !f.is_callable() {
        return Err(PyValueError::new_err("integrand must be a string or a callable"));
    }
    let func: Py<PyAny> = f.clone().unbind();
    let failure: Mutex<Option<PyErr>> = Mutex::new(None);
    let call = |t: f64| {
        Python::attach(|py| {
            match func.bind(py).call1((t,)).and_then(|r| r.extract::<f64>().map_err(Into::into)) {
                Ok(v) => v,
                Err(e) => {
                    failure.lock().unwrap().get_or_insert(e);
                    f64::NAN
                }
            }
        })
    };
    let out = py.detach(|| body(&call));
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    out.map_err(err)
}

/// `int_lo^hi f(t) Delta t`.
#[pyfunction]
#[pyo3(signature = (timescale, f, lo, hi, h = 1e-3))]
fn integrate(
    py: Python<'_>,
    timescale: &PyTimeScale,
    f: &Bound<'_, PyAny>,
    lo: f64,
    hi: f64,
    h: f64,
) -> PyResult<f64> {
    let ts = &timescale.inner;
    with_integrand(py, f, |g| integrate_fn(ts, g, lo, hi, h))
}

/// Classifies `lim_{b -> inf} int_a^b f Delta t` from the partial integrals at `horizons`.
#[pyfunction]
#[pyo3(signature = (timescale, f, horizons, h = 1e-3))]
fn improper_integral<'py>(
    py: Python<'py>,
    timescale: &PyTimeScale,
    f: &Bound<'py, PyAny>,
    horizons: Vec<f64>,
    h: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let ts = &timescale.inner;
    let cfg = ImproperConfig {
        h,
        ..ImproperConfig::default()
    };
    let est = with_integrand(py, f, |g| improper(ts, g, ts.a(), &horizons, &cfg))?;
    to_py(py, &est)
}

#[pyclass(name = "Problem", module = "tsvar", frozen)]
struct PyProblem {
    file: ProblemFile,
    problem: Problem,
}

impl PyProblem {
    fn build(file: ProblemFile) -> PyResult<Self> {
        let problem = file.problem().map_err(err)?;
        Ok(PyProblem { file, problem })
    }
}

#[pymethods]
impl PyProblem {
    #[staticmethod]
    fn from_json(src: &str) -> PyResult<Self> {
        PyProblem::build(ProblemFile::from_json(src).map_err(err)?)
    }

    /// A built-in problem; see `corpus_ids()`.
    #[staticmethod]
    fn corpus(id: &str) -> PyResult<Self> {
        PyProblem::build(problems::find(id).map_err(err)?.file)
    }

    fn to_json(&self) -> String {
        self.file.to_json()
    }

    #[getter]
    fn id(&self) -> Option<String> {
        self.file.id.clone()
    }

    #[getter]
    fn a(&self) -> f64 {
        self.problem.a()
    }

    #[getter]
    fn x_a(&self) -> Vec<f64> {
        self.problem.x_a().to_vec()
    }

    #[getter]
    fn timescale(&self) -> PyTimeScale {
        PyTimeScale {
            inner: self.problem.timescale().clone(),
        }
    }

    fn candidates(&self) -> Vec<String> {
        self.file.candidates.keys().cloned().collect()
    }

    /// Expected verdict of a known candidate, if the file records one.
    fn expected(&self, candidate: &str) -> Option<String> {
        let v = self.file.expected.get(candidate)?;
        serde_json::to_value(v).ok()?.as_str().map(str::to_string)
    }

    /// Euler-Lagrange residual on `[a, a + window]`: `{"sup_norm", "residuals"}`.
    #[pyo3(signature = (candidate, window = 10.0, h = None))]
    fn residual<'py>(
        &self,
        py: Python<'py>,
        candidate: &str,
        window: f64,
        h: Option<f64>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let x = self.file.candidate(candidate).map_err(err)?;
        let h = h.unwrap_or(self.file.config.verify.h);
        let p = &self.problem;
        let r = py
            .detach(|| {
                let end = p.timescale().next_member_at_or_after(p.a() + window);
                let grid = p.grid_past(end, h, &[])?;
                let stop = grid.index_of(end)?;
                let traj = Trajectory::from_path(p, &x, grid)?;
                Ok(el_residual(p, &traj)?.truncate(stop + 1))
            })
            .map_err(err)?;
        #[derive(Serialize)]
        struct Out {
            sup_norm: f64,
            residuals: Vec<(f64, Vec<f64>)>,
        }
        to_py(
            py,
            &Out {
                sup_norm: r.sup_norm(),
                residuals: rows(&r),
            },
        )
    }

    /// Full verification report; the file's other candidates act as competitors.
    #[pyo3(signature = (candidate, h = None))]
    fn verify<'py>(
        &self,
        py: Python<'py>,
        candidate: &str,
        h: Option<f64>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let x = self.file.candidate(candidate).map_err(err)?;
        let competitors: Vec<_> = self
            .file
            .candidate_paths()
            .map_err(err)?
            .into_iter()
            .filter(|(name, _)| name != candidate)
            .collect();
        let mut cfg = self.file.config.verify.clone();
        if let Some(h) = h {
            cfg.h = h;
        }
        let p = &self.problem;
        let report = py
            .detach(|| verify_candidate_with(p, &x, &competitors, &cfg))
            .map_err(err)?;
        to_py(py, &report)
    }

    /// Direct solve on `[a, T]`; `terminal=None` leaves the end free.
    #[pyo3(signature = (T, terminal = None, h = None, seed = None))]
    #[allow(non_snake_case)]
    fn solve<'py>(
        &self,
        py: Python<'py>,
        T: f64,
        terminal: Option<Vec<f64>>,
        h: Option<f64>,
        seed: Option<u64>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let terminal = terminal.map_or(Terminal::Free, Terminal::Pinned);
        let mut opts = self.file.config.solver.clone();
        if let Some(s) = seed {
            opts.seed = s;
        }
        let h = h.unwrap_or(self.file.config.verify.h);
        let p = &self.problem;
        let s = py
            .detach(|| solve_truncated(p, T, &terminal, h, &opts))
            .map_err(err)?;
        #[derive(Serialize)]
        struct Out {
            objective: f64,
            converged: bool,
            iterations: usize,
            trajectory: Vec<(f64, Vec<f64>)>,
        }
        to_py(
            py,
            &Out {
                objective: s.objective,
                converged: s.converged,
                iterations: s.iterations,
                trajectory: rows(s.trajectory.x()),
            },
        )
    }

    fn __repr__(&self) -> String {
        format!(
            "Problem(id={:?}, timescale='{}')",
            self.file.id.as_deref().unwrap_or(""),
            self.problem.timescale()
        )
    }
}

#[pyfunction]
fn corpus_ids() -> Vec<String> {
    problems::corpus().into_iter().map(|p| p.id).collect()
}

#[pymodule(name = "tsvar")]
fn tsvar_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTimeScale>()?;
    m.add_class::<PyProblem>()?;
    m.add_function(wrap_pyfunction!(integrate, m)?)?;
    m.add_function(wrap_pyfunction!(improper_integral, m)?)?;
    m.add_function(wrap_pyfunction!(corpus_ids, m)?)?;
    m.add("TsvarError", m.py().get_type::<TsvarError>())?;
    Ok(())
}
