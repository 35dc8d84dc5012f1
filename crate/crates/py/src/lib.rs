//! Python bindings. Results come back as plain dicts and lists.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde::Serialize;
use serde_json::Value;

use selfsim::phi::TailData;
use selfsim::residual::{pde_residual as residual, ResidualGrid, SelfSimilarSpec};
use selfsim::{IntegratorOptions, PhiOptions, TailKind};

fn err(e: selfsim::Error) -> PyErr {
    if e.exit_code() == 2 {
        PyRuntimeError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn value_to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(a) => {
            let items = a.iter().map(|x| value_to_py(py, x)).collect::<PyResult<Vec<_>>>()?;
            PyList::new(py, items)?.into_any()
        }
        Value::Object(o) => {
            let d = PyDict::new(py);
            for (k, x) in o {
                d.set_item(k, value_to_py(py, x)?)?;
            }
            d.into_any()
        }
    })
}

fn to_py<'py, T: Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let value = serde_json::to_value(v).map_err(|e| PyValueError::new_err(e.to_string()))?;
    value_to_py(py, &value)
}

fn integ(r_max: Option<f64>) -> IntegratorOptions {
    let mut o = IntegratorOptions::default();
    if let Some(r) = r_max {
        o.r_max = r;
    }
    o
}

/// Derived constants for (N, p), as a dict.
#[pyfunction]
#[pyo3(signature = (n, p))]
fn make_params(py: Python<'_>, n: u32, p: f64) -> PyResult<Bound<'_, PyAny>> {
    to_py(py, &selfsim::make_params(n, p).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (n, p, beta))]
fn theory_constants(py: Python<'_>, n: u32, p: f64, beta: f64) -> PyResult<Bound<'_, PyAny>> {
    let pr = selfsim::make_params(n, p).map_err(err)?;
    to_py(py, &selfsim::theory_constants(&pr, beta).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (n, p, beta, r_max=None))]
fn classify(py: Python<'_>, n: u32, p: f64, beta: f64, r_max: Option<f64>) -> PyResult<Bound<'_, PyAny>> {
    let pr = selfsim::make_params(n, p).map_err(err)?;
    let c = py.detach(|| selfsim::classify(&pr, beta, &integ(r_max))).map_err(err)?;
    to_py(py, &c)
}

#[pyfunction]
#[pyo3(signature = (n, p, tol=1e-8, r_max=None))]
fn find_beta_star(py: Python<'_>, n: u32, p: f64, tol: f64, r_max: Option<f64>) -> PyResult<Bound<'_, PyAny>> {
    let pr = selfsim::make_params(n, p).map_err(err)?;
    let rep = py.detach(|| selfsim::find_beta_star(&pr, tol, &integ(r_max))).map_err(err)?;
    to_py(py, &rep)
}

/// Profile run: termination, events and the sample columns r, f, fp, g, w, wp, E.
#[pyfunction]
#[pyo3(signature = (n, p, beta, r_max=None, stop_at_exceed=true))]
fn integrate_profile(
    py: Python<'_>,
    n: u32,
    p: f64,
    beta: f64,
    r_max: Option<f64>,
    stop_at_exceed: bool,
) -> PyResult<Bound<'_, PyAny>> {
    let pr = selfsim::make_params(n, p).map_err(err)?;
    let mut o = integ(r_max);
    o.stop_at_exceed = stop_at_exceed;
    let sol = py.detach(|| selfsim::integrate_profile(&pr, beta, &o)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("beta", sol.beta)?;
    d.set_item("termination", to_py(py, &sol.termination)?)?;
    d.set_item("events", to_py(py, &sol.events)?)?;
    let col = |f: fn(&selfsim::ProfileSample) -> f64| sol.samples.iter().map(f).collect::<Vec<f64>>();
    d.set_item("r", col(|s| s.r))?;
    d.set_item("f", col(|s| s.f))?;
    d.set_item("fp", col(|s| s.fp))?;
    d.set_item("g", col(|s| s.g))?;
    d.set_item("w", col(|s| s.w))?;
    d.set_item("wp", col(|s| s.wp))?;
    d.set_item("E", col(|s| s.e))?;
    Ok(d.into_any())
}

fn phi_opts(xi_max: Option<f64>) -> PhiOptions {
    let mut o = PhiOptions::default();
    if let Some(x) = xi_max {
        o.xi_max = x;
    }
    o
}

/// Φ-plane run: regime, end state and the columns xi, phi.
#[pyfunction]
#[pyo3(signature = (n, p, beta, xi_max=None))]
fn solve_phi(py: Python<'_>, n: u32, p: f64, beta: f64, xi_max: Option<f64>) -> PyResult<Bound<'_, PyAny>> {
    let pr = selfsim::make_params(n, p).map_err(err)?;
    let sol = py.detach(|| selfsim::solve_phi(&pr, beta, &phi_opts(xi_max))).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("beta", sol.beta)?;
    d.set_item("regime", to_py(py, &sol.regime)?)?;
    d.set_item("end_state", to_py(py, &sol.end_state)?)?;
    d.set_item("xi", sol.samples.iter().map(|s| s.xi).collect::<Vec<f64>>())?;
    d.set_item("phi", sol.samples.iter().map(|s| s.phi).collect::<Vec<f64>>())?;
    Ok(d.into_any())
}

/// Tail constant fit; `kind` is one of "K_C", "K_log", "K_star".
#[pyfunction]
#[pyo3(signature = (n, p, beta, kind, xi_max=None, r_max=None))]
fn fit_tail<'py>(
    py: Python<'py>,
    n: u32,
    p: f64,
    beta: f64,
    kind: &str,
    xi_max: Option<f64>,
    r_max: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let pr = selfsim::make_params(n, p).map_err(err)?;
    let kind: TailKind = kind.parse().map_err(err)?;
    let fit = py
        .detach(|| match kind {
            TailKind::KLog => {
                let mut o = integ(r_max);
                o.stop_at_exceed = false;
                let sol = selfsim::integrate_profile(&pr, beta, &o)?;
                selfsim::fit_tail(TailData::Profile(&sol), kind)
            }
            _ => {
                let sol = selfsim::solve_phi(&pr, beta, &phi_opts(xi_max))?;
                selfsim::fit_tail(TailData::Phi(&sol), kind)
            }
        })
        .map_err(err)?;
    to_py(py, &fit)
}

#[pyfunction]
#[pyo3(signature = (n, p, beta, t_lo=0.0, t_hi=1.0, r_lo=0.5, r_hi=5.0, t_steps=200, r_steps=200, amplitude=1.0, t0=0.0))]
#[allow(clippy::too_many_arguments)]
fn pde_residual(
    py: Python<'_>,
    n: u32,
    p: f64,
    beta: f64,
    t_lo: f64,
    t_hi: f64,
    r_lo: f64,
    r_hi: f64,
    t_steps: usize,
    r_steps: usize,
    amplitude: f64,
    t0: f64,
) -> PyResult<Bound<'_, PyAny>> {
    let pr = selfsim::make_params(n, p).map_err(err)?;
    let grid = ResidualGrid { t_lo, t_hi, r_lo, r_hi, t_steps, r_steps };
    let rep = py
        .detach(|| {
            let spec = SelfSimilarSpec::for_grid(&pr, beta, t0, &grid, &IntegratorOptions::default())?
                .with_amplitude(amplitude);
            residual(&spec, &grid)
        })
        .map_err(err)?;
    to_py(py, &rep)
}

#[pymodule]
fn pyselfsim(_py: Python, m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(make_params, m)?)?;
    m.add_function(wrap_pyfunction!(theory_constants, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(find_beta_star, m)?)?;
    m.add_function(wrap_pyfunction!(integrate_profile, m)?)?;
    m.add_function(wrap_pyfunction!(solve_phi, m)?)?;
    m.add_function(wrap_pyfunction!(fit_tail, m)?)?;
    m.add_function(wrap_pyfunction!(pde_residual, m)?)?;
    m.add("CODE_VERSION", selfsim::io::CODE_VERSION)?;
    Ok(())
}
