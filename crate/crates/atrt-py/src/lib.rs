//! Python bindings: configurations, forward transform, reconstruction and acceptance checks.

use atrt::harness::acceptance::run_criterion;
use atrt::harness::config::ExperimentConfig;
use atrt::harness::experiment::run_experiment_full;
use atrt::harness::io::load_sinogram;
use atrt::harness::phantom::phantom_make;
use atrt::reconstruction::{fbp_unattenuated, FbpKind};
use atrt::special_solutions;
use atrt::transport::xray_attenuated;
use atrt::AtrtError;
use num_complex::Complex64;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: AtrtError) -> PyErr {
    match e {
        AtrtError::Io(e) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn config(text: Option<&str>, preset: Option<&str>) -> PyResult<ExperimentConfig> {
    match (text, preset) {
        (Some(t), _) => ExperimentConfig::parse(t),
        (None, Some(p)) => ExperimentConfig::preset(p),
        (None, None) => Ok(ExperimentConfig::default()),
    }
    .map_err(to_py)
}

/// The key = value text of a named preset.
#[pyfunction]
fn preset_config(name: &str) -> PyResult<String> {
    Ok(ExperimentConfig::preset(name).map_err(to_py)?.to_key_values().render())
}

/// Sinogram of the configured phantom as (n_beta, n_alpha, row-major values).
#[pyfunction]
#[pyo3(signature = (config_text=None, preset=None))]
fn forward(config_text: Option<&str>, preset: Option<&str>) -> PyResult<(usize, usize, Vec<Complex64>)> {
    let cfg = config(config_text, preset)?;
    let disc = cfg.discretization().map_err(to_py)?;
    let p = phantom_make(&cfg.phantom, &disc.pgrid).map_err(to_py)?;
    let s = xray_attenuated(&p.f, &p.a, &disc.forward);
    Ok((cfg.n_beta, cfg.n_alpha, s.data.values().to_vec()))
}

/// Runs simulate, gauge and reconstruct; returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (config_text=None, preset=None))]
fn run_experiment(py: Python<'_>, config_text: Option<&str>, preset: Option<&str>) -> PyResult<String> {
    let cfg = config(config_text, preset)?;
    let run = py.detach(|| run_experiment_full(&cfg)).map_err(to_py)?;
    Ok(run.report.to_json().to_string())
}

/// Unattenuated FBP of a sinogram file onto an n_rho × n_theta polar grid.
#[pyfunction]
#[pyo3(signature = (path, kind="rci0", n_rho=32, n_theta=64))]
fn fbp(path: &str, kind: &str, n_rho: usize, n_theta: usize) -> PyResult<Vec<Complex64>> {
    let kind = match kind {
        "rci0" => FbpKind::RcI0,
        "rciperp" => FbpKind::RcIperp,
        _ => return Err(PyValueError::new_err(format!("unknown kind {kind:?}"))),
    };
    let s = load_sinogram(std::path::Path::new(path)).map_err(to_py)?;
    let grid = atrt::fields::PolarGrid::new(n_rho, n_theta).map_err(to_py)?;
    Ok(fbp_unattenuated(&s.data, kind, &grid).map_err(to_py)?.values().to_vec())
}

/// (pass, detail) of acceptance criterion `id`.
#[pyfunction]
fn verify(py: Python<'_>, id: u8) -> PyResult<(bool, String)> {
    let r = py.detach(|| run_criterion(id)).map_err(to_py)?;
    Ok((r.pass, r.to_string()))
}

/// Normalized holomorphic basis function Z_k(z).
#[pyfunction]
fn z_k(k: u32, z: Complex64) -> Complex64 {
    special_solutions::z_k(k, z)
}

/// Closed-form J_{k,p}(x) and its quadrature value with `n_theta` nodes.
#[pyfunction]
#[pyo3(signature = (k, p, x, n_theta=2048))]
fn j_kp(k: u32, p: u32, x: Complex64, n_theta: usize) -> PyResult<(Complex64, Complex64)> {
    let quad = special_solutions::j_kp_oracle(k, p, x, n_theta).map_err(to_py)?;
    Ok((special_solutions::j_kp_closed(k, p, x), quad))
}

#[pymodule]
fn _atrt(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(preset_config, m)?)?;
    m.add_function(wrap_pyfunction!(forward, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(fbp, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(z_k, m)?)?;
    m.add_function(wrap_pyfunction!(j_kp, m)?)?;
    Ok(())
}
