//! Python bindings for `cvtomo`.

use std::str::FromStr;

use cvtomo::crb::{closed_form_value, crossover_find, ClosedFormFamily, Crossover};
use cvtomo::estimator::{ratio_moment_predict, RatioMoment};
use cvtomo::fock::{build_fock, build_gaussian_auto, weyl_moments, GaussianSpec};
use cvtomo::phase_space::{husimi_q, noclick_prob, wigner_w, MomentKernelSet, PhaseGrid, PhasePoint, DEFAULT_POINTS};
use cvtomo::sampler;
use cvtomo::{run_mse_harness, BhomConfig, Method, MseExperiment, StateFamily};
use nalgebra::DMatrix;
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: cvtomo::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn method(s: &str) -> PyResult<Method> {
    Method::from_str(s).map_err(err)
}

/// Truncated Fock-basis density matrix.
#[pyclass(name = "DensityMatrix", module = "cvtomo_py", frozen)]
struct PyDensityMatrix {
    inner: cvtomo::DensityMatrix,
}

#[pymethods]
impl PyDensityMatrix {
    #[staticmethod]
    #[pyo3(signature = (n, dim=None))]
    fn fock(n: usize, dim: Option<usize>) -> PyResult<Self> {
        let inner = build_fock(n, dim.unwrap_or(n + 16)).map_err(err)?;
        Ok(Self { inner })
    }

    /// Gaussian state with Husimi-scale parameters `μ ≥ 1` and `λ > 0`.
    #[staticmethod]
    #[pyo3(signature = (mu, lam=None))]
    fn gaussian(mu: f64, lam: Option<f64>) -> PyResult<Self> {
        let spec = GaussianSpec::new(mu, lam.unwrap_or(mu)).map_err(err)?;
        Ok(Self {
            inner: build_gaussian_auto(spec).map_err(err)?,
        })
    }

    /// From a square nested list of complex or real entries.
    #[staticmethod]
    fn from_rows(rows: Vec<Vec<Complex64>>) -> PyResult<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(PyValueError::new_err("matrix must be square"));
        }
        let m = nalgebra_from(&rows);
        Ok(Self {
            inner: cvtomo::DensityMatrix::new(m, 1e-10).map_err(err)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn populations(&self) -> Vec<f64> {
        self.inner.populations()
    }

    fn mean_photon_number(&self) -> f64 {
        self.inner.mean_photon_number()
    }

    fn element(&self, m: usize, n: usize) -> PyResult<Complex64> {
        if m >= self.inner.dim() || n >= self.inner.dim() {
            return Err(PyValueError::new_err("index outside the truncation"));
        }
        Ok(self.inner.get(m, n))
    }

    /// Weyl-ordered moments of total order `m`, from `X^m` to `P^m`.
    fn weyl_moments(&self, m: usize) -> PyResult<Vec<f64>> {
        weyl_moments(&self.inner, m).map_err(err)
    }

    fn husimi_q(&self, x: f64, p: f64) -> f64 {
        husimi_q(&self.inner, PhasePoint::new(x, p))
    }

    fn wigner_w(&self, x: f64, p: f64) -> f64 {
        wigner_w(&self.inner, PhasePoint::new(x, p))
    }

    fn noclick_prob(&self, x: f64, p: f64, eta: f64) -> PyResult<f64> {
        noclick_prob(&self.inner, PhasePoint::new(x, p), eta).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("DensityMatrix(dim={}, mean_n={:.6})", self.inner.dim(), self.inner.mean_photon_number())
    }
}

fn nalgebra_from(rows: &[Vec<Complex64>]) -> DMatrix<Complex64> {
    let dim = rows.len();
    DMatrix::from_fn(dim, dim, |i, j| rows[i][j])
}

fn family(kind: &str, param: f64) -> PyResult<ClosedFormFamily> {
    match kind.to_ascii_lowercase().as_str() {
        "gaussian" => Ok(ClosedFormFamily::Gaussian(param)),
        "fock" if param >= 0.0 && param.fract() == 0.0 => Ok(ClosedFormFamily::Fock(param as usize)),
        _ => Err(PyValueError::new_err(format!("unknown family {kind:?} with parameter {param}"))),
    }
}

/// Catalog bound for `gaussian` (`μ = λ`) or `fock` states.
#[pyfunction]
fn closed_form(kind: &str, param: f64, method_name: &str, m: usize) -> PyResult<f64> {
    closed_form_value(family(kind, param)?, method(method_name)?, m).map_err(err)
}

/// Quadrature bound; `eta < 1` selects the realistic HET/UHOM bounds.
#[pyfunction]
#[pyo3(signature = (rho, method_name, m, points=DEFAULT_POINTS, eta=1.0))]
fn scrb_numeric(rho: &PyDensityMatrix, method_name: &str, m: usize, points: usize, eta: f64) -> PyResult<f64> {
    let method = method(method_name)?;
    let k = MomentKernelSet::new(m).map_err(err)?;
    let rho = &rho.inner;
    let value = match method {
        Method::Het | Method::Uhom if eta < 1.0 => {
            let grid = PhaseGrid::covering_realistic(rho, m, eta, points).map_err(err)?;
            let (h, u) = cvtomo::scrb_realistic(rho, &k, &grid, eta).map_err(err)?;
            if method == Method::Het { h } else { u }
        }
        Method::Het => cvtomo::scrb_het_numeric(rho, &k, &PhaseGrid::covering(rho, m, points).map_err(err)?).map_err(err)?,
        Method::Uhom => cvtomo::scrb_uhom_numeric(rho, &k, &PhaseGrid::covering(rho, m, points).map_err(err)?).map_err(err)?,
        Method::Bhom => cvtomo::scrb_bhom_numeric(rho, &k, &BhomConfig::default()).map_err(err)?,
        Method::BhomOpt => return Err(PyValueError::new_err("BHOMOPT has only the closed-form route")),
    };
    Ok(value.scalar_bound)
}

/// Gaussian `μ` where two catalog curves cross, or `None`.
#[pyfunction]
#[pyo3(signature = (m, first, second, lo=1.0, hi=2.0))]
fn crossover(m: usize, first: &str, second: &str, lo: f64, hi: f64) -> PyResult<Option<f64>> {
    match crossover_find(m, (method(first)?, method(second)?), (lo, hi)).map_err(err)? {
        Crossover::Root(r) => Ok(Some(r)),
        Crossover::None { .. } => Ok(None),
    }
}

/// `A1`, `A2` or `A9` ratio average for binomial node data.
#[pyfunction]
#[pyo3(signature = (p, n0, which, l, lp=None))]
fn ratio_moment(p: Vec<f64>, n0: f64, which: &str, l: usize, lp: Option<usize>) -> PyResult<f64> {
    let lp = lp.unwrap_or(l);
    let which = match which.to_ascii_uppercase().as_str() {
        "A1" => RatioMoment::A1 { l },
        "A2" => RatioMoment::A2 { l, lp },
        "A9" => RatioMoment::A9 { l, lp },
        other => return Err(PyValueError::new_err(format!("unknown ratio moment {other:?}"))),
    };
    ratio_moment_predict(&p, n0, which).map_err(err)
}

/// Simulated counts on the covering grid (`HET`, `UHOM`) or per phase and
/// bin (`BHOM`).
#[pyfunction]
#[pyo3(signature = (rho, method_name, events, seed=0, points=121, eta=1.0))]
fn sample_counts(
    rho: &PyDensityMatrix,
    method_name: &str,
    events: u64,
    seed: u64,
    points: usize,
    eta: f64,
) -> PyResult<Vec<Vec<f64>>> {
    let rho = &rho.inner;
    match method(method_name)? {
        Method::Het => {
            let grid = PhaseGrid::covering(rho, 1, points).map_err(err)?;
            Ok(vec![sampler::sample_het(rho, &grid, events, seed).map_err(err)?.counts])
        }
        Method::Uhom => {
            let grid = PhaseGrid::covering(rho, 1, points).map_err(err)?;
            Ok(vec![sampler::sample_uhom(rho, &grid, events, eta, seed).map_err(err)?.counts])
        }
        Method::Bhom | Method::BhomOpt => {
            let cfg = BhomConfig::default();
            Ok(sampler::sample_bhom(rho, &cfg.phases(), cfg.n_x, cfg.x_extent, events, seed)
                .map_err(err)?
                .counts)
        }
    }
}

/// Replication harness; returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (kind, param, method_name, m, replications=200, seed=0, lam=None, events=None, eta=1.0))]
#[allow(clippy::too_many_arguments)]
fn run_mse<'py>(
    py: Python<'py>,
    kind: &str,
    param: f64,
    method_name: &str,
    m: usize,
    replications: usize,
    seed: u64,
    lam: Option<f64>,
    events: Option<u64>,
    eta: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let fam = match family(kind, param)? {
        ClosedFormFamily::Gaussian(mu) => StateFamily::Gaussian { mu, lambda: lam.unwrap_or(mu) },
        ClosedFormFamily::Fock(n) => StateFamily::Fock { n },
    };
    let mut exp = MseExperiment::new(fam, method(method_name)?, m);
    exp.replications = replications;
    exp.seed = seed;
    exp.eta = eta;
    if let Some(n) = events {
        match exp.method {
            Method::Het => exp.het_events = n,
            Method::Uhom => exp.uhom_events_per_point = n,
            Method::Bhom | Method::BhomOpt => exp.bhom_events_per_phase = n,
        }
    }
    let r = py.detach(|| run_mse_harness(&exp)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("method", r.method.label())?;
    d.set_item("family", r.family.label())?;
    d.set_item("params", r.family.params())?;
    d.set_item("m", r.order)?;
    d.set_item("replications", r.replications)?;
    d.set_item("scaled_mse", r.scaled_mse)?;
    d.set_item("standard_error", r.standard_error)?;
    d.set_item("scrb_reference", r.scrb_reference)?;
    d.set_item("ratio", r.ratio)?;
    d.set_item("failure_rate", r.failure_rate)?;
    Ok(d)
}

#[pymodule]
fn cvtomo_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDensityMatrix>()?;
    m.add_function(wrap_pyfunction!(closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(scrb_numeric, m)?)?;
    m.add_function(wrap_pyfunction!(crossover, m)?)?;
    m.add_function(wrap_pyfunction!(ratio_moment, m)?)?;
    m.add_function(wrap_pyfunction!(sample_counts, m)?)?;
    m.add_function(wrap_pyfunction!(run_mse, m)?)?;
    Ok(())
}
