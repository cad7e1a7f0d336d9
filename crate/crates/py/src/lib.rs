//! Python bindings: instances, the reference solver, single solves and sweeps.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use multibid_core::augmented::{prediction_error as core_prediction_error, Prediction};
use multibid_core::centroid::{CentroidConfig, SamplerConfig};
use multibid_core::harness::bench::{bench_sweep, sized_centroid_config, write_csv, BenchGrid};
use multibid_core::harness::generate::{generate as core_generate, perturbed_prediction, GenConfig, Mode, Style};
use multibid_core::harness::report::{solve as core_solve, Algorithm, SolveOptions};
use multibid_core::reference::{solve_reference, Binding};
use multibid_core::{BidVector, Error};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Invariant(_) | Error::DegenerateBody(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn binding_name(b: Binding) -> &'static str {
    match b {
        Binding::Ros => "ROS",
        Binding::Budget => "Budget",
        Binding::None => "None",
    }
}

fn parse_style(s: &str) -> PyResult<Style> {
    match s {
        "slack" => Ok(Style::Slack),
        "binding" => Ok(Style::Binding),
        other => Err(PyValueError::new_err(format!("unknown style '{other}' (expected slack or binding)"))),
    }
}

#[pyclass(name = "Instance", module = "pymultibid", frozen)]
struct PyInstance {
    inner: multibid_core::Instance,
}

#[pymethods]
impl PyInstance {
    #[new]
    #[pyo3(signature = (values, costs, budget, target_ros))]
    fn new(values: Vec<Vec<f64>>, costs: Vec<Vec<f64>>, budget: f64, target_ros: f64) -> PyResult<Self> {
        if values.len() != costs.len() {
            return Err(PyValueError::new_err("values and costs list different platform counts"));
        }
        let platforms = values
            .into_iter()
            .zip(costs)
            .map(|(v, c)| multibid_core::PlatformLandscape::new(v, c))
            .collect::<Result<Vec<_>, _>>()
            .map_err(py_err)?;
        let inner = multibid_core::Instance::new(platforms, budget, target_ros).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: multibid_core::Instance::from_json(text).map_err(py_err)? })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(py_err)
    }

    #[getter]
    fn num_platforms(&self) -> usize {
        self.inner.num_platforms()
    }

    #[getter]
    fn bids(&self) -> usize {
        self.inner.bids()
    }

    #[getter]
    fn budget(&self) -> f64 {
        self.inner.budget()
    }

    #[getter]
    fn target_ros(&self) -> f64 {
        self.inner.target_ros()
    }

    #[getter]
    fn is_strict(&self) -> bool {
        self.inner.is_strict()
    }

    fn marginal_cost(&self, platform: usize, bid: usize) -> PyResult<f64> {
        self.inner.platform(platform).and_then(|p| p.marginal_cost(bid)).map_err(py_err)
    }

    /// `(value, cost)` of a fractional bid vector.
    fn evaluate(&self, bids: Vec<f64>) -> PyResult<(f64, f64)> {
        self.inner.evaluate(&BidVector::new(bids)).map_err(py_err)
    }

    fn feasible(&self, bids: Vec<f64>) -> PyResult<bool> {
        self.inner.feasible(&BidVector::new(bids)).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance(platforms={}, bids={}, budget={}, target_ros={})",
            self.inner.num_platforms(),
            self.inner.bids(),
            self.inner.budget(),
            self.inner.target_ros()
        )
    }
}

#[pyclass(name = "ReferenceSolution", module = "pymultibid", frozen, get_all)]
struct PyReference {
    optimum: Vec<f64>,
    almost_optimal: Vec<usize>,
    k_star: f64,
    value: f64,
    cost: f64,
    binding: &'static str,
}

#[pyclass(name = "SolveReport", module = "pymultibid", frozen, get_all)]
struct PyReport {
    algorithm: String,
    optimum: Vec<f64>,
    value: f64,
    cost: f64,
    binding: &'static str,
    distinct_queries: usize,
    total_queries: usize,
    eta: Option<f64>,
    iterations: Option<usize>,
    wall_time_ms: f64,
    json: String,
}

#[pymethods]
impl PyReport {
    fn to_json(&self) -> String {
        self.json.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "SolveReport(algorithm={:?}, value={}, distinct_queries={})",
            self.algorithm, self.value, self.distinct_queries
        )
    }
}

#[pyfunction]
#[pyo3(signature = (platforms, bids, seed=0, mode="strict", budget_style="slack", ros_style="binding"))]
fn generate(
    platforms: usize,
    bids: usize,
    seed: u64,
    mode: &str,
    budget_style: &str,
    ros_style: &str,
) -> PyResult<PyInstance> {
    let mode = match mode {
        "strict" => Mode::Strict,
        "smooth" => Mode::Smooth,
        other => return Err(PyValueError::new_err(format!("unknown mode '{other}' (expected strict or smooth)"))),
    };
    let config =
        GenConfig::new(platforms, bids, seed).mode(mode).styles(parse_style(budget_style)?, parse_style(ros_style)?);
    Ok(PyInstance { inner: core_generate(&config).map_err(py_err)? })
}

#[pyfunction]
fn reference(instance: &PyInstance) -> PyReference {
    let r = solve_reference(&instance.inner);
    PyReference {
        optimum: r.optimum.into_inner(),
        almost_optimal: r.almost_optimal,
        k_star: r.k_star,
        value: r.value,
        cost: r.cost,
        binding: binding_name(r.binding),
    }
}

/// Runs one algorithm. `prediction` is a bid list; `eta` alone perturbs the reference optimum.
#[pyfunction]
#[pyo3(signature = (instance, algo, prediction=None, eta=None, iterations=None, samples=None, seed=0))]
fn solve(
    instance: &PyInstance,
    algo: &str,
    prediction: Option<Vec<f64>>,
    eta: Option<f64>,
    iterations: Option<usize>,
    samples: Option<usize>,
    seed: u64,
) -> PyResult<PyReport> {
    let inst = &instance.inner;
    let algorithm: Algorithm = algo.parse().map_err(py_err)?;
    let mut options = SolveOptions { eta, ..SolveOptions::default() };
    options.prediction = match (prediction, eta) {
        (Some(p), _) => Some(Prediction::new(BidVector::new(p))),
        (None, Some(e)) if e.is_finite() && e >= 0.0 => {
            Some(perturbed_prediction(&solve_reference(inst).optimum, e, inst.bids(), seed))
        }
        (None, Some(e)) => return Err(PyValueError::new_err(format!("bad prediction error level {e}"))),
        (None, None) => None,
    };
    if algorithm == Algorithm::Centroid {
        options.centroid = match iterations {
            Some(iterations) => CentroidConfig { iterations, sampler: SamplerConfig::default(), seed },
            None => sized_centroid_config(inst, solve_reference(inst).value, seed),
        };
        if let Some(s) = samples {
            options.centroid.sampler = SamplerConfig { samples: s.max(1), burn_in: s / 2 };
        }
    }
    let (r, _) = core_solve(inst, algorithm, &options).map_err(py_err)?;
    let json = serde_json::to_string(&r).map_err(|e| py_err(e.into()))?;
    Ok(PyReport {
        algorithm: r.algorithm.name().to_string(),
        optimum: r.optimum.into_inner(),
        value: r.value,
        cost: r.cost,
        binding: binding_name(r.binding),
        distinct_queries: r.distinct_queries,
        total_queries: r.total_queries,
        eta: r.eta,
        iterations: r.iterations,
        wall_time_ms: r.wall_time_ms,
        json,
    })
}

/// Runs a grid such as `m=1,2;n=8,32;algo=mom,bmom;eta=0,4` and returns CSV text.
#[pyfunction]
#[pyo3(name = "bench", signature = (grid, trials=10, seed=0))]
fn bench_csv(py: Python<'_>, grid: &str, trials: usize, seed: u64) -> PyResult<String> {
    let grid = BenchGrid::parse(grid, trials).map_err(py_err)?;
    let rows = py.detach(|| bench_sweep(&grid, seed)).map_err(py_err)?;
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).map_err(py_err)?;
    String::from_utf8(buf).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pyfunction]
fn prediction_error(optimum: Vec<f64>, prediction: Vec<f64>) -> PyResult<f64> {
    core_prediction_error(&BidVector::new(optimum), &Prediction::new(BidVector::new(prediction)))
        .map(|e| e.eta)
        .map_err(py_err)
}

#[pymodule]
fn pymultibid(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_class::<PyReference>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(reference, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(bench_csv, m)?)?;
    m.add_function(wrap_pyfunction!(prediction_error, m)?)?;
    Ok(())
}
