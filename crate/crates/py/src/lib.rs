//! Python bindings for the `cellfree` simulator.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use cellfree::antenna::{self, Direction};
use cellfree::baselines::Baseline;
use cellfree::config::load_config_file;
use cellfree::environment::{StepOutcome, Transition};
use cellfree::geometry::Point3;
use cellfree::matrix::Matrix;
use cellfree::outage::{self, ExponentialSum};
use cellfree::{metrics, validate, Environment, Error, RandomSource, ScenarioConfig, Stream};

fn to_py(err: Error) -> PyErr {
    match err {
        Error::Config(_)
        | Error::InputRange(_)
        | Error::EmptyInput(_)
        | Error::Domain(_)
        | Error::IllConditioned { .. }
        | Error::DegenerateGeometry => PyValueError::new_err(err.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<Matrix> {
    Matrix::from_rows(&rows).ok_or_else(|| PyValueError::new_err("ragged matrix"))
}

/// Scenario parameters.
#[pyclass(name = "Scenario", module = "pycellfree", frozen, from_py_object)]
#[derive(Clone)]
struct PyScenario {
    inner: ScenarioConfig,
}

#[pymethods]
impl PyScenario {
    /// The 19-ORU, 6-user reference deployment.
    #[staticmethod]
    fn reference() -> Self {
        Self { inner: ScenarioConfig::reference_scenario() }
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let inner = cellfree::load_config(text).map_err(|e| to_py(e.into()))?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_file(path: std::path::PathBuf) -> PyResult<Self> {
        let inner = load_config_file(path).map_err(|e| to_py(e.into()))?;
        Ok(Self { inner })
    }

    #[getter]
    fn n_max(&self) -> usize {
        self.inner.n_max_users
    }

    #[getter]
    fn n_orus(&self) -> usize {
        self.inner.n_orus()
    }

    #[getter]
    fn obs_len(&self) -> usize {
        cellfree::environment::observation_len(&self.inner)
    }

    #[getter]
    fn oru_positions(&self) -> Vec<(f64, f64, f64)> {
        self.inner.oru_positions.iter().map(|p| (p.x, p.y, p.z)).collect()
    }

    #[getter]
    fn wavenumber(&self) -> f64 {
        self.inner.wavenumber()
    }

    #[getter]
    fn noise_power_w(&self) -> f64 {
        self.inner.noise_power_w()
    }

    /// Outage requirement at a horizontal position.
    fn eps_max_at(&self, x: f64, y: f64) -> f64 {
        self.inner.eps_max_at(&Point3::new(x, y, self.inner.uav_altitude_m()))
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(n_max={}, n_orus={}, area={}x{} m)",
            self.inner.n_max_users,
            self.inner.n_orus(),
            self.inner.area_x_m,
            self.inner.area_y_m
        )
    }
}

fn outcome_dict<'py>(py: Python<'py>, o: &StepOutcome) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("reward", o.reward)?;
    d.set_item("q1", o.q1)?;
    d.set_item("q2", o.q2)?;
    d.set_item("q3", o.q3)?;
    d.set_item("stability_term", o.stability_term)?;
    d.set_item("eps", &o.eps)?;
    d.set_item("clusters", &o.clusters)?;
    d.set_item("n_active", o.n_active)?;
    d.set_item("active", &o.active)?;
    d.set_item("reconfigured", &o.reconfigured)?;
    d.set_item("in_zone", &o.in_zone)?;
    d.set_item("outage_violation", &o.outage_violation)?;
    d.set_item("power", o.power.p.to_rows())?;
    Ok(d)
}

fn transition_dict<'py>(py: Python<'py>, tr: &Transition) -> PyResult<Bound<'py, PyDict>> {
    let d = outcome_dict(py, &tr.outcome)?;
    d.set_item("obs", &tr.observation.0)?;
    d.set_item("done", tr.done)?;
    Ok(d)
}

/// Stateful environment: `reset(seed)` then `step(action)` or `step_baseline(name)`.
#[pyclass(name = "Environment", module = "pycellfree")]
struct PyEnvironment {
    inner: Environment,
}

#[pymethods]
impl PyEnvironment {
    #[new]
    #[pyo3(signature = (scenario=None))]
    fn new(scenario: Option<PyScenario>) -> Self {
        let config = scenario.map_or_else(ScenarioConfig::reference_scenario, |s| s.inner);
        Self { inner: Environment::new(config) }
    }

    #[getter]
    fn obs_len(&self) -> usize {
        self.inner.observation_len()
    }

    #[getter]
    fn scenario(&self) -> PyScenario {
        PyScenario { inner: self.inner.config().clone() }
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        self.inner.reset(seed).0
    }

    /// Steps with an `n_max × K` action in `[0, 1]`.
    fn step<'py>(&mut self, py: Python<'py>, action: Vec<Vec<f64>>) -> PyResult<Bound<'py, PyDict>> {
        let tr = self.inner.step(&matrix(action)?).map_err(to_py)?;
        transition_dict(py, &tr)
    }

    /// Steps with a power matrix in watts.
    fn step_watts<'py>(&mut self, py: Python<'py>, power: Vec<Vec<f64>>) -> PyResult<Bound<'py, PyDict>> {
        let tr = self.inner.step_watts(&matrix(power)?).map_err(to_py)?;
        transition_dict(py, &tr)
    }

    /// Steps with a built-in policy: `"closest"` or `"opportunistic"`.
    fn step_baseline<'py>(&mut self, py: Python<'py>, name: &str) -> PyResult<Bound<'py, PyDict>> {
        let baseline = match name {
            "closest" => Baseline::Closest,
            "opportunistic" => Baseline::Opportunistic(self.inner.config().opportunistic.clone()),
            other => return Err(PyValueError::new_err(format!("unknown baseline `{other}`"))),
        };
        let state = self
            .inner
            .state()
            .ok_or_else(|| PyRuntimeError::new_err("step called before reset"))?;
        let power = baseline.act(state, self.inner.config()).map_err(to_py)?;
        let tr = self.inner.step_watts(&power.p).map_err(to_py)?;
        transition_dict(py, &tr)
    }

    /// Current step index, or `None` before the first reset.
    #[getter]
    fn t(&self) -> Option<u64> {
        self.inner.state().map(|s| s.t)
    }

    /// True UAV positions per slot (`None` for inactive slots).
    fn positions(&self) -> Option<Vec<Option<(f64, f64, f64)>>> {
        let state = self.inner.state()?;
        Some(
            state
                .uavs
                .iter()
                .map(|u| u.active.then_some((u.position.x, u.position.y, u.position.z)))
                .collect(),
        )
    }
}

fn sum_of(means: Vec<f64>) -> PyResult<ExponentialSum> {
    ExponentialSum::perturbed(means).map_err(to_py)
}

/// `P(Σ X_k > s)` for independent exponentials with the given means.
#[pyfunction]
fn hypoexp_sf(means: Vec<f64>, s: f64) -> PyResult<f64> {
    outage::hypoexp_sf(&sum_of(means)?, s).map_err(to_py)
}

/// `P(Σ X_k < γ_th · β)`.
#[pyfunction]
fn outage_probability(means: Vec<f64>, gamma_th_linear: f64, beta: f64) -> PyResult<f64> {
    outage::outage_probability(&sum_of(means)?, gamma_th_linear, beta).map_err(to_py)
}

/// Monte-Carlo estimate of `P(Σ X_k < s)` and its standard error.
#[pyfunction]
#[pyo3(signature = (means, s, samples=1_000_000, seed=0))]
fn mc_outage(py: Python<'_>, means: Vec<f64>, s: f64, samples: u64, seed: u64) -> PyResult<(f64, f64)> {
    let sum = sum_of(means)?;
    py.detach(|| {
        let mut rng = RandomSource::named(seed, Stream::FadingOracle(0));
        outage::mc_outage(&sum, s, samples, &mut rng)
    })
    .map_err(to_py)
}

/// Array gain towards `target = (θ, φ)` of a beam steered at `steer = (θ, φ)`.
#[pyfunction]
#[pyo3(signature = (target, steer, scenario=None))]
fn steered_gain(target: (f64, f64), steer: (f64, f64), scenario: Option<PyScenario>) -> f64 {
    let config = scenario.map_or_else(ScenarioConfig::reference_scenario, |s| s.inner);
    antenna::steered_gain(
        &Direction::new(target.0, target.1),
        &Direction::new(steer.0, steer.1),
        &config.array,
        config.wavenumber(),
    )
}

/// `(value, F(value))` pairs, one per distinct sample.
#[pyfunction]
fn empirical_cdf(samples: Vec<f64>) -> PyResult<Vec<(f64, f64)>> {
    metrics::empirical_cdf(&samples).map_err(to_py)
}

/// Outage requirement for a scenario at `(x, y)`.
#[pyfunction]
fn eps_max_at(scenario: PyScenario, x: f64, y: f64) -> f64 {
    scenario.eps_max_at(x, y)
}

/// Randomized closed-form vs Monte-Carlo comparison.
#[pyfunction]
#[pyo3(signature = (cases=100, samples=1_000_000, seed=0))]
fn validate_outage<'py>(py: Python<'py>, cases: usize, samples: u64, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let report = py
        .detach(|| validate::validate_outage(cases, samples, seed))
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("max_deviation", report.max_deviation())?;
    d.set_item("worst_margin", report.worst_margin())?;
    d.set_item("passed", report.cases.iter().filter(|c| c.passes()).count())?;
    d.set_item("all_pass", report.all_pass())?;
    Ok(d)
}

#[pymodule]
fn pycellfree(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenario>()?;
    m.add_class::<PyEnvironment>()?;
    m.add_function(wrap_pyfunction!(hypoexp_sf, m)?)?;
    m.add_function(wrap_pyfunction!(outage_probability, m)?)?;
    m.add_function(wrap_pyfunction!(mc_outage, m)?)?;
    m.add_function(wrap_pyfunction!(steered_gain, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(eps_max_at, m)?)?;
    m.add_function(wrap_pyfunction!(validate_outage, m)?)?;
    m.add("PROTOCOL_VERSION", cellfree::protocol::PROTOCOL_VERSION)?;
    Ok(())
}
