//! Python bindings. Frequencies are angular (rad/s) unless a name ends in `_hz`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use phonon_hop::kerr_model::{self, ModelPoint, DEFAULT_TAIL_TOL};
use phonon_hop::quantum_oracle;
use phonon_hop::signal_analysis::{self, FitOptions, TimeSeries};
use phonon_hop::trap_physics::{self, DistanceConvention};

fn py_err(e: phonon_hop::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn convention(name: &str) -> PyResult<DistanceConvention> {
    DistanceConvention::from_name(name)
        .ok_or_else(|| PyValueError::new_err(format!("unknown distance convention '{name}'")))
}

/// Two-ion trap setting.
#[pyclass(name = "TrapConfig", frozen)]
struct PyTrapConfig {
    inner: trap_physics::TrapConfig,
}

#[pymethods]
impl PyTrapConfig {
    /// Calcium-40 trap; the axial temperature defaults to the Doppler limit.
    #[new]
    #[pyo3(signature = (omega_y_hz, omega_z_hz, axial_temperature_k=None, mass_kg=None))]
    fn new(omega_y_hz: f64, omega_z_hz: f64, axial_temperature_k: Option<f64>, mass_kg: Option<f64>) -> PyResult<Self> {
        let base = trap_physics::TrapConfig::calcium_hz(omega_y_hz, omega_z_hz).map_err(py_err)?;
        let inner = trap_physics::TrapConfig::new(
            mass_kg.unwrap_or(base.mass),
            base.omega_y,
            base.omega_z,
            axial_temperature_k.unwrap_or(base.axial_temperature),
        )
        .map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn mass(&self) -> f64 {
        self.inner.mass
    }

    #[getter]
    fn omega_y(&self) -> f64 {
        self.inner.omega_y
    }

    #[getter]
    fn omega_z(&self) -> f64 {
        self.inner.omega_z
    }

    #[getter]
    fn axial_temperature(&self) -> f64 {
        self.inner.axial_temperature
    }

    #[pyo3(signature = (convention="exact"))]
    fn distance(&self, convention: &str) -> PyResult<f64> {
        trap_physics::axial_freq_to_distance(self.inner.omega_z, self.inner.mass, self::convention(convention)?)
            .map_err(py_err)
    }

    fn mode_spectrum<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let s = trap_physics::mode_spectrum(&self.inner).map_err(py_err)?;
        let d = PyDict::new(py);
        d.set_item("omega_com_z", s.omega_com_z)?;
        d.set_item("omega_stretch", s.omega_stretch)?;
        d.set_item("omega_com_y", s.omega_com_y)?;
        d.set_item("omega_rock", s.omega_rock)?;
        d.set_item("kappa", s.kappa)?;
        Ok(d)
    }

    fn hopping_rate(&self) -> PyResult<f64> {
        trap_physics::hopping_rate(&self.inner).map_err(py_err)
    }

    fn kerr_chi(&self) -> PyResult<f64> {
        Ok(ModelPoint::from_config(&self.inner).map_err(py_err)?.chi)
    }

    fn mean_stretch_occupation(&self) -> PyResult<f64> {
        Ok(ModelPoint::from_config(&self.inner).map_err(py_err)?.mean_n)
    }

    fn coherence_metrics<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let m = ModelPoint::from_config(&self.inner).map_err(py_err)?;
        coherence_metrics(py, m.kappa(), m.chi, m.mean_n)
    }

    fn __repr__(&self) -> String {
        format!(
            "TrapConfig(omega_y_hz={}, omega_z_hz={}, axial_temperature_k={})",
            trap_physics::hertz(self.inner.omega_y),
            trap_physics::hertz(self.inner.omega_z),
            self.inner.axial_temperature
        )
    }
}

#[pyfunction]
#[pyo3(signature = (omega_z, mass, convention="exact"))]
fn axial_freq_to_distance(omega_z: f64, mass: f64, convention: &str) -> PyResult<f64> {
    trap_physics::axial_freq_to_distance(omega_z, mass, self::convention(convention)?).map_err(py_err)
}

#[pyfunction]
fn doppler_temperature(gamma: f64) -> PyResult<f64> {
    trap_physics::doppler_temperature(gamma).map_err(py_err)
}

/// Truncated thermal occupation probabilities P_0..P_nmax.
#[pyfunction]
#[pyo3(signature = (mean_n, tail_tol=DEFAULT_TAIL_TOL))]
fn thermal_distribution(mean_n: f64, tail_tol: f64) -> PyResult<Vec<f64>> {
    Ok(kerr_model::thermal_distribution(mean_n, tail_tol).map_err(py_err)?.probabilities)
}

/// Thermally averaged probability that the phonon has left ion 1.
#[pyfunction]
#[pyo3(signature = (kappa, chi, mean_n, times, tail_tol=DEFAULT_TAIL_TOL))]
fn hopping_signal(kappa: f64, chi: f64, mean_n: f64, times: Vec<f64>, tail_tol: f64) -> PyResult<Vec<f64>> {
    let dist = kerr_model::thermal_distribution(mean_n, tail_tol).map_err(py_err)?;
    Ok(kerr_model::hopping_signal(kappa, chi, &dist, &times).map_err(py_err)?.values)
}

#[pyfunction]
fn closed_form_signal(kappa: f64, chi: f64, mean_n: f64, times: Vec<f64>) -> PyResult<Vec<f64>> {
    Ok(kerr_model::closed_form_signal(kappa, chi, mean_n, &times).map_err(py_err)?.values)
}

/// (contrast, phase) of the thermal envelope at time t.
#[pyfunction]
fn envelope(chi: f64, mean_n: f64, t: f64) -> PyResult<(f64, f64)> {
    let e = kerr_model::envelope_closed_form(0.0, chi, mean_n, t).map_err(py_err)?;
    Ok((e.contrast, e.phase))
}

/// Decay time and oscillation count; `None` when the contrast never reaches 1/e.
#[pyfunction]
fn coherence_metrics<'py>(py: Python<'py>, kappa: f64, chi: f64, mean_n: f64) -> PyResult<Bound<'py, PyDict>> {
    let m = kerr_model::coherence_metrics(kappa, chi, mean_n).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("decay_time", m.decay_time)?;
    d.set_item("hopping_frequency", m.hopping_frequency)?;
    d.set_item("num_oscillations", m.num_oscillations)?;
    Ok(d)
}

#[pyfunction]
fn evolve_single_phonon(kappa: f64, chi: f64, n_s: i64, t: f64) -> PyResult<f64> {
    quantum_oracle::evolve_single_phonon(kappa, chi, n_s, t).map_err(py_err)
}

#[pyfunction]
fn monte_carlo_signal(kappa: f64, chi: f64, mean_n: f64, times: Vec<f64>, samples: u64, seed: u64) -> PyResult<Vec<f64>> {
    Ok(quantum_oracle::monte_carlo_signal(kappa, chi, mean_n, &times, samples, seed).map_err(py_err)?.values)
}

/// Fit a·exp(−bt)·sin(ct + d) + f·t + baseline.
#[pyfunction]
#[pyo3(signature = (times, values, sigma=None, baseline=0.0, max_iter=500, tol=1e-10))]
fn fit_damped_sine<'py>(
    py: Python<'py>,
    times: Vec<f64>,
    values: Vec<f64>,
    sigma: Option<Vec<f64>>,
    baseline: f64,
    max_iter: usize,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let series = TimeSeries::new(times, values, sigma).map_err(py_err)?;
    let options = FitOptions { max_iter, tol, baseline };
    let (_, fit) = signal_analysis::fit_series(&series, &options).map_err(py_err)?;
    let d = PyDict::new(py);
    for (name, value) in ["a", "b", "c", "d", "f"].iter().zip(fit.params().to_array()) {
        d.set_item(*name, value)?;
    }
    d.set_item("standard_errors", fit.standard_errors().to_vec())?;
    d.set_item("covariance", fit.covariance.iter().map(|row| row.to_vec()).collect::<Vec<_>>())?;
    d.set_item("residual_rms", fit.residual_rms)?;
    d.set_item("converged", fit.converged)?;
    d.set_item("degenerate", fit.degenerate)?;
    d.set_item("iterations", fit.iterations)?;
    if fit.converged {
        let m = signal_analysis::metrics_from_fit(&fit).map_err(py_err)?;
        d.set_item("decay_time", m.decay_time)?;
        d.set_item("hopping_frequency_hz", m.hopping_frequency_hz)?;
        d.set_item("num_oscillations", m.num_oscillations)?;
    }
    Ok(d)
}

#[pymodule]
fn phonon_hop_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTrapConfig>()?;
    m.add_function(wrap_pyfunction!(axial_freq_to_distance, m)?)?;
    m.add_function(wrap_pyfunction!(doppler_temperature, m)?)?;
    m.add_function(wrap_pyfunction!(thermal_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(hopping_signal, m)?)?;
    m.add_function(wrap_pyfunction!(closed_form_signal, m)?)?;
    m.add_function(wrap_pyfunction!(envelope, m)?)?;
    m.add_function(wrap_pyfunction!(coherence_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(evolve_single_phonon, m)?)?;
    m.add_function(wrap_pyfunction!(monte_carlo_signal, m)?)?;
    m.add_function(wrap_pyfunction!(fit_damped_sine, m)?)?;
    Ok(())
}
