//! Python bindings: statevectors, DAQC circuits, gradients, datasets, training
//! and the circuit diagnostics.
//!
//! Structured results (gate counts, metrics, reports) cross the boundary as
//! JSON and come back as plain dicts.

use daqc::circuit::{build_circuit, encode_sample, CircuitSpec, DaqcConfig, EncodedSample, Observable};
use daqc::dataset::{self, SubsetRule};
use daqc::diagnostics::{self, BpSweepConfig, ExpressibilityConfig};
use daqc::statevector::{self, Axis};
use daqc::training::{self, Checkpoint, TrainConfig};
use daqc::DaqcError;
use num_complex::Complex64;
use pyo3::exceptions::{PyIndexError, PyIOError, PyMemoryError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::path::PathBuf;

fn err(e: DaqcError) -> PyErr {
    let msg = e.to_string();
    match e {
        DaqcError::Io { .. } => PyIOError::new_err(msg),
        DaqcError::Index(_) => PyIndexError::new_err(msg),
        DaqcError::Capacity(_) => PyMemoryError::new_err(msg),
        DaqcError::Numeric(_) | DaqcError::AucUndefined(_) => PyRuntimeError::new_err(msg),
        _ => PyValueError::new_err(msg),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Deserialize an optional dict (via JSON) into a config, starting from defaults.
fn from_py<T: DeserializeOwned + Default>(py: Python<'_>, value: Option<&Bound<'_, PyAny>>) -> PyResult<T> {
    match value {
        None => Ok(T::default()),
        Some(v) => {
            let text: String = py.import("json")?.call_method1("dumps", (v,))?.extract()?;
            serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
        }
    }
}

fn axis(name: &str) -> PyResult<Axis> {
    match name.to_ascii_lowercase().as_str() {
        "x" => Ok(Axis::X),
        "y" => Ok(Axis::Y),
        "z" => Ok(Axis::Z),
        _ => Err(PyValueError::new_err(format!("unknown axis `{name}`"))),
    }
}

#[pyclass(name = "StateVector", module = "pydaqc", skip_from_py_object)]
#[derive(Clone)]
struct PyStateVector {
    inner: statevector::StateVector,
}

#[pymethods]
impl PyStateVector {
    /// `|0…0⟩` on `n_qubits` wires. Qubit 0 is the least significant index bit.
    #[new]
    fn new(n_qubits: usize) -> PyResult<Self> {
        Ok(Self { inner: statevector::StateVector::new_zero_state(n_qubits).map_err(err)? })
    }

    #[staticmethod]
    fn from_amplitudes(amplitudes: Vec<Complex64>) -> PyResult<Self> {
        Ok(Self { inner: statevector::StateVector::from_amplitudes(amplitudes).map_err(err)? })
    }

    #[getter]
    fn n_qubits(&self) -> usize {
        self.inner.n_qubits()
    }

    fn amplitudes(&self) -> Vec<Complex64> {
        self.inner.amplitudes().to_vec()
    }

    fn norm_sqr(&self) -> f64 {
        self.inner.norm_sqr()
    }

    /// `exp(−iθP/2)` with `P` one of "x", "y", "z".
    fn apply_rotation(&mut self, axis_name: &str, target: usize, angle: f64) -> PyResult<()> {
        self.inner.apply_rotation(axis(axis_name)?, target, angle).map_err(err)
    }

    fn apply_ecr(&mut self, first: usize, second: usize) -> PyResult<()> {
        self.inner.apply_ecr(first, second).map_err(err)
    }

    fn expect_z(&self, target: usize) -> PyResult<f64> {
        self.inner.expect_z(target).map_err(err)
    }

    fn expect_z_all(&self) -> Vec<f64> {
        self.inner.expect_z_all()
    }

    fn expect_z_product(&self, targets: Vec<usize>) -> PyResult<f64> {
        self.inner.expect_z_product(&targets).map_err(err)
    }

    fn fidelity(&self, other: &PyStateVector) -> PyResult<f64> {
        self.inner.fidelity(&other.inner).map_err(err)
    }

    /// Meyer–Wallach global entanglement.
    fn meyer_wallach_q(&self) -> f64 {
        diagnostics::meyer_wallach_q(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("StateVector(n_qubits={})", self.inner.n_qubits())
    }
}

#[pyclass(name = "Circuit", module = "pydaqc", skip_from_py_object)]
#[derive(Clone)]
struct PyCircuit {
    spec: CircuitSpec,
}

#[pymethods]
impl PyCircuit {
    /// Build a circuit from a config dict; missing keys take the 16-qubit defaults.
    #[new]
    #[pyo3(signature = (config=None))]
    fn new(py: Python<'_>, config: Option<&Bound<'_, PyAny>>) -> PyResult<Self> {
        let base = serde_json::to_value(DaqcConfig::default()).expect("config serializes");
        let mut merged = base;
        if let Some(c) = config {
            let text: String = py.import("json")?.call_method1("dumps", (c,))?.extract()?;
            let patch: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))?;
            let Some(patch) = patch.as_object() else {
                return Err(PyValueError::new_err("circuit config must be a dict"));
            };
            for (k, v) in patch {
                merged[k] = v.clone();
            }
        }
        let config: DaqcConfig =
            serde_json::from_value(merged).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self { spec: build_circuit(&config).map_err(err)? })
    }

    /// Same-width template used by the gradient-variance sweeps.
    #[staticmethod]
    #[pyo3(signature = (n_qubits, axis_seed=0))]
    fn scaled_template(n_qubits: usize, axis_seed: u64) -> PyResult<Self> {
        let config = DaqcConfig::scaled_template(n_qubits, axis_seed);
        Ok(Self { spec: build_circuit(&config).map_err(err)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { spec: CircuitSpec::from_json(text).map_err(err)? })
    }

    fn to_json(&self) -> String {
        self.spec.to_json()
    }

    fn config<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, self.spec.config())
    }

    #[getter]
    fn n_qubits(&self) -> usize {
        self.spec.n_qubits()
    }

    #[getter]
    fn n_params(&self) -> usize {
        self.spec.n_params()
    }

    #[getter]
    fn n_features(&self) -> usize {
        self.spec.n_features()
    }

    fn gate_counts<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.spec.gate_counts())
    }

    /// Pool, zigzag-order and normalize a row-major `rows × cols` image into
    /// rotation angles.
    fn encode(&self, pixels: Vec<f64>, rows: usize, cols: usize) -> PyResult<Vec<f64>> {
        Ok(encode_sample(&pixels, rows, cols, 0, self.spec.config()).map_err(err)?.angles)
    }

    fn simulate(&self, angles: Vec<f64>, theta: Vec<f64>) -> PyResult<PyStateVector> {
        let sample = EncodedSample { angles, label: 0 };
        Ok(PyStateVector { inner: self.spec.simulate(&sample, &theta).map_err(err)? })
    }

    /// `⟨Z_q⟩` for every wire.
    fn expectations(&self, angles: Vec<f64>, theta: Vec<f64>) -> PyResult<Vec<f64>> {
        let sample = EncodedSample { angles, label: 0 };
        daqc::circuit::run_circuit(&self.spec, &sample, &theta).map_err(err)
    }

    /// Gradient of `⟨∏_{q ∈ targets} Z_q⟩` with respect to the trainable angles.
    /// `method` is "adjoint" or "parameter_shift".
    #[pyo3(signature = (angles, theta, targets, method="adjoint"))]
    fn gradient(&self, angles: Vec<f64>, theta: Vec<f64>, targets: Vec<usize>, method: &str) -> PyResult<Vec<f64>> {
        let program = self.spec.program();
        match method {
            "adjoint" => {
                let (_, g) = program
                    .adjoint_gradient(&angles, &theta, |state| state.z_product_action(&targets))
                    .map_err(err)?;
                Ok(g)
            }
            "parameter_shift" => {
                let mut g = program
                    .parameter_shift(&angles, &theta, &[Observable::ZProduct(targets)])
                    .map_err(err)?;
                Ok(g.pop().expect("one observable"))
            }
            _ => Err(PyValueError::new_err(format!("unknown gradient method `{method}`"))),
        }
    }

    fn __repr__(&self) -> String {
        let c = self.spec.gate_counts();
        format!(
            "Circuit(n_qubits={}, cycles={}, params={}, ecr={})",
            self.spec.n_qubits(),
            c.cycles,
            self.spec.n_params(),
            c.ecr
        )
    }
}

#[pyclass(name = "Dataset", module = "pydaqc", skip_from_py_object)]
#[derive(Clone)]
struct PyDataset {
    inner: dataset::Dataset,
}

#[pymethods]
impl PyDataset {
    #[new]
    fn new(pixels: Vec<u8>, rows: usize, cols: usize, labels: Vec<usize>, n_classes: usize) -> PyResult<Self> {
        Ok(Self { inner: dataset::Dataset::new("arrays", rows, cols, pixels, labels, n_classes).map_err(err)? })
    }

    /// Read an IDX image/label pair.
    #[staticmethod]
    fn load_idx(images: PathBuf, labels: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: dataset::load_idx(&images, &labels).map_err(err)? })
    }

    fn write_idx(&self, images: PathBuf, labels: PathBuf) -> PyResult<()> {
        dataset::write_idx(&self.inner, &images, &labels).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn rows(&self) -> usize {
        self.inner.rows()
    }

    #[getter]
    fn cols(&self) -> usize {
        self.inner.cols()
    }

    #[getter]
    fn n_classes(&self) -> usize {
        self.inner.n_classes()
    }

    fn labels(&self) -> Vec<usize> {
        self.inner.labels().to_vec()
    }

    fn pixels<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, self.inner.pixels())
    }

    fn class_counts(&self) -> Vec<usize> {
        self.inner.class_counts()
    }

    /// Keep a named class subset ("mnist-2", "fashion-4", ...) with labels
    /// renumbered from 0.
    fn subset(&self, name: &str) -> PyResult<Self> {
        let rule = SubsetRule::named(name).map_err(err)?;
        Ok(Self { inner: dataset::subset(&self.inner, &rule) })
    }

    fn subsample(&self, count: usize, seed: u64) -> Self {
        Self { inner: self.inner.subsample(count, seed) }
    }

    /// Stratified `(train, validation)` split.
    fn split(&self, val_fraction: f64, seed: u64) -> PyResult<(Self, Self)> {
        let (a, b) = dataset::stratified_split(&self.inner, val_fraction, seed).map_err(err)?;
        Ok((Self { inner: a }, Self { inner: b }))
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset({}, n={}, {}x{}, classes={})",
            self.inner.name(),
            self.inner.len(),
            self.inner.rows(),
            self.inner.cols(),
            self.inner.n_classes()
        )
    }
}

/// A trained classifier: circuit, parameters and training trace.
#[pyclass(name = "Model", module = "pydaqc", skip_from_py_object)]
struct PyModel {
    checkpoint: Checkpoint,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { checkpoint: Checkpoint::from_json(text).map_err(err)? })
    }

    fn to_json(&self) -> String {
        self.checkpoint.to_json()
    }

    #[getter]
    fn circuit(&self) -> PyCircuit {
        PyCircuit { spec: self.checkpoint.circuit.clone() }
    }

    #[getter]
    fn best_epoch(&self) -> usize {
        self.checkpoint.best_epoch
    }

    fn trace<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.checkpoint.trace)
    }

    fn trace_csv(&self) -> String {
        training::trace_csv(&self.checkpoint.trace)
    }

    /// AUC, accuracy, specificity, sensitivity, F1 and the confusion matrix.
    fn evaluate<'py>(&self, py: Python<'py>, data: &PyDataset) -> PyResult<Bound<'py, PyAny>> {
        let c = &self.checkpoint;
        let enc = data.inner.encode(c.circuit.config()).map_err(err)?;
        let report = training::evaluate(&c.circuit, &c.params, &enc).map_err(err)?;
        to_py(py, &report)
    }

    /// Class probabilities, one row per sample.
    fn predict(&self, data: &PyDataset) -> PyResult<Vec<Vec<f64>>> {
        let c = &self.checkpoint;
        let enc = data.inner.encode(c.circuit.config()).map_err(err)?;
        let (probs, _) = training::predict(&c.circuit, &c.params, &enc).map_err(err)?;
        Ok(probs)
    }
}

/// Train a classifier; `config` overrides the training defaults (learning
/// rate, epochs, batch size, patience, init seed).
#[pyfunction]
#[pyo3(signature = (circuit, train, validation, config=None))]
fn fit(
    py: Python<'_>,
    circuit: &PyCircuit,
    train: &PyDataset,
    validation: &PyDataset,
    config: Option<&Bound<'_, PyAny>>,
) -> PyResult<PyModel> {
    let config: TrainConfig = from_py(py, config)?;
    let spec = &circuit.spec;
    let n_classes = train.inner.n_classes();
    let (t, v) = (
        train.inner.encode(spec.config()).map_err(err)?,
        validation.inner.encode(spec.config()).map_err(err)?,
    );
    let outcome = py
        .detach(|| training::train(spec, &t, &v, n_classes, &config))
        .map_err(err)?;
    Ok(PyModel { checkpoint: Checkpoint::new(spec, &config, &outcome) })
}

/// Mann–Whitney AUC.
#[pyfunction]
fn auc(scores: Vec<f64>, positive: Vec<bool>) -> PyResult<f64> {
    training::auc(&scores, &positive).map_err(err)
}

/// Haar-average Meyer–Wallach Q on `n_qubits` wires.
#[pyfunction]
fn haar_mean_q(n_qubits: usize) -> PyResult<f64> {
    diagnostics::haar_mean_q(n_qubits).map_err(err)
}

/// Fidelity histogram, KL divergence to the Haar distribution and mean Q.
#[pyfunction]
#[pyo3(signature = (circuit, config=None))]
fn expressibility<'py>(
    py: Python<'py>,
    circuit: &PyCircuit,
    config: Option<&Bound<'py, PyAny>>,
) -> PyResult<Bound<'py, PyAny>> {
    let config: ExpressibilityConfig = from_py(py, config)?;
    let report = py
        .detach(|| diagnostics::expressibility(circuit.spec.config(), &config))
        .map_err(err)?;
    to_py(py, &report)
}

/// Gradient variance per qubit count and cost.
#[pyfunction]
#[pyo3(signature = (config=None))]
fn bp_sweep<'py>(py: Python<'py>, config: Option<&Bound<'py, PyAny>>) -> PyResult<Bound<'py, PyAny>> {
    let config: BpSweepConfig = from_py(py, config)?;
    let report = py.detach(|| diagnostics::bp_sweep(&config)).map_err(err)?;
    to_py(py, &report)
}

#[pymodule]
fn pydaqc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyStateVector>()?;
    m.add_class::<PyCircuit>()?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(auc, m)?)?;
    m.add_function(wrap_pyfunction!(haar_mean_q, m)?)?;
    m.add_function(wrap_pyfunction!(expressibility, m)?)?;
    m.add_function(wrap_pyfunction!(bp_sweep, m)?)?;
    m.add("MAX_QUBITS", statevector::MAX_QUBITS)?;
    Ok(())
}
