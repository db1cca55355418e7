//! Python bindings for `qsigker_core`.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use qsigker_core::ensemble::{classical_mc_estimate, Development, McParams};
use qsigker_core::kernels::{self, KernelMethod};
use qsigker_core::law::{self, Coupling, Potential, SolverOptions};
use qsigker_core::pauli::{self, PauliString};
use qsigker_core::qsim::{self, CircuitParams};
use qsigker_core::rng::DEFAULT_SEED;
use qsigker_core::{Error, PiecewiseLinearPath, Word};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::NotConverged { .. } | Error::Diverged { .. } | Error::ResourceCap { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn word_key(w: &Word) -> String {
    w.letters().iter().map(|l| l.to_string()).collect::<Vec<_>>().join(",")
}

/// A piecewise-linear path starting at the origin.
#[pyclass(name = "Path", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPath(PiecewiseLinearPath);

#[pymethods]
impl PyPath {
    /// Path through `points` sampled at `times` (default `0, 1, 2, ...`).
    #[new]
    #[pyo3(signature = (points, times = None))]
    fn new(points: Vec<Vec<f64>>, times: Option<Vec<f64>>) -> PyResult<Self> {
        let times = times.unwrap_or_else(|| (0..points.len()).map(|i| i as f64).collect());
        PiecewiseLinearPath::from_samples(&times, &points).map(PyPath).map_err(to_py)
    }

    #[staticmethod]
    fn from_increments(increments: Vec<Vec<f64>>) -> PyResult<Self> {
        let d = increments.first().map_or(0, |v| v.len());
        PiecewiseLinearPath::from_increments(d, increments).map(PyPath).map_err(to_py)
    }

    #[staticmethod]
    fn line(direction: Vec<f64>) -> Self {
        PyPath(PiecewiseLinearPath::line(direction))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn increments(&self) -> Vec<Vec<f64>> {
        self.0.increments().to_vec()
    }

    fn points(&self) -> Vec<Vec<f64>> {
        self.0.points()
    }

    fn one_variation(&self) -> f64 {
        self.0.one_variation()
    }

    fn concatenate(&self, other: &PyPath) -> PyResult<Self> {
        self.0.concatenate(&other.0).map(PyPath).map_err(to_py)
    }

    fn reverse(&self) -> Self {
        PyPath(self.0.reverse())
    }

    /// Signature coefficients up to `depth`, keyed by comma-separated letters (`""` is the unit).
    fn signature(&self, depth: usize) -> BTreeMap<String, f64> {
        qsigker_core::truncated_signature(&self.0, depth)
            .iter()
            .map(|(w, x)| (word_key(&w), x))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("Path(dim={}, segments={})", self.0.dim(), self.0.len())
    }
}

/// A Pauli string with phase, written like `"-iXIZY"`.
#[pyclass(name = "PauliString", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
struct PyPauliString(PauliString);

#[pymethods]
impl PyPauliString {
    #[new]
    fn new(literal: &str) -> PyResult<Self> {
        literal.parse().map(PyPauliString).map_err(to_py)
    }

    fn __mul__(&self, other: &PyPauliString) -> PyResult<Self> {
        self.0.mul(&other.0).map(PyPauliString).map_err(to_py)
    }

    /// Normalised trace as `(re, im)`.
    fn trace(&self) -> (f64, f64) {
        let t = pauli::string_trace(&self.0);
        (t.re, t.im)
    }

    fn is_hermitian(&self) -> bool {
        self.0.is_hermitian()
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("PauliString('{}')", self.0)
    }
}

fn paths_of(paths: &[PyRef<'_, PyPath>]) -> Vec<PiecewiseLinearPath> {
    paths.iter().map(|p| p.0.clone()).collect()
}

#[allow(clippy::too_many_arguments)]
fn method_from(
    method: &str,
    depth: Option<usize>,
    h: Option<f64>,
    matrix_n: Option<usize>,
    samples: Option<usize>,
    k: Option<usize>,
    n_qubits: Option<usize>,
    pauli_m: Option<usize>,
    shots: Option<u64>,
    seed: Option<u64>,
) -> PyResult<KernelMethod> {
    let seed = seed.unwrap_or(DEFAULT_SEED);
    Ok(match method {
        "signature-pde" => KernelMethod::SignaturePde { h: h.unwrap_or(1.0 / 256.0) },
        "signature-series" => KernelMethod::SignatureSeries { depth: depth.unwrap_or(12) },
        "gue-series" => KernelMethod::GueSeries { depth: depth.unwrap_or(16) },
        "gue-integral-eq" => KernelMethod::GueIntegralEq { h: h.unwrap_or(1.0 / 256.0) },
        "gue-classical-mc" => KernelMethod::GueClassicalMc {
            params: McParams { n: matrix_n.unwrap_or(256), m: samples.unwrap_or(400), k: k.unwrap_or(64), seed },
            // an explicit K asks for the truncated product
            development: if k.is_some() { Development::Truncated } else { Development::Exact },
        },
        "gue-quantum" => KernelMethod::GueQuantum {
            params: CircuitParams { m: pauli_m.unwrap_or(8), n: n_qubits.unwrap_or(8), k: k.unwrap_or(32), seed },
            shots: shots.unwrap_or(4000),
        },
        other => return Err(PyValueError::new_err(format!("unknown kernel method {other:?}"))),
    })
}

/// Kernel between two paths. Returns `(value, stderr)`; `stderr` is `None` for exact methods.
#[pyfunction]
#[pyo3(signature = (s, t, method = "gue-series", depth = None, h = None, matrix_n = None, samples = None,
                    k = None, n_qubits = None, pauli_m = None, shots = None, seed = None))]
#[allow(clippy::too_many_arguments)]
fn kernel(
    py: Python<'_>,
    s: &PyPath,
    t: &PyPath,
    method: &str,
    depth: Option<usize>,
    h: Option<f64>,
    matrix_n: Option<usize>,
    samples: Option<usize>,
    k: Option<usize>,
    n_qubits: Option<usize>,
    pauli_m: Option<usize>,
    shots: Option<u64>,
    seed: Option<u64>,
) -> PyResult<(f64, Option<f64>)> {
    let m = method_from(method, depth, h, matrix_n, samples, k, n_qubits, pauli_m, shots, seed)?;
    let v = py.detach(|| kernels::kernel(&s.0, &t.0, &m)).map_err(to_py)?;
    Ok((v.value, v.stderr))
}

/// Gram matrix over a list of paths.
#[pyfunction]
#[pyo3(signature = (paths, method = "gue-series", depth = None, h = None, shared_samples = false, seed = None))]
fn gram_matrix(
    py: Python<'_>,
    paths: Vec<PyRef<'_, PyPath>>,
    method: &str,
    depth: Option<usize>,
    h: Option<f64>,
    shared_samples: bool,
    seed: Option<u64>,
) -> PyResult<Vec<Vec<f64>>> {
    let m = method_from(method, depth, h, None, None, None, None, None, None, seed)?;
    let ps = paths_of(&paths);
    let labels: Vec<String> = (0..ps.len()).map(|i| i.to_string()).collect();
    let cfg = kernels::KernelConfig { method: m, shared_samples };
    py.detach(|| kernels::gram_matrix(&labels, &ps, &cfg)).map(|g| g.matrix).map_err(to_py)
}

/// Limiting law of `V = ½ Σ X_i² + Σ g X_w`; `couplings` is a list of `(word, g)`.
/// Returns moments keyed by comma-separated letters.
#[pyfunction]
#[pyo3(signature = (dim, couplings = Vec::new(), max_degree = 8, tol = 1e-12, max_iter = 10_000, damping = 0.5))]
fn sd_law(
    dim: usize,
    couplings: Vec<(Vec<u8>, f64)>,
    max_degree: usize,
    tol: f64,
    max_iter: usize,
    damping: f64,
) -> PyResult<BTreeMap<String, f64>> {
    let couplings = couplings
        .into_iter()
        .map(|(w, g)| Ok(Coupling { word: Word::new(w).map_err(to_py)?, g }))
        .collect::<PyResult<Vec<_>>>()?;
    let v = Potential { dim, couplings };
    let law = law::solve_schwinger_dyson(&v, max_degree, SolverOptions { tol, max_iter, damping }).map_err(to_py)?;
    Ok(law.iter().map(|(w, a)| (word_key(&w), a)).collect())
}

/// Classical Monte Carlo estimate of `E tr U` along a path: `(re, im, stderr)`.
#[pyfunction]
#[pyo3(signature = (path, matrix_n = 256, samples = 400, k = 64, seed = DEFAULT_SEED))]
fn classical_mc(
    py: Python<'_>,
    path: &PyPath,
    matrix_n: usize,
    samples: usize,
    k: usize,
    seed: u64,
) -> PyResult<(f64, f64, f64)> {
    let params = McParams { n: matrix_n, m: samples, k, seed };
    let r = py.detach(|| classical_mc_estimate(&path.0, params)).map_err(to_py)?;
    Ok((r.value.re, r.value.im, r.stderr))
}

/// Simulated DQC1 estimate of `Re E tr U`: `(value, stderr)`.
#[pyfunction]
#[pyo3(signature = (path, n_qubits = 8, pauli_m = 8, k = 32, shots = 4000, seed = DEFAULT_SEED))]
fn qsigker_run(
    py: Python<'_>,
    path: &PyPath,
    n_qubits: usize,
    pauli_m: usize,
    k: usize,
    shots: u64,
    seed: u64,
) -> PyResult<(f64, f64)> {
    let params = CircuitParams { m: pauli_m, n: n_qubits, k, seed };
    let out = py.detach(|| qsim::qsigker_run(&path.0, params, shots)).map_err(to_py)?;
    Ok((out.value, out.stderr()))
}

/// `½(1 − Re tr U)` for a circuit given as `(string, angle)` gates in application order.
#[pyfunction]
fn dqc1_probability(gates: Vec<(PyRef<'_, PyPauliString>, f64)>) -> PyResult<f64> {
    let n = gates.first().map(|(s, _)| s.0.n()).ok_or_else(|| PyValueError::new_err("empty circuit"))?;
    let mut c = qsim::Circuit::new(n);
    for (s, theta) in &gates {
        c.push(s.0.clone(), *theta).map_err(to_py)?;
    }
    qsim::dqc1_probability(&c).map_err(to_py)
}

/// `(W(m, p), N(m, p))` as exact integers.
#[pyfunction]
fn word_counts(m: u32, p: u32) -> PyResult<(num_bigint::BigUint, num_bigint::BigUint)> {
    Ok((pauli::count_even_words(m, p).map_err(to_py)?, pauli::count_pair_words(m, p).map_err(to_py)?))
}

#[pymodule]
fn qsigker(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPath>()?;
    m.add_class::<PyPauliString>()?;
    m.add_function(wrap_pyfunction!(kernel, m)?)?;
    m.add_function(wrap_pyfunction!(gram_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(sd_law, m)?)?;
    m.add_function(wrap_pyfunction!(classical_mc, m)?)?;
    m.add_function(wrap_pyfunction!(qsigker_run, m)?)?;
    m.add_function(wrap_pyfunction!(dqc1_probability, m)?)?;
    m.add_function(wrap_pyfunction!(word_counts, m)?)?;
    Ok(())
}
