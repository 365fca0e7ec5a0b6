//! Python bindings: `import entcert`.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use entcert_core as core;
use entcert_core::linalg::{CMatrix, CVector};
use entcert_core::{
    AlsConfig, Bipartition, DualConfig, HermitianObservable, HilbertStructure, LowerBoundConfig, MeasureKind,
    NamedState, PauliTermSum, Scenario,
};

fn err(e: core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_measure(measure: Option<&str>, parties: usize) -> PyResult<MeasureKind> {
    match measure {
        Some(m) => m.parse().map_err(err),
        None => Ok(MeasureKind::default_for(parties)),
    }
}

fn scenario(preset: &str, d: usize, n: usize, ops: usize) -> PyResult<Scenario> {
    match preset {
        "bell" => Ok(Scenario::BellEmbedded { d, ops }),
        "cluster" => Ok(Scenario::ClusterLinear { n }),
        "w3" => Ok(Scenario::W3),
        other => Err(PyValueError::new_err(format!("unknown preset '{other}' (bell, cluster, w3)"))),
    }
}

fn bound_cfg(seed: u64) -> LowerBoundConfig {
    LowerBoundConfig { seed, ..LowerBoundConfig::default() }
}

/// Hermitian operator on a tensor-product space.
#[pyclass(name = "Observable", module = "entcert", skip_from_py_object)]
#[derive(Clone)]
pub struct PyObservable {
    inner: HermitianObservable,
}

#[pymethods]
impl PyObservable {
    /// Dense operator from a square nested list of complex entries.
    #[new]
    #[pyo3(signature = (local_dims, matrix, label = String::new()))]
    fn new(local_dims: Vec<usize>, matrix: Vec<Vec<Complex64>>, label: String) -> PyResult<Self> {
        let s = HilbertStructure::new(local_dims).map_err(err)?;
        let n = matrix.len();
        if matrix.iter().any(|r| r.len() != n) {
            return Err(PyValueError::new_err("matrix must be square"));
        }
        let m = CMatrix::from_fn(n, n, |i, j| matrix[i][j]);
        Ok(Self { inner: HermitianObservable::new(s, m, label).map_err(err)? })
    }

    /// Weighted sum of Pauli strings, e.g. `[(1.0, "XX"), (-1.0, "YY")]`.
    #[staticmethod]
    #[pyo3(signature = (terms, label = None))]
    fn pauli(terms: Vec<(f64, String)>, label: Option<String>) -> PyResult<Self> {
        let op = core::parse_pauli_sum(&PauliTermSum::new(terms)).map_err(err)?;
        Ok(Self { inner: match label { Some(l) => op.with_label(l), None => op } })
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.label().to_string()
    }

    #[getter]
    fn local_dims(&self) -> Vec<usize> {
        self.inner.structure().local_dims().to_vec()
    }

    /// `(λ_min, λ_max)`.
    fn spectral_range(&self) -> (f64, f64) {
        self.inner.spectral_range()
    }

    fn matrix(&self) -> Vec<Vec<Complex64>> {
        let m = self.inner.matrix();
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
    }

    fn expectation(&self, state: PyRef<'_, PyPureState>) -> PyResult<f64> {
        core::expectation(&self.inner, &state.inner).map_err(err)
    }

    fn scaled(&self, s: f64) -> Self {
        Self { inner: self.inner.scaled(s) }
    }

    fn __repr__(&self) -> String {
        format!("Observable(label={:?}, local_dims={:?})", self.inner.label(), self.local_dims())
    }
}

/// Normalized pure state.
#[pyclass(name = "PureState", module = "entcert", skip_from_py_object)]
#[derive(Clone)]
pub struct PyPureState {
    inner: core::PureState,
}

#[pymethods]
impl PyPureState {
    /// Normalizes `amplitudes`; raises on the zero vector.
    #[new]
    fn new(local_dims: Vec<usize>, amplitudes: Vec<Complex64>) -> PyResult<Self> {
        let s = HilbertStructure::new(local_dims).map_err(err)?;
        let v = CVector::from_vec(amplitudes);
        Ok(Self { inner: core::PureState::normalized(s, v).map_err(err)? })
    }

    /// `"bell"` (2 qubits), `"bell:<d>"` (embedded in d×d) or `"w3"`.
    #[staticmethod]
    fn named(name: &str) -> PyResult<Self> {
        let which = match name.split_once(':') {
            None if name == "bell" => NamedState::BellEmbedded(2),
            None if name == "w3" => NamedState::W3,
            Some(("bell", d)) => NamedState::BellEmbedded(
                d.parse().map_err(|_| PyValueError::new_err(format!("bad dimension in '{name}'")))?,
            ),
            _ => return Err(PyValueError::new_err(format!("unknown state '{name}'"))),
        };
        Ok(Self { inner: core::build_named_state(which).map_err(err)? })
    }

    /// Linear cluster state on `n` qubits.
    #[staticmethod]
    fn cluster(n: usize) -> PyResult<Self> {
        Ok(Self { inner: core::build_cluster_state(n).map_err(err)? })
    }

    #[getter]
    fn local_dims(&self) -> Vec<usize> {
        self.inner.structure().local_dims().to_vec()
    }

    fn amplitudes(&self) -> Vec<Complex64> {
        self.inner.amplitudes().iter().copied().collect()
    }

    fn __repr__(&self) -> String {
        format!("PureState(local_dims={:?})", self.local_dims())
    }
}

/// Outcome of `lower_bound`.
#[pyclass(name = "BoundResult", module = "entcert", get_all, skip_from_py_object)]
#[derive(Clone)]
pub struct PyBoundResult {
    bound: f64,
    slope: Vec<f64>,
    intercept: f64,
    raw: f64,
    upper_estimate: Option<f64>,
    iterations: usize,
    status: String,
}

#[pymethods]
impl PyBoundResult {
    fn __repr__(&self) -> String {
        format!("BoundResult(bound={:.6}, status={})", self.bound, self.status)
    }
}

impl From<core::BoundResult> for PyBoundResult {
    fn from(r: core::BoundResult) -> Self {
        Self {
            bound: r.bound,
            slope: r.slope,
            intercept: r.intercept,
            raw: r.raw,
            upper_estimate: r.upper_estimate,
            iterations: r.iterations,
            status: r.status.to_string(),
        }
    }
}

/// Outcome of `dual_value`.
#[pyclass(name = "DualEvaluation", module = "entcert", get_all, skip_from_py_object)]
#[derive(Clone)]
pub struct PyDualEvaluation {
    value: f64,
    entanglement: f64,
    converged: bool,
    maximizer: PyPureState,
    measure: String,
    samples_checked: Option<usize>,
}

fn inner_ops(observables: &[PyRef<'_, PyObservable>]) -> Vec<HermitianObservable> {
    observables.iter().map(|o| o.inner.clone()).collect()
}

/// Certified lower bound on the entanglement of any state with the given
/// expectation values.
#[pyfunction]
#[pyo3(signature = (observables, values, measure = None, seed = 0))]
fn lower_bound(
    py: Python<'_>,
    observables: Vec<PyRef<'_, PyObservable>>,
    values: Vec<f64>,
    measure: Option<&str>,
    seed: u64,
) -> PyResult<PyBoundResult> {
    let ops = inner_ops(&observables);
    let parties = ops.first().map_or(2, |o| o.structure().parties());
    let measure = parse_measure(measure, parties)?;
    py.detach(|| core::lower_bound(&ops, &values, measure, &bound_cfg(seed)))
        .map(Into::into)
        .map_err(err)
}

/// `Ê(A) = max_ψ ⟨ψ|A|ψ⟩ - E(ψ)`, optionally audited by `audit_samples`
/// random states.
#[pyfunction]
#[pyo3(signature = (observable, measure = None, seed = 0, audit_samples = 0))]
fn dual_value(
    py: Python<'_>,
    observable: PyRef<'_, PyObservable>,
    measure: Option<&str>,
    seed: u64,
    audit_samples: usize,
) -> PyResult<PyDualEvaluation> {
    let op = observable.inner.clone();
    let measure = parse_measure(measure, op.structure().parties())?;
    let cfg = DualConfig { seed, ..DualConfig::new(measure) };
    let eval = py.detach(|| core::dual_value(&op, &[], &cfg)).map_err(err)?;
    let samples_checked = if audit_samples > 0 {
        Some(py.detach(|| core::verify_dual(&op, measure, &eval, audit_samples, seed)).map_err(err)?.samples)
    } else {
        None
    };
    Ok(PyDualEvaluation {
        value: eval.value,
        entanglement: eval.entanglement,
        converged: eval.converged,
        maximizer: PyPureState { inner: eval.maximizer },
        measure: measure.to_string(),
        samples_checked,
    })
}

/// Geometric measure `1 - max |⟨φ_prod|ψ⟩|²`.
#[pyfunction]
#[pyo3(signature = (state, restarts = 20, seed = 0))]
fn geometric_measure(state: PyRef<'_, PyPureState>, restarts: usize, seed: u64) -> PyResult<f64> {
    let cfg = AlsConfig { restarts, seed, ..AlsConfig::default() };
    Ok(core::geometric_measure_pure(&state.inner, &cfg).map_err(err)?.value)
}

/// Genuine geometric measure `1 - max |⟨φ_bisep|ψ⟩|²`.
#[pyfunction]
fn ggm(state: PyRef<'_, PyPureState>) -> PyResult<f64> {
    core::ggm_pure(&state.inner).map_err(err)
}

/// Schmidt coefficients across the cut `side_a | rest`.
#[pyfunction]
fn schmidt_coefficients(state: PyRef<'_, PyPureState>, side_a: Vec<usize>) -> PyResult<Vec<f64>> {
    let cut = Bipartition::new(state.inner.structure().parties(), &side_a).map_err(err)?;
    core::schmidt_coefficients(&state.inner, &cut).map_err(err)
}

/// Observables and noisy-state expectations of a preset at noise weight `p`.
#[pyfunction]
#[pyo3(signature = (preset, p, d = 3, n = 4, ops = 3))]
fn scenario_record(preset: &str, p: f64, d: usize, n: usize, ops: usize) -> PyResult<(Vec<PyObservable>, Vec<f64>)> {
    let s = scenario(preset, d, n, ops)?;
    let (obs, values) = core::scenario_record(&s, p).map_err(err)?;
    Ok((obs.into_iter().map(|inner| PyObservable { inner }).collect(), values))
}

/// Largest noise weight at which a preset's bound stays positive.
#[pyfunction]
#[pyo3(signature = (preset, tol = 0.01, d = 3, n = 4, ops = 3, seed = 0))]
fn noise_threshold(
    py: Python<'_>,
    preset: &str,
    tol: f64,
    d: usize,
    n: usize,
    ops: usize,
    seed: u64,
) -> PyResult<f64> {
    let s = scenario(preset, d, n, ops)?;
    py.detach(|| core::noise_threshold(&s, tol, &bound_cfg(seed))).map_err(err)
}

/// `([(p, bound, status), ...], threshold)` on an evenly spaced grid.
#[pyfunction]
#[pyo3(signature = (preset, p_min, p_max, step, d = 3, n = 4, ops = 3, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn sweep(
    py: Python<'_>,
    preset: &str,
    p_min: f64,
    p_max: f64,
    step: f64,
    d: usize,
    n: usize,
    ops: usize,
    seed: u64,
) -> PyResult<(Vec<(f64, f64, String)>, f64)> {
    let s = scenario(preset, d, n, ops)?;
    let res = py.detach(|| core::sweep(&s, p_min, p_max, step, &bound_cfg(seed))).map_err(err)?;
    let rows = res.rows.into_iter().map(|r| (r.p, r.bound, r.status.to_string())).collect();
    Ok((rows, res.threshold))
}

/// `(mean, std)` of the bound under Gaussian resampling of the values.
#[pyfunction]
#[pyo3(signature = (observables, values, sigmas, measure = None, trials = 200, seed = 0))]
fn propagate_uncertainty(
    py: Python<'_>,
    observables: Vec<PyRef<'_, PyObservable>>,
    values: Vec<f64>,
    sigmas: Vec<f64>,
    measure: Option<&str>,
    trials: usize,
    seed: u64,
) -> PyResult<(f64, f64)> {
    let ops = inner_ops(&observables);
    let parties = ops.first().map_or(2, |o| o.structure().parties());
    let measure = parse_measure(measure, parties)?;
    let u = py
        .detach(|| core::propagate_uncertainty(&ops, &values, &sigmas, measure, trials, &bound_cfg(seed)))
        .map_err(err)?;
    Ok((u.mean, u.std))
}

/// Reads a JSON record: `(observables, values, sigmas, measure)`.
#[pyfunction]
fn load_record(path: &str) -> PyResult<(Vec<PyObservable>, Vec<f64>, Option<Vec<f64>>, String)> {
    let file = core::RecordFile::load(path).map_err(err)?;
    let rec = file.to_record().map_err(err)?;
    let measure = file.effective_measure().to_string();
    let obs = rec.observables.into_iter().map(|inner| PyObservable { inner }).collect();
    Ok((obs, rec.values, rec.sigmas, measure))
}

#[pyfunction]
fn wc_threshold(n: usize) -> PyResult<f64> {
    if n < 2 {
        return Err(PyValueError::new_err("need at least 2 qubits"));
    }
    Ok(core::wc_threshold(n))
}

#[pyfunction]
fn ww_threshold() -> f64 {
    core::ww_threshold()
}

#[pymodule]
fn entcert(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyObservable>()?;
    m.add_class::<PyPureState>()?;
    m.add_class::<PyBoundResult>()?;
    m.add_class::<PyDualEvaluation>()?;
    m.add_function(wrap_pyfunction!(lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(dual_value, m)?)?;
    m.add_function(wrap_pyfunction!(geometric_measure, m)?)?;
    m.add_function(wrap_pyfunction!(ggm, m)?)?;
    m.add_function(wrap_pyfunction!(schmidt_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(scenario_record, m)?)?;
    m.add_function(wrap_pyfunction!(noise_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(propagate_uncertainty, m)?)?;
    m.add_function(wrap_pyfunction!(load_record, m)?)?;
    m.add_function(wrap_pyfunction!(wc_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(ww_threshold, m)?)?;
    m.add("EPS_POS", core::scenarios::EPS_POS)?;
    Ok(())
}
