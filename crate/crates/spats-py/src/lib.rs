//! Python bindings for the spats toolkit: model partitioning, slow/fast
//! decomposition, gain synthesis and closed-loop simulation.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use spats::decompose::{self, SystemKind};
use spats::matlib::{Matrix, Vector};
use spats::protocol::{self, Coupling, CouplingChoice, SynthesisWeights};
use spats::sim::{self, Horizon};

fn to_py_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn matrix_from_py(rows: Vec<Vec<f64>>, what: &str) -> PyResult<Matrix> {
    if rows.is_empty() || rows[0].is_empty() {
        return Err(PyValueError::new_err(format!("{what} must be non-empty")));
    }
    let ncols = rows[0].len();
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(PyValueError::new_err(format!("{what} has ragged rows")));
    }
    Ok(Matrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn matrix_to_py(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn kind_from_str(kind: &str) -> PyResult<SystemKind> {
    match kind {
        "continuous" => Ok(SystemKind::Continuous),
        "discrete" => Ok(SystemKind::Discrete),
        other => Err(PyValueError::new_err(format!(
            "kind must be 'continuous' or 'discrete', got {other:?}"
        ))),
    }
}

/// Two-block singularly perturbed plant.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct Model {
    inner: decompose::PartitionedLinearModel,
}

#[pymethods]
impl Model {
    /// Partition full system matrices into slow/fast blocks.
    #[staticmethod]
    fn from_full(
        a: Vec<Vec<f64>>,
        b: Vec<Vec<f64>>,
        n1: usize,
        n2: usize,
        epsilon: f64,
        kind: &str,
    ) -> PyResult<Self> {
        let model = decompose::partition_full_model(
            &matrix_from_py(a, "A")?,
            &matrix_from_py(b, "B")?,
            n1,
            n2,
            epsilon,
            kind_from_str(kind)?,
        )
        .map_err(to_py_err)?;
        Ok(Self { inner: model })
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind.as_str()
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.inner.epsilon
    }

    #[getter]
    fn n1(&self) -> usize {
        self.inner.n1
    }

    #[getter]
    fn n2(&self) -> usize {
        self.inner.n2
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.n_inputs
    }

    fn full_matrix(&self) -> Vec<Vec<f64>> {
        matrix_to_py(&self.inner.full_matrix())
    }

    fn full_input(&self) -> Vec<Vec<f64>> {
        matrix_to_py(&self.inner.full_input())
    }
}

/// Slow/fast decoupling transformation and subsystems.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct Decomposition {
    inner: decompose::ChangDecomposition,
}

#[pymethods]
impl Decomposition {
    #[getter]
    fn m(&self) -> Vec<Vec<f64>> {
        matrix_to_py(&self.inner.m)
    }

    #[getter]
    fn n(&self) -> Vec<Vec<f64>> {
        matrix_to_py(&self.inner.n)
    }

    #[getter]
    fn a_s(&self) -> Vec<Vec<f64>> {
        matrix_to_py(&self.inner.a_s)
    }

    #[getter]
    fn b_s(&self) -> Vec<Vec<f64>> {
        matrix_to_py(&self.inner.b_s)
    }

    #[getter]
    fn a_f(&self) -> Vec<Vec<f64>> {
        matrix_to_py(&self.inner.a_f)
    }

    #[getter]
    fn b_f(&self) -> Vec<Vec<f64>> {
        matrix_to_py(&self.inner.b_f)
    }

    #[getter]
    fn newton_iterations(&self) -> usize {
        self.inner.newton_iterations
    }

    #[getter]
    fn residual_m(&self) -> f64 {
        self.inner.residual_m
    }

    #[getter]
    fn residual_n(&self) -> f64 {
        self.inner.residual_n
    }

    /// Transformed coordinates `(x_s, x_f)` of a raw state `[x1; x2]`.
    fn transform(&self, x1: Vec<f64>, x2: Vec<f64>) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let (xs, xf) = sim::transform_states(
            &self.inner,
            &Vector::from_vec(x1),
            &Vector::from_vec(x2),
        )
        .map_err(to_py_err)?;
        Ok((xs.iter().copied().collect(), xf.iter().copied().collect()))
    }
}

/// Directed communication graph with leader pinning.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct Graph {
    inner: protocol::CommGraph,
}

#[pymethods]
impl Graph {
    #[new]
    fn new(adjacency: Vec<Vec<f64>>, pinning: Vec<f64>) -> PyResult<Self> {
        let graph = protocol::build_graph(
            &matrix_from_py(adjacency, "adjacency")?,
            &Vector::from_vec(pinning),
        )
        .map_err(to_py_err)?;
        Ok(Self { inner: graph })
    }

    #[getter]
    fn laplacian(&self) -> Vec<Vec<f64>> {
        matrix_to_py(&self.inner.laplacian)
    }

    #[getter]
    fn gamma(&self) -> Vec<Vec<f64>> {
        matrix_to_py(&self.inner.gamma)
    }

    fn gamma_eigenvalues(&self) -> PyResult<Vec<(f64, f64)>> {
        let s = self.inner.gamma_eigenvalues().map_err(to_py_err)?;
        Ok(s.values().iter().map(|z| (z.re, z.im)).collect())
    }

    fn continuous_coupling_bound(&self) -> PyResult<f64> {
        protocol::continuous_coupling_bound(&self.inner).map_err(to_py_err)
    }

    fn covering_radius(&self, c: f64) -> PyResult<f64> {
        protocol::covering_radius(&self.inner, c).map_err(to_py_err)
    }
}

/// Synthesized synchronization gains.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct Gains {
    inner: protocol::SynchronizationGains,
}

#[pymethods]
impl Gains {
    #[getter]
    fn k_s(&self) -> Vec<Vec<f64>> {
        matrix_to_py(&self.inner.k_s)
    }

    #[getter]
    fn k_f(&self) -> Vec<Vec<f64>> {
        matrix_to_py(&self.inner.k_f)
    }

    #[getter]
    fn coupling(&self) -> (f64, f64) {
        self.inner.coupling.gains()
    }

    #[getter]
    fn feasible(&self) -> bool {
        self.inner.coupling.feasible()
    }

    /// Discrete stability radii `(r_s, r_f)`; infinity for continuous gains.
    #[getter]
    fn radii(&self) -> (f64, f64) {
        match &self.inner.coupling {
            Coupling::Discrete {
                radius_s, radius_f, ..
            } => (radius_s.value(), radius_f.value()),
            Coupling::Continuous { .. } => (f64::INFINITY, f64::INFINITY),
        }
    }
}

/// Closed-loop trajectory log.
#[pyclass(skip_from_py_object)]
struct Trajectory {
    inner: sim::TrajectoryLog,
}

#[pymethods]
impl Trajectory {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.times.clone()
    }

    #[getter]
    fn leader_states(&self) -> Vec<Vec<f64>> {
        self.inner
            .leader_states
            .iter()
            .map(|x| x.iter().copied().collect())
            .collect()
    }

    /// `follower_states[agent][time_index][state_index]`.
    #[getter]
    fn follower_states(&self) -> Vec<Vec<Vec<f64>>> {
        self.inner
            .follower_states
            .iter()
            .map(|per_agent| per_agent.iter().map(|x| x.iter().copied().collect()).collect())
            .collect()
    }

    #[getter]
    fn error_norms(&self) -> Vec<Vec<f64>> {
        self.inner.error_norms.clone()
    }

    /// Final error, settling times and the synchronization verdict.
    fn metrics(&self, threshold: f64) -> (Vec<f64>, Vec<Option<f64>>, bool) {
        let m = sim::compute_metrics(&self.inner, threshold);
        (m.final_error, m.settling_time, m.synchronized)
    }
}

/// Solve the decoupling transformation for a model.
#[pyfunction]
#[pyo3(signature = (model, tol = 1e-12, max_iter = 50))]
fn chang_decompose(model: &Model, tol: f64, max_iter: usize) -> PyResult<Decomposition> {
    let d = decompose::decompose_with(&model.inner, tol, max_iter).map_err(to_py_err)?;
    Ok(Decomposition { inner: d })
}

/// Spectrum-conservation check; returns `(max_eigen_gap, passed)`.
#[pyfunction]
#[pyo3(signature = (model, decomposition, gap_tol = 1e-6, residual_tol = 1e-10))]
fn verify_decomposition(
    model: &Model,
    decomposition: &Decomposition,
    gap_tol: f64,
    residual_tol: f64,
) -> PyResult<(f64, bool)> {
    let report =
        decompose::verify_decomposition(&model.inner, &decomposition.inner, gap_tol, residual_tol)
            .map_err(to_py_err)?;
    Ok((report.max_eigen_gap, report.passed()))
}

/// Synthesize synchronization gains with the bundled default weights.
#[pyfunction]
#[pyo3(signature = (model, decomposition, graph, coupling = None))]
fn synthesize(
    model: &Model,
    decomposition: &Decomposition,
    graph: &Graph,
    coupling: Option<f64>,
) -> PyResult<Gains> {
    let weights = SynthesisWeights::defaults(
        model.inner.kind,
        model.inner.n1,
        model.inner.n2,
        model.inner.n_inputs,
    );
    let choice = match coupling {
        Some(c) => CouplingChoice::Single(c),
        None => CouplingChoice::Auto,
    };
    let gains = protocol::synthesize(
        model.inner.kind,
        &decomposition.inner,
        &graph.inner,
        &weights,
        choice,
    )
    .map_err(to_py_err)?;
    Ok(Gains { inner: gains })
}

/// Run the closed loop; `horizon` is seconds (continuous) or steps (discrete).
#[pyfunction]
#[pyo3(signature = (model, decomposition, graph, gains, leader_init, follower_inits, horizon, step = None))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    model: &Model,
    decomposition: &Decomposition,
    graph: &Graph,
    gains: &Gains,
    leader_init: Vec<f64>,
    follower_inits: Vec<Vec<f64>>,
    horizon: f64,
    step: Option<f64>,
) -> PyResult<Trajectory> {
    let horizon = match model.inner.kind {
        SystemKind::Continuous => Horizon::Seconds(horizon),
        SystemKind::Discrete => {
            if horizon <= 0.0 || horizon.fract() != 0.0 {
                return Err(PyValueError::new_err(
                    "discrete horizon must be a positive whole number of steps",
                ));
            }
            Horizon::Steps(horizon as usize)
        }
    };
    let scenario = sim::Scenario {
        model: model.inner.clone(),
        decomp: decomposition.inner.clone(),
        graph: graph.inner.clone(),
        gains: gains.inner.clone(),
        leader_init: Vector::from_vec(leader_init),
        follower_inits: follower_inits.into_iter().map(Vector::from_vec).collect(),
        horizon,
        step,
        settle_threshold: 1e-2,
    };
    let log = sim::simulate(&scenario).map_err(to_py_err)?;
    Ok(Trajectory { inner: log })
}

#[pymodule]
fn spats_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Model>()?;
    m.add_class::<Decomposition>()?;
    m.add_class::<Graph>()?;
    m.add_class::<Gains>()?;
    m.add_class::<Trajectory>()?;
    m.add_function(wrap_pyfunction!(chang_decompose, m)?)?;
    m.add_function(wrap_pyfunction!(verify_decomposition, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
