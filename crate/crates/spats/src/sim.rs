//! Closed-loop simulation of the leader and all followers: fixed-step RK4 on
//! the stacked continuous system, exact difference iteration for the discrete
//! one, with per-step transformed-coordinate errors and trajectory logging.

use crate::decompose::{ChangDecomposition, PartitionedLinearModel, SystemKind};
use crate::matlib::{self, MatError, Matrix, Vector};
use crate::protocol::{self, CommGraph, ProtocolError, SynchronizationGains};
use thiserror::Error;

/// Divergence guard: any state beyond this norm aborts the run.
pub const DIVERGENCE_NORM: f64 = 1e9;
/// RK4 keeps `step * rho(closed loop)` at or below this margin.
pub const STEP_SAFETY: f64 = 2.5;
/// Default logging step for continuous runs, tightened by the stability bound.
pub const DEFAULT_STEP: f64 = 0.01;

#[derive(Debug, Clone, Error)]
pub enum SimError {
    #[error("state norm {norm:.3e} exceeded the divergence guard at t = {time}")]
    StepTooLarge { time: f64, norm: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Mat(#[from] MatError),
}

pub type SimResult<T> = Result<T, SimError>;

/// Simulation horizon: wall-clock seconds for continuous runs, sample count
/// for discrete ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    Seconds(f64),
    Steps(usize),
}

/// Everything needed to run one closed-loop experiment.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub model: PartitionedLinearModel,
    pub decomp: ChangDecomposition,
    pub graph: CommGraph,
    pub gains: SynchronizationGains,
    pub leader_init: Vector,
    pub follower_inits: Vec<Vector>,
    pub horizon: Horizon,
    pub step: Option<f64>,
    /// Error threshold used for the synchronization verdict.
    pub settle_threshold: f64,
}

/// Time-indexed states, controls and tracking-error norms.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub times: Vec<f64>,
    pub leader_states: Vec<Vector>,
    /// `follower_states[agent][time_index]`.
    pub follower_states: Vec<Vec<Vector>>,
    /// `controls[agent][time_index]`.
    pub controls: Vec<Vec<Vector>>,
    /// `error_norms[agent][time_index]`, infinity norm of `x_i - x_leader`.
    pub error_norms: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct ConvergenceMetrics {
    pub threshold: f64,
    pub final_error: Vec<f64>,
    pub settling_time: Vec<Option<f64>>,
    pub synchronized: bool,
}

/// One leader update: an RK4 step of the autonomous dynamics (continuous) or
/// one application of the full difference map (discrete).
pub fn leader_step(model: &PartitionedLinearModel, state: &Vector, dt: Option<f64>) -> SimResult<Vector> {
    let a = model.full_matrix();
    if state.len() != a.nrows() {
        return Err(SimError::DimensionMismatch(format!(
            "state has length {}, model expects {}",
            state.len(),
            a.nrows()
        )));
    }
    match model.kind {
        SystemKind::Continuous => {
            let h = dt.ok_or_else(|| {
                SimError::InvalidScenario("continuous leader step needs a time step".into())
            })?;
            Ok(rk4_step(&|x| &a * x, state, h))
        }
        SystemKind::Discrete => Ok(&a * state),
    }
}

/// Maps partitioned raw states to the decoupled coordinates:
/// `x_f = x2 + M x1`, `x_s = x1 - N x_f` (continuous) or
/// `x_s = x1 - eps N x_f` (discrete).
pub fn transform_states(
    decomp: &ChangDecomposition,
    x1: &Vector,
    x2: &Vector,
) -> SimResult<(Vector, Vector)> {
    if x1.len() != decomp.m.ncols() || x2.len() != decomp.m.nrows() {
        return Err(SimError::DimensionMismatch(format!(
            "expected slow/fast parts of lengths {} and {}",
            decomp.m.ncols(),
            decomp.m.nrows()
        )));
    }
    let x_f = x2 + &decomp.m * x1;
    let x_s = match decomp.kind {
        SystemKind::Continuous => x1 - &decomp.n * &x_f,
        SystemKind::Discrete => x1 - decomp.epsilon * (&decomp.n * &x_f),
    };
    Ok((x_s, x_f))
}

/// Inverse of [`transform_states`].
pub fn inverse_transform(
    decomp: &ChangDecomposition,
    x_s: &Vector,
    x_f: &Vector,
) -> SimResult<(Vector, Vector)> {
    if x_s.len() != decomp.m.ncols() || x_f.len() != decomp.m.nrows() {
        return Err(SimError::DimensionMismatch("transformed parts have wrong lengths".into()));
    }
    let x1 = match decomp.kind {
        SystemKind::Continuous => x_s + &decomp.n * x_f,
        SystemKind::Discrete => x_s + decomp.epsilon * (&decomp.n * x_f),
    };
    let x2 = x_f - &decomp.m * &x1;
    Ok((x1, x2))
}

fn transform_full(decomp: &ChangDecomposition, x: &Vector) -> SimResult<(Vector, Vector)> {
    let n1 = decomp.m.ncols();
    let n2 = decomp.m.nrows();
    let x1 = x.rows(0, n1).into_owned();
    let x2 = x.rows(n1, n2).into_owned();
    transform_states(decomp, &x1, &x2)
}

fn rk4_step(f: &dyn Fn(&Vector) -> Vector, x: &Vector, h: f64) -> Vector {
    let k1 = f(x);
    let k2 = f(&(x + (h / 2.0) * &k1));
    let k3 = f(&(x + (h / 2.0) * &k2));
    let k4 = f(&(x + h * &k3));
    x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

struct StackedSystem<'a> {
    scenario: &'a Scenario,
    a_full: Matrix,
    b_full: Matrix,
    n_state: usize,
}

impl<'a> StackedSystem<'a> {
    fn new(scenario: &'a Scenario) -> SimResult<Self> {
        let model = &scenario.model;
        let n_state = model.n1 + model.n2;
        if scenario.follower_inits.is_empty() {
            return Err(SimError::InvalidScenario("at least one follower is required".into()));
        }
        if scenario.follower_inits.len() != scenario.graph.n_agents {
            return Err(SimError::InvalidScenario(format!(
                "{} follower initial states for a {}-agent graph",
                scenario.follower_inits.len(),
                scenario.graph.n_agents
            )));
        }
        if scenario.leader_init.len() != n_state
            || scenario.follower_inits.iter().any(|x| x.len() != n_state)
        {
            return Err(SimError::DimensionMismatch(format!(
                "initial states must have length {n_state}"
            )));
        }
        if scenario.gains.kind != model.kind {
            return Err(SimError::InvalidScenario(
                "gains and model disagree on the time kind".into(),
            ));
        }
        let gains_fit = scenario.gains.k_s.ncols() == model.n1
            && scenario.gains.k_f.ncols() == model.n2
            && scenario.gains.k_s.nrows() == model.n_inputs
            && scenario.gains.k_f.nrows() == model.n_inputs;
        if !gains_fit {
            return Err(SimError::DimensionMismatch(
                "gain matrices do not fit the model's subsystem dimensions".into(),
            ));
        }
        Ok(Self {
            scenario,
            a_full: model.full_matrix(),
            b_full: model.full_input(),
            n_state,
        })
    }

    fn n_agents(&self) -> usize {
        self.scenario.graph.n_agents
    }

    fn agent_state(&self, stacked: &Vector, agent: usize) -> Vector {
        stacked.rows(agent * self.n_state, self.n_state).into_owned()
    }

    /// Control of every follower at the given stacked state, evaluated in the
    /// transformed coordinates.
    fn controls(&self, stacked: &Vector) -> SimResult<Vec<Vector>> {
        let decomp = &self.scenario.decomp;
        let n_agents = self.n_agents();
        let leader = self.agent_state(stacked, 0);
        let (leader_s, leader_f) = transform_full(decomp, &leader)?;
        let mut slow_parts = Vec::with_capacity(n_agents);
        let mut fast_parts = Vec::with_capacity(n_agents);
        for i in 0..n_agents {
            let (xs, xf) = transform_full(decomp, &self.agent_state(stacked, i + 1))?;
            slow_parts.push(xs);
            fast_parts.push(xf);
        }
        let mut out = Vec::with_capacity(n_agents);
        for i in 0..n_agents {
            let e_s = protocol::neighborhood_error(&self.scenario.graph, &slow_parts, &leader_s, i)?;
            let e_f = protocol::neighborhood_error(&self.scenario.graph, &fast_parts, &leader_f, i)?;
            let u = match self.scenario.model.kind {
                SystemKind::Continuous => {
                    protocol::control_continuous(&self.scenario.gains, &e_s.e, &e_f.e)?
                }
                SystemKind::Discrete => protocol::control_discrete(
                    &self.scenario.gains,
                    &self.scenario.graph,
                    i,
                    &e_s.e,
                    &e_f.e,
                )?,
            };
            out.push(u);
        }
        Ok(out)
    }

    /// Time derivative of the stacked continuous system.
    fn derivative(&self, stacked: &Vector) -> SimResult<Vector> {
        let controls = self.controls(stacked)?;
        let mut d = Vector::zeros(stacked.len());
        d.rows_mut(0, self.n_state)
            .copy_from(&(&self.a_full * self.agent_state(stacked, 0)));
        for (i, u) in controls.iter().enumerate() {
            let x = self.agent_state(stacked, i + 1);
            d.rows_mut((i + 1) * self.n_state, self.n_state)
                .copy_from(&(&self.a_full * x + &self.b_full * u));
        }
        Ok(d)
    }

    /// One discrete update of the whole formation.
    fn discrete_step(&self, stacked: &Vector) -> SimResult<Vector> {
        let controls = self.controls(stacked)?;
        let mut next = Vector::zeros(stacked.len());
        next.rows_mut(0, self.n_state)
            .copy_from(&(&self.a_full * self.agent_state(stacked, 0)));
        for (i, u) in controls.iter().enumerate() {
            let x = self.agent_state(stacked, i + 1);
            next.rows_mut((i + 1) * self.n_state, self.n_state)
                .copy_from(&(&self.a_full * x + &self.b_full * u));
        }
        Ok(next)
    }

    /// Explicit stacked closed-loop matrix; the coupling is linear, so it is
    /// recovered column by column from the derivative.
    fn closed_loop_matrix(&self) -> SimResult<Matrix> {
        let n = (self.n_agents() + 1) * self.n_state;
        let mut a = Matrix::zeros(n, n);
        for j in 0..n {
            let mut e = Vector::zeros(n);
            e[j] = 1.0;
            let col = self.derivative(&e)?;
            a.column_mut(j).copy_from(&col);
        }
        Ok(a)
    }

    fn initial_stacked(&self) -> Vector {
        let n = (self.n_agents() + 1) * self.n_state;
        let mut x = Vector::zeros(n);
        x.rows_mut(0, self.n_state).copy_from(&self.scenario.leader_init);
        for (i, xi) in self.scenario.follower_inits.iter().enumerate() {
            x.rows_mut((i + 1) * self.n_state, self.n_state).copy_from(xi);
        }
        x
    }
}

/// Largest RK4-stable logging step for the scenario's closed loop.
pub fn stable_step_bound(scenario: &Scenario) -> SimResult<f64> {
    let sys = StackedSystem::new(scenario)?;
    let rho = matlib::eigvals(&sys.closed_loop_matrix()?)?.spectral_radius();
    if rho == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(STEP_SAFETY / rho)
}

fn guard(stacked: &Vector, time: f64) -> SimResult<()> {
    let norm = stacked.amax();
    if !norm.is_finite() || norm > DIVERGENCE_NORM {
        return Err(SimError::StepTooLarge { time, norm });
    }
    Ok(())
}

/// Integrates the stacked closed loop with classical RK4 at a fixed logging
/// step. When the requested step exceeds the stability bound, each logging
/// interval is subdivided into equal RK4 substeps that respect it.
pub fn simulate_continuous(scenario: &Scenario) -> SimResult<TrajectoryLog> {
    if scenario.model.kind != SystemKind::Continuous {
        return Err(SimError::InvalidScenario("scenario is not continuous".into()));
    }
    let sys = StackedSystem::new(scenario)?;
    let horizon = match scenario.horizon {
        Horizon::Seconds(t) if t > 0.0 => t,
        _ => {
            return Err(SimError::InvalidScenario(
                "continuous horizon must be a positive duration".into(),
            ))
        }
    };
    let bound = stable_step_bound(scenario)?;
    let step = match scenario.step {
        Some(s) if s > 0.0 => s,
        Some(_) => return Err(SimError::InvalidScenario("step must be positive".into())),
        None => DEFAULT_STEP.min(bound),
    };
    let substeps = if step <= bound {
        1
    } else {
        (step / bound).ceil() as usize
    };
    let h = step / substeps as f64;
    let steps_out = (horizon / step).round().max(1.0) as usize;

    let mut log = new_log(&sys);
    let mut x = sys.initial_stacked();
    guard(&x, 0.0)?;
    append_sample(&sys, &mut log, 0.0, &x)?;
    for k in 1..=steps_out {
        for _ in 0..substeps {
            let deriv = |state: &Vector| sys.derivative(state).expect("dimensions fixed after validation");
            x = rk4_step(&deriv, &x, h);
        }
        let t = k as f64 * step;
        guard(&x, t)?;
        append_sample(&sys, &mut log, t, &x)?;
    }
    Ok(log)
}

/// Exact difference iteration of the discrete closed loop.
pub fn simulate_discrete(scenario: &Scenario) -> SimResult<TrajectoryLog> {
    if scenario.model.kind != SystemKind::Discrete {
        return Err(SimError::InvalidScenario("scenario is not discrete".into()));
    }
    let sys = StackedSystem::new(scenario)?;
    let steps = match scenario.horizon {
        Horizon::Steps(k) if k > 0 => k,
        _ => {
            return Err(SimError::InvalidScenario(
                "discrete horizon must be a positive step count".into(),
            ))
        }
    };
    let mut log = new_log(&sys);
    let mut x = sys.initial_stacked();
    guard(&x, 0.0)?;
    append_sample(&sys, &mut log, 0.0, &x)?;
    for k in 1..=steps {
        x = sys.discrete_step(&x)?;
        let t = k as f64;
        guard(&x, t)?;
        append_sample(&sys, &mut log, t, &x)?;
    }
    Ok(log)
}

/// Dispatches on the scenario's time kind.
pub fn simulate(scenario: &Scenario) -> SimResult<TrajectoryLog> {
    match scenario.model.kind {
        SystemKind::Continuous => simulate_continuous(scenario),
        SystemKind::Discrete => simulate_discrete(scenario),
    }
}

fn new_log(sys: &StackedSystem) -> TrajectoryLog {
    TrajectoryLog {
        times: Vec::new(),
        leader_states: Vec::new(),
        follower_states: vec![Vec::new(); sys.n_agents()],
        controls: vec![Vec::new(); sys.n_agents()],
        error_norms: vec![Vec::new(); sys.n_agents()],
    }
}

fn append_sample(sys: &StackedSystem, log: &mut TrajectoryLog, t: f64, x: &Vector) -> SimResult<()> {
    let controls = sys.controls(x)?;
    let leader = sys.agent_state(x, 0);
    log.times.push(t);
    for (i, u) in controls.into_iter().enumerate() {
        let xi = sys.agent_state(x, i + 1);
        log.error_norms[i].push((&xi - &leader).amax());
        log.follower_states[i].push(xi);
        log.controls[i].push(u);
    }
    log.leader_states.push(leader);
    Ok(())
}

/// Settling times and the synchronization verdict at a fixed threshold.
pub fn compute_metrics(log: &TrajectoryLog, threshold: f64) -> ConvergenceMetrics {
    let mut final_error = Vec::with_capacity(log.error_norms.len());
    let mut settling_time = Vec::with_capacity(log.error_norms.len());
    for errs in &log.error_norms {
        final_error.push(*errs.last().unwrap_or(&f64::INFINITY));
        // First sample after which the error stays strictly below threshold.
        let mut idx = errs.len();
        while idx > 0 && errs[idx - 1] < threshold {
            idx -= 1;
        }
        settling_time.push(if idx < errs.len() {
            Some(log.times[idx])
        } else {
            None
        });
    }
    let synchronized = settling_time.iter().all(|s| s.is_some());
    ConvergenceMetrics {
        threshold,
        final_error,
        settling_time,
        synchronized,
    }
}
