//! Communication-graph machinery and decentralized gain synthesis: Laplacian
//! and pinning structure, per-subsystem optimal gains, coupling-gain
//! feasibility for both time kinds, and the local control laws.

use crate::decompose::{ChangDecomposition, SystemKind};
use crate::matlib::{self, ComplexSpectrum, MatError, Matrix, Vector};
use nalgebra::Complex;
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum ProtocolError {
    #[error("adjacency weight must be nonnegative (alpha[{i}][{j}] = {w})")]
    NegativeWeight { i: usize, j: usize, w: f64 },
    #[error("follower {0} is unreachable from the leader")]
    LeaderUnreachable(usize),
    #[error("connectivity condition violated: {0}")]
    NonPositiveEigenvalue(String),
    #[error("no coupling gain satisfies the stability-radius bound (best c*r0 = {best:.3e}, radius {radius:.3e})")]
    Infeasible { best: f64, radius: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Mat(#[from] MatError),
}

pub type ProtocolResult<T> = Result<T, ProtocolError>;

/// Directed communication topology with leader pinning and every derived
/// matrix the protocols need. Immutable after construction.
#[derive(Debug, Clone)]
pub struct CommGraph {
    pub n_agents: usize,
    pub adjacency: Matrix,
    pub pinning: Vector,
    pub laplacian: Matrix,
    pub degree: Vector,
    /// Weighted graph matrix `(I + D + B)^-1 (L + B)`.
    pub gamma: Matrix,
}

impl CommGraph {
    /// `L + B`: the matrix whose spectrum governs continuous synchronizability.
    pub fn pinned_laplacian(&self) -> Matrix {
        &self.laplacian + Matrix::from_diagonal(&self.pinning)
    }

    pub fn gamma_eigenvalues(&self) -> ProtocolResult<ComplexSpectrum> {
        Ok(matlib::eigvals(&self.gamma)?)
    }
}

/// Builds the graph, validating weights and leader reachability.
pub fn build_graph(adjacency: &Matrix, pinning: &Vector) -> ProtocolResult<CommGraph> {
    let n = adjacency.nrows();
    if adjacency.ncols() != n {
        return Err(ProtocolError::DimensionMismatch("adjacency must be square".into()));
    }
    if pinning.len() != n {
        return Err(ProtocolError::DimensionMismatch(format!(
            "pinning has length {}, expected {n}",
            pinning.len()
        )));
    }
    if n == 0 {
        return Err(ProtocolError::InvalidArgument("graph must have at least one agent".into()));
    }
    for i in 0..n {
        if adjacency[(i, i)] != 0.0 {
            return Err(ProtocolError::InvalidArgument(format!(
                "self-loop weight alpha[{i}][{i}] must be zero"
            )));
        }
        for j in 0..n {
            if adjacency[(i, j)] < 0.0 {
                return Err(ProtocolError::NegativeWeight {
                    i,
                    j,
                    w: adjacency[(i, j)],
                });
            }
        }
        if pinning[i] < 0.0 {
            return Err(ProtocolError::InvalidArgument(format!(
                "pinning gain beta[{i}] must be nonnegative"
            )));
        }
    }

    // Breadth-first reachability from a virtual leader through pinned nodes;
    // alpha[i][j] > 0 means information flows from j to i.
    let mut reached: Vec<bool> = (0..n).map(|i| pinning[i] > 0.0).collect();
    let mut queue: Vec<usize> = (0..n).filter(|&i| reached[i]).collect();
    while let Some(j) = queue.pop() {
        for i in 0..n {
            if !reached[i] && adjacency[(i, j)] > 0.0 {
                reached[i] = true;
                queue.push(i);
            }
        }
    }
    if let Some(i) = reached.iter().position(|&r| !r) {
        return Err(ProtocolError::LeaderUnreachable(i));
    }

    let degree = Vector::from_iterator(n, (0..n).map(|i| adjacency.row(i).sum()));
    let laplacian = Matrix::from_diagonal(&degree) - adjacency;
    // I + D + B is diagonal positive, so the inverse is exact per row.
    let mut gamma = &laplacian + Matrix::from_diagonal(pinning);
    for i in 0..n {
        let scale = 1.0 + degree[i] + pinning[i];
        for j in 0..n {
            gamma[(i, j)] /= scale;
        }
    }
    Ok(CommGraph {
        n_agents: n,
        adjacency: adjacency.clone(),
        pinning: pinning.clone(),
        laplacian,
        degree,
        gamma,
    })
}

/// Smallest admissible continuous coupling gain `1 / (2 min Re lambda(L+B))`.
pub fn continuous_coupling_bound(graph: &CommGraph) -> ProtocolResult<f64> {
    let spectrum = matlib::eigvals(&graph.pinned_laplacian())?;
    let min_re = spectrum.min_real_part();
    if min_re <= 0.0 {
        return Err(ProtocolError::NonPositiveEigenvalue(format!(
            "min Re eig(L+B) = {min_re:.3e}"
        )));
    }
    Ok(1.0 / (2.0 * min_re))
}

/// Continuous LQR gain `K = R^-1 B' P` with `P` from the Riccati equation.
pub fn lqr_gain_continuous(
    a: &Matrix,
    b: &Matrix,
    q: &Matrix,
    r: &Matrix,
) -> ProtocolResult<(Matrix, Matrix)> {
    let p = matlib::solve_care(a, b, q, r)?;
    let k = matlib::solve_linear(r, &(b.transpose() * &p))?;
    Ok((k, p))
}

/// Discrete gain `K = (B'PB)^-1 B'PA` with `P` from the Riccati-like
/// fixed point.
pub fn gain_discrete(a: &Matrix, b: &Matrix, q: &Matrix) -> ProtocolResult<(Matrix, Matrix)> {
    let p = matlib::solve_dare_cheap(a, b, q)?;
    let btpb = b.transpose() * &p * b;
    let btpa = b.transpose() * &p * a;
    let k = matlib::solve_linear(&btpb, &btpa).map_err(|_| MatError::PivotBreakdown)?;
    Ok((k, p))
}

/// Stability radius of a discrete subsystem; unbounded when the weighted
/// one-step map vanishes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StabilityRadius {
    Finite(f64),
    Unbounded,
}

impl StabilityRadius {
    pub fn value(&self) -> f64 {
        match self {
            StabilityRadius::Finite(r) => *r,
            StabilityRadius::Unbounded => f64::INFINITY,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, StabilityRadius::Finite(_))
    }
}

/// `r = sigma_max(Q^-T/2 A'PB (B'PB)^-1 B'PA Q^-1/2)^-1/2`.
pub fn stability_radius_discrete(
    a: &Matrix,
    b: &Matrix,
    p: &Matrix,
    q: &Matrix,
) -> ProtocolResult<StabilityRadius> {
    let btpb = b.transpose() * p * b;
    let gain = matlib::solve_linear(&btpb, &(b.transpose() * p * a))
        .map_err(|_| MatError::PivotBreakdown)?;
    let inner = a.transpose() * p * b * gain;
    let qih = matlib::spd_inverse_sqrt(q)?;
    let weighted = &qih * inner * &qih;
    let smax = matlib::sigma_max(&weighted)?;
    if smax == 0.0 {
        Ok(StabilityRadius::Unbounded)
    } else {
        Ok(StabilityRadius::Finite(smax.powf(-0.5)))
    }
}

/// Radius of the smallest circle centered at `(1/c, 0)` containing the
/// spectrum of the weighted graph matrix.
pub fn covering_radius(graph: &CommGraph, c: f64) -> ProtocolResult<f64> {
    if c <= 0.0 {
        return Err(ProtocolError::InvalidArgument("coupling gain must be positive".into()));
    }
    let center = Complex::new(1.0 / c, 0.0);
    let spectrum = graph.gamma_eigenvalues()?;
    Ok(spectrum
        .values()
        .iter()
        .map(|l| (l - center).norm())
        .fold(0.0, f64::max))
}

const COUPLING_GRID_LO: f64 = 1e-2;
const COUPLING_GRID_HI: f64 = 1e2;
const COUPLING_GRID_POINTS: usize = 1000;

/// Picks a discrete coupling gain minimizing `c * r0(c)` over a log grid with
/// golden-section refinement; errors when even the minimum violates `c r0 < r`.
pub fn select_discrete_coupling(graph: &CommGraph, r: f64) -> ProtocolResult<f64> {
    if r <= 0.0 {
        return Err(ProtocolError::InvalidArgument("stability radius must be positive".into()));
    }
    let spectrum = graph.gamma_eigenvalues()?;
    // c * r0(c) = max_i |c lambda_i - 1|: convex in c, so the grid minimum
    // brackets the global one and golden-section closes in on it.
    let objective = |c: f64| -> f64 {
        spectrum
            .values()
            .iter()
            .map(|l| (c * l - Complex::new(1.0, 0.0)).norm())
            .fold(0.0, f64::max)
    };
    let grid: Vec<f64> = (0..COUPLING_GRID_POINTS)
        .map(|k| {
            let t = k as f64 / (COUPLING_GRID_POINTS - 1) as f64;
            COUPLING_GRID_LO * (COUPLING_GRID_HI / COUPLING_GRID_LO).powf(t)
        })
        .collect();
    let best_idx = grid
        .iter()
        .enumerate()
        .min_by(|a, b| objective(*a.1).partial_cmp(&objective(*b.1)).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let mut lo = grid[best_idx.saturating_sub(1)];
    let mut hi = grid[(best_idx + 1).min(grid.len() - 1)];
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut c1 = hi - phi * (hi - lo);
    let mut c2 = lo + phi * (hi - lo);
    let mut f1 = objective(c1);
    let mut f2 = objective(c2);
    for _ in 0..200 {
        if f1 <= f2 {
            hi = c2;
            c2 = c1;
            f2 = f1;
            c1 = hi - phi * (hi - lo);
            f1 = objective(c1);
        } else {
            lo = c1;
            c1 = c2;
            f1 = f2;
            c2 = lo + phi * (hi - lo);
            f2 = objective(c2);
        }
        if hi - lo <= 1e-14 * hi.max(1.0) {
            break;
        }
    }
    let c = 0.5 * (lo + hi);
    let best = objective(c);
    if best >= r {
        return Err(ProtocolError::Infeasible { best, radius: r });
    }
    Ok(c)
}

/// Weighted sum of state differences toward neighbors and the pinned leader.
#[derive(Debug, Clone)]
pub struct NeighborhoodError {
    pub agent_index: usize,
    pub e: Vector,
}

pub fn neighborhood_error(
    graph: &CommGraph,
    agent_states: &[Vector],
    leader_state: &Vector,
    i: usize,
) -> ProtocolResult<NeighborhoodError> {
    if agent_states.len() != graph.n_agents {
        return Err(ProtocolError::DimensionMismatch(format!(
            "{} agent states for {} agents",
            agent_states.len(),
            graph.n_agents
        )));
    }
    if i >= graph.n_agents {
        return Err(ProtocolError::InvalidArgument(format!("agent index {i} out of range")));
    }
    let dim = leader_state.len();
    if agent_states.iter().any(|x| x.len() != dim) {
        return Err(ProtocolError::DimensionMismatch(
            "all state vectors must share the leader's dimension".into(),
        ));
    }
    let mut e = Vector::zeros(dim);
    for j in 0..graph.n_agents {
        let w = graph.adjacency[(i, j)];
        if w != 0.0 {
            e += w * (&agent_states[j] - &agent_states[i]);
        }
    }
    if graph.pinning[i] != 0.0 {
        e += graph.pinning[i] * (leader_state - &agent_states[i]);
    }
    Ok(NeighborhoodError { agent_index: i, e })
}

/// Gain-synthesis weight matrices per subsystem.
#[derive(Debug, Clone)]
pub struct SynthesisWeights {
    pub q_slow: Matrix,
    pub q_fast: Matrix,
    pub r_slow: Matrix,
    pub r_fast: Matrix,
}

impl SynthesisWeights {
    /// Bundled defaults: `Q = I` with `R = 0.001 I` for continuous designs
    /// and `Q = I` for discrete ones.
    pub fn defaults(kind: SystemKind, n1: usize, n2: usize, m: usize) -> Self {
        let r_scale = match kind {
            SystemKind::Continuous => 0.001,
            SystemKind::Discrete => 1.0,
        };
        Self {
            q_slow: Matrix::identity(n1, n1),
            q_fast: Matrix::identity(n2, n2),
            r_slow: r_scale * Matrix::identity(m, m),
            r_fast: r_scale * Matrix::identity(m, m),
        }
    }
}

/// How the coupling gain(s) should be chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CouplingChoice {
    /// Continuous: the spectral bound. Discrete: minimize `c * r0(c)`.
    Auto,
    Single(f64),
    Pair { c_s: f64, c_f: f64 },
}

/// Selected coupling gains with their admissibility evidence.
#[derive(Debug, Clone)]
pub enum Coupling {
    Continuous {
        c: f64,
        c_min: f64,
        feasible: bool,
    },
    Discrete {
        c_s: f64,
        c_f: f64,
        radius_s: StabilityRadius,
        radius_f: StabilityRadius,
        r0_s: f64,
        r0_f: f64,
        feasible: bool,
    },
}

impl Coupling {
    pub fn feasible(&self) -> bool {
        match self {
            Coupling::Continuous { feasible, .. } => *feasible,
            Coupling::Discrete { feasible, .. } => *feasible,
        }
    }

    /// Coupling gains applied to the slow and fast sub-controllers.
    pub fn gains(&self) -> (f64, f64) {
        match self {
            Coupling::Continuous { c, .. } => (*c, *c),
            Coupling::Discrete { c_s, c_f, .. } => (*c_s, *c_f),
        }
    }
}

/// Feedback gains, Riccati solutions and coupling data for both subsystems.
#[derive(Debug, Clone)]
pub struct SynchronizationGains {
    pub kind: SystemKind,
    pub k_s: Matrix,
    pub k_f: Matrix,
    pub p_s: Matrix,
    pub p_f: Matrix,
    pub weights: SynthesisWeights,
    pub coupling: Coupling,
}

/// Per-mode closed-loop stability evidence: `A_x - c lambda B_x K_x` must
/// have negative spectral abscissa (continuous) or spectral radius below one
/// (discrete).
#[derive(Debug, Clone)]
pub struct Certificate {
    pub subsystem: &'static str,
    pub graph_eigenvalue: Complex<f64>,
    /// Spectral abscissa (continuous) or spectral radius (discrete).
    pub measure: f64,
    pub ok: bool,
}

/// Synthesizes both sub-controllers and resolves the coupling gains.
pub fn synthesize(
    kind: SystemKind,
    decomp: &ChangDecomposition,
    graph: &CommGraph,
    weights: &SynthesisWeights,
    choice: CouplingChoice,
) -> ProtocolResult<SynchronizationGains> {
    match kind {
        SystemKind::Continuous => {
            let (k_s, p_s) =
                lqr_gain_continuous(&decomp.a_s, &decomp.b_s, &weights.q_slow, &weights.r_slow)?;
            let (k_f, p_f) =
                lqr_gain_continuous(&decomp.a_f, &decomp.b_f, &weights.q_fast, &weights.r_fast)?;
            let c_min = continuous_coupling_bound(graph)?;
            let c = match choice {
                CouplingChoice::Auto => c_min,
                CouplingChoice::Single(c) => c,
                CouplingChoice::Pair { .. } => {
                    return Err(ProtocolError::InvalidArgument(
                        "continuous protocol uses a single coupling gain".into(),
                    ))
                }
            };
            if c <= 0.0 {
                return Err(ProtocolError::InvalidArgument("coupling gain must be positive".into()));
            }
            let feasible = c >= c_min - 1e-12;
            Ok(SynchronizationGains {
                kind,
                k_s,
                k_f,
                p_s,
                p_f,
                weights: weights.clone(),
                coupling: Coupling::Continuous { c, c_min, feasible },
            })
        }
        SystemKind::Discrete => {
            let (k_s, p_s) = gain_discrete(&decomp.a_s, &decomp.b_s, &weights.q_slow)?;
            let (k_f, p_f) = gain_discrete(&decomp.a_f, &decomp.b_f, &weights.q_fast)?;
            let radius_s =
                stability_radius_discrete(&decomp.a_s, &decomp.b_s, &p_s, &weights.q_slow)?;
            let radius_f =
                stability_radius_discrete(&decomp.a_f, &decomp.b_f, &p_f, &weights.q_fast)?;
            let (c_s, c_f) = match choice {
                CouplingChoice::Auto => {
                    let r = radius_s.value().min(radius_f.value());
                    if !r.is_finite() {
                        // Both radii unbounded: any gain works; keep the
                        // covering-circle minimizer.
                        let c = select_discrete_coupling(graph, f64::MAX)?;
                        (c, c)
                    } else {
                        let c = select_discrete_coupling(graph, r)?;
                        (c, c)
                    }
                }
                CouplingChoice::Single(c) => (c, c),
                CouplingChoice::Pair { c_s, c_f } => (c_s, c_f),
            };
            if c_s <= 0.0 || c_f <= 0.0 {
                return Err(ProtocolError::InvalidArgument("coupling gains must be positive".into()));
            }
            let r0_s = covering_radius(graph, c_s)?;
            let r0_f = covering_radius(graph, c_f)?;
            let feasible = c_s * r0_s < radius_s.value() && c_f * r0_f < radius_f.value();
            Ok(SynchronizationGains {
                kind,
                k_s,
                k_f,
                p_s,
                p_f,
                weights: weights.clone(),
                coupling: Coupling::Discrete {
                    c_s,
                    c_f,
                    radius_s,
                    radius_f,
                    r0_s,
                    r0_f,
                    feasible,
                },
            })
        }
    }
}

/// Continuous composite control `u = c (K_s e_s + K_f e_f)`.
pub fn control_continuous(
    gains: &SynchronizationGains,
    e_s: &Vector,
    e_f: &Vector,
) -> ProtocolResult<Vector> {
    if gains.kind != SystemKind::Continuous {
        return Err(ProtocolError::InvalidArgument(
            "control_continuous needs continuous gains".into(),
        ));
    }
    check_error_dims(gains, e_s, e_f)?;
    let (c, _) = gains.coupling.gains();
    Ok(c * (&gains.k_s * e_s + &gains.k_f * e_f))
}

/// Discrete composite control
/// `u = (1 + d_i + beta_i)^-1 (c_s K_s e_s + c_f K_f e_f)`.
pub fn control_discrete(
    gains: &SynchronizationGains,
    graph: &CommGraph,
    i: usize,
    e_s: &Vector,
    e_f: &Vector,
) -> ProtocolResult<Vector> {
    if gains.kind != SystemKind::Discrete {
        return Err(ProtocolError::InvalidArgument(
            "control_discrete needs discrete gains".into(),
        ));
    }
    if i >= graph.n_agents {
        return Err(ProtocolError::InvalidArgument(format!("agent index {i} out of range")));
    }
    check_error_dims(gains, e_s, e_f)?;
    let (c_s, c_f) = gains.coupling.gains();
    let prefactor = 1.0 / (1.0 + graph.degree[i] + graph.pinning[i]);
    Ok(prefactor * (c_s * (&gains.k_s * e_s) + c_f * (&gains.k_f * e_f)))
}

fn check_error_dims(
    gains: &SynchronizationGains,
    e_s: &Vector,
    e_f: &Vector,
) -> ProtocolResult<()> {
    if e_s.len() != gains.k_s.ncols() || e_f.len() != gains.k_f.ncols() {
        return Err(ProtocolError::DimensionMismatch(format!(
            "error vectors have lengths {} and {}, gains expect {} and {}",
            e_s.len(),
            e_f.len(),
            gains.k_s.ncols(),
            gains.k_f.ncols()
        )));
    }
    Ok(())
}

/// Spectral abscissa or radius of `A - z B K` for a complex scalar `z`,
/// computed through the real 2n x 2n embedding when `z` is not real.
fn mode_measure(a: &Matrix, b: &Matrix, k: &Matrix, z: Complex<f64>, kind: SystemKind) -> ProtocolResult<f64> {
    let bk = b * k;
    let spectrum = if z.im == 0.0 {
        matlib::eigvals(&(a - z.re * &bk))?
    } else {
        let n = a.nrows();
        let x = a - z.re * &bk;
        let y = -z.im * &bk;
        let mut emb = Matrix::zeros(2 * n, 2 * n);
        emb.view_mut((0, 0), (n, n)).copy_from(&x);
        emb.view_mut((0, n), (n, n)).copy_from(&(-&y));
        emb.view_mut((n, 0), (n, n)).copy_from(&y);
        emb.view_mut((n, n), (n, n)).copy_from(&x);
        matlib::eigvals(&emb)?
    };
    Ok(match kind {
        SystemKind::Continuous => spectrum.max_real_part(),
        SystemKind::Discrete => spectrum.spectral_radius(),
    })
}

/// Evaluates every per-mode closed-loop certificate for the synthesized gains.
pub fn certificates(
    decomp: &ChangDecomposition,
    graph: &CommGraph,
    gains: &SynchronizationGains,
) -> ProtocolResult<Vec<Certificate>> {
    let modes = match gains.kind {
        SystemKind::Continuous => matlib::eigvals(&graph.pinned_laplacian())?,
        SystemKind::Discrete => graph.gamma_eigenvalues()?,
    };
    let (c_s, c_f) = gains.coupling.gains();
    let mut out = Vec::with_capacity(2 * modes.len());
    for &lambda in modes.values() {
        for (name, a, b, k, c) in [
            ("slow", &decomp.a_s, &decomp.b_s, &gains.k_s, c_s),
            ("fast", &decomp.a_f, &decomp.b_f, &gains.k_f, c_f),
        ] {
            let measure = mode_measure(a, b, k, c * lambda, gains.kind)?;
            let ok = match gains.kind {
                SystemKind::Continuous => measure < 0.0,
                SystemKind::Discrete => measure < 1.0,
            };
            out.push(Certificate {
                subsystem: name,
                graph_eigenvalue: lambda,
                measure,
                ok,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::decompose;
    use crate::fixtures;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn mat(rows: usize, cols: usize, data: &[f64]) -> Matrix {
        Matrix::from_row_slice(rows, cols, data)
    }

    #[test]
    fn formation_graph_matrices() {
        let g = fixtures::formation_graph();
        let expected_l = mat(3, 3, &[0.0, 0.0, 0.0, -1.0, 1.0, 0.0, -1.0, 0.0, 1.0]);
        assert_eq!(g.laplacian, expected_l);
        assert_eq!(g.degree, Vector::from_vec(vec![0.0, 1.0, 1.0]));
        assert_eq!(g.pinning, Vector::from_vec(vec![1.0, 1.0, 0.0]));
        // Laplacian rows sum to zero exactly.
        for i in 0..3 {
            assert_eq!(g.laplacian.row(i).sum(), 0.0);
        }
    }

    #[test]
    fn formation_graph_gamma_spectrum_exact() {
        let g = fixtures::formation_graph();
        let eigs = g.gamma_eigenvalues().unwrap();
        let mut re: Vec<f64> = eigs.values().iter().map(|z| z.re).collect();
        re.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((re[0] - 0.5).abs() <= 1e-12);
        assert!((re[1] - 0.5).abs() <= 1e-12);
        assert!((re[2] - 2.0 / 3.0).abs() <= 1e-12);
        assert!(eigs.values().iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn single_pinned_agent_gamma() {
        let g = build_graph(&Matrix::zeros(1, 1), &Vector::from_vec(vec![1.0])).unwrap();
        assert_eq!(g.laplacian[(0, 0)], 0.0);
        assert_eq!(g.gamma[(0, 0)], 0.5);
    }

    #[test]
    fn unreachable_follower_rejected() {
        let adjacency = mat(3, 3, &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let pinning = Vector::from_vec(vec![1.0, 0.0, 0.0]);
        let err = build_graph(&adjacency, &pinning).unwrap_err();
        assert!(matches!(err, ProtocolError::LeaderUnreachable(2)));
    }

    #[test]
    fn negative_weight_rejected() {
        let adjacency = mat(2, 2, &[0.0, -1.0, 0.0, 0.0]);
        let pinning = Vector::from_vec(vec![1.0, 1.0]);
        assert!(matches!(
            build_graph(&adjacency, &pinning),
            Err(ProtocolError::NegativeWeight { .. })
        ));
    }

    #[test]
    fn coupling_bound_examples() {
        let g = fixtures::formation_graph();
        assert_eq!(continuous_coupling_bound(&g).unwrap(), 0.5);

        let fully_pinned = build_graph(&Matrix::zeros(2, 2), &Vector::from_vec(vec![1.0, 1.0])).unwrap();
        assert_eq!(continuous_coupling_bound(&fully_pinned).unwrap(), 0.5);

        let strong = build_graph(&Matrix::zeros(2, 2), &Vector::from_vec(vec![2.0, 2.0])).unwrap();
        assert_eq!(continuous_coupling_bound(&strong).unwrap(), 0.25);
    }

    #[test]
    fn continuous_gains_match_references() {
        let decomp = decompose(&fixtures::continuous_model()).unwrap();
        let q = Matrix::identity(2, 2);
        let r = 0.001 * Matrix::identity(2, 2);
        let (k_f, p_f) = lqr_gain_continuous(&decomp.a_f, &decomp.b_f, &q, &r).unwrap();
        let printed_kf = mat(2, 2, &[-15.0567, -31.4258, 0.0410, -0.0063]);
        for i in 0..2 {
            for j in 0..2 {
                let rel = ((k_f[(i, j)] - printed_kf[(i, j)]) / printed_kf[(i, j)]).abs();
                assert!(rel < 1e-2, "K_f[{i}][{j}] rel dev {rel}");
            }
        }
        assert!((&p_f - p_f.transpose()).norm() <= 1e-12 * p_f.norm());
        assert!(p_f.clone().symmetric_eigen().eigenvalues.iter().all(|&l| l > 0.0));

        let (k_s, _) = lqr_gain_continuous(&decomp.a_s, &decomp.b_s, &q, &r).unwrap();
        let printed_ks = mat(2, 2, &[28.8604, -28.2527, 7.2949, 0.9046]);
        for i in 0..2 {
            for j in 0..2 {
                let rel = ((k_s[(i, j)] - printed_ks[(i, j)]) / printed_ks[(i, j)]).abs();
                assert!(rel < 1e-2, "K_s[{i}][{j}] rel dev {rel}");
            }
        }
    }

    #[test]
    fn lqr_identity_plant() {
        let (k, p) = lqr_gain_continuous(
            &Matrix::zeros(2, 2),
            &Matrix::identity(2, 2),
            &Matrix::identity(2, 2),
            &Matrix::identity(2, 2),
        )
        .unwrap();
        assert_relative_eq!(p, Matrix::identity(2, 2), epsilon = 1e-10);
        assert_relative_eq!(k, Matrix::identity(2, 2), epsilon = 1e-10);
    }

    #[test]
    fn discrete_gains_match_references() {
        let decomp = decompose(&fixtures::discrete_model()).unwrap();
        let q = Matrix::identity(2, 2);
        let (k_f, _) = gain_discrete(&decomp.a_f, &decomp.b_f, &q).unwrap();
        let printed_kf = mat(2, 2, &[0.1801, -0.0917, 6.9349, 11.8009]);
        let rel = (&k_f - &printed_kf).norm() / printed_kf.norm();
        assert!(rel < 1e-2, "K_f norm-relative dev {rel}");

        let (k_s, _) = gain_discrete(&decomp.a_s, &decomp.b_s, &q).unwrap();
        let printed_ks = mat(2, 2, &[-0.0289, -0.3882, 44.5447, -1.9819]);
        let rel = (&k_s - &printed_ks).norm() / printed_ks.norm();
        assert!(rel < 1e-2, "K_s norm-relative dev {rel}");
    }

    #[test]
    fn discrete_gain_deadbeat_identity_input() {
        let a = mat(2, 2, &[0.4, -1.3, 2.0, 0.7]);
        let (k, p) = gain_discrete(&a, &Matrix::identity(2, 2), &Matrix::identity(2, 2)).unwrap();
        assert_relative_eq!(p, Matrix::identity(2, 2), epsilon = 1e-12);
        assert_relative_eq!(k, a, epsilon = 1e-12);
    }

    #[test]
    fn stability_radii_match_references() {
        let decomp = decompose(&fixtures::discrete_model()).unwrap();
        let q = Matrix::identity(2, 2);
        let (_, p_f) = gain_discrete(&decomp.a_f, &decomp.b_f, &q).unwrap();
        let r_f = stability_radius_discrete(&decomp.a_f, &decomp.b_f, &p_f, &q).unwrap();
        assert!((r_f.value() - 1.001).abs() <= 1e-3, "r_f = {}", r_f.value());

        let (_, p_s) = gain_discrete(&decomp.a_s, &decomp.b_s, &q).unwrap();
        let r_s = stability_radius_discrete(&decomp.a_s, &decomp.b_s, &p_s, &q).unwrap();
        assert!((r_s.value() - 0.9981).abs() <= 1e-3, "r_s = {}", r_s.value());
    }

    #[test]
    fn zero_dynamics_radius_unbounded() {
        let r = stability_radius_discrete(
            &Matrix::zeros(2, 2),
            &Matrix::identity(2, 2),
            &Matrix::identity(2, 2),
            &Matrix::identity(2, 2),
        )
        .unwrap();
        assert_eq!(r, StabilityRadius::Unbounded);
    }

    #[test]
    fn covering_radius_examples() {
        let g = fixtures::formation_graph();
        let r0 = covering_radius(&g, 12.0 / 7.0).unwrap();
        assert!((r0 - 1.0 / 12.0).abs() <= 1e-12, "r0 = {r0}");
        assert!((covering_radius(&g, 1.0).unwrap() - 0.5).abs() <= 1e-12);

        let single = build_graph(&Matrix::zeros(1, 1), &Vector::from_vec(vec![1.0])).unwrap();
        // Sole eigenvalue 1/2: circle centered at it has radius zero.
        assert!(covering_radius(&single, 2.0).unwrap() <= 1e-15);
    }

    #[test]
    fn coupling_selection_matches_crossover() {
        let g = fixtures::formation_graph();
        let c = select_discrete_coupling(&g, 0.9981).unwrap();
        assert!((c - 12.0 / 7.0).abs() < 1e-6, "c = {c}");
        assert!(c * covering_radius(&g, c).unwrap() < 0.9981);
    }

    #[test]
    fn coupling_selection_point_spectrum() {
        let single = build_graph(&Matrix::zeros(1, 1), &Vector::from_vec(vec![1.0])).unwrap();
        let c = select_discrete_coupling(&single, 0.5).unwrap();
        assert!((c - 2.0).abs() < 1e-6, "c = {c}");
        assert!(c * covering_radius(&single, c).unwrap() < 1e-9);
    }

    #[test]
    fn coupling_selection_infeasible_radius() {
        let g = fixtures::formation_graph();
        // Brute-force floor of c*r0(c) for the spectrum {1/2, 1/2, 2/3} is
        // 1/7, so a radius of 1e-9 cannot be met.
        let err = select_discrete_coupling(&g, 1e-9).unwrap_err();
        assert!(matches!(err, ProtocolError::Infeasible { .. }));
    }

    #[test]
    fn neighborhood_error_cases() {
        let g = fixtures::formation_graph();
        let same = vec![Vector::from_vec(vec![1.0, 2.0]); 3];
        let leader = Vector::from_vec(vec![1.0, 2.0]);
        let e = neighborhood_error(&g, &same, &leader, 1).unwrap();
        assert_eq!(e.e, Vector::zeros(2));

        // Agent 3 (index 2): only the incoming edge from agent 1 counts.
        let states = vec![
            Vector::from_vec(vec![1.0, 0.0]),
            Vector::from_vec(vec![9.0, 9.0]),
            Vector::from_vec(vec![0.0, 0.0]),
        ];
        let e = neighborhood_error(&g, &states, &leader, 2).unwrap();
        assert_eq!(e.e, Vector::from_vec(vec![1.0, 0.0]));

        // Agent 1 (index 0): pinning term only.
        let states = vec![
            Vector::from_vec(vec![1.0, 1.0]),
            Vector::from_vec(vec![5.0, 5.0]),
            Vector::from_vec(vec![7.0, 7.0]),
        ];
        let leader = Vector::from_vec(vec![2.0, 2.0]);
        let e = neighborhood_error(&g, &states, &leader, 0).unwrap();
        assert_eq!(e.e, Vector::from_vec(vec![1.0, 1.0]));
    }

    fn identity_gains(kind: SystemKind, c: f64) -> SynchronizationGains {
        SynchronizationGains {
            kind,
            k_s: Matrix::identity(2, 2),
            k_f: Matrix::identity(2, 2),
            p_s: Matrix::identity(2, 2),
            p_f: Matrix::identity(2, 2),
            weights: SynthesisWeights::defaults(kind, 2, 2, 2),
            coupling: match kind {
                SystemKind::Continuous => Coupling::Continuous {
                    c,
                    c_min: c,
                    feasible: true,
                },
                SystemKind::Discrete => Coupling::Discrete {
                    c_s: c,
                    c_f: c,
                    radius_s: StabilityRadius::Unbounded,
                    radius_f: StabilityRadius::Unbounded,
                    r0_s: 0.0,
                    r0_f: 0.0,
                    feasible: true,
                },
            },
        }
    }

    #[test]
    fn control_continuous_cases() {
        let gains = identity_gains(SystemKind::Continuous, 0.5);
        let zero = Vector::zeros(2);
        assert_eq!(control_continuous(&gains, &zero, &zero).unwrap(), zero);
        let u = control_continuous(
            &gains,
            &Vector::from_vec(vec![1.0, 0.0]),
            &Vector::from_vec(vec![0.0, 2.0]),
        )
        .unwrap();
        assert_eq!(u, Vector::from_vec(vec![0.5, 1.0]));
    }

    #[test]
    fn control_continuous_printed_gain_product() {
        // With the printed gain tables and unit errors the composite control
        // is 0.5 (K_s + K_f) [1, 1]'.
        let mut gains = identity_gains(SystemKind::Continuous, 0.5);
        gains.k_s = mat(2, 2, &[28.8604, -28.2527, 7.2949, 0.9046]);
        gains.k_f = mat(2, 2, &[-15.0567, -31.4258, 0.0410, -0.0063]);
        let ones = Vector::from_vec(vec![1.0, 1.0]);
        let u = control_continuous(&gains, &ones, &ones).unwrap();
        let expected = 0.5 * (&gains.k_s + &gains.k_f) * &ones;
        assert_relative_eq!(u, expected, epsilon = 1e-14);
        assert!((u[0] - (-22.9374)).abs() < 1e-3);
        assert!((u[1] - 4.1171).abs() < 1e-3);
    }

    #[test]
    fn control_discrete_prefactors() {
        let g = fixtures::formation_graph();
        let gains = identity_gains(SystemKind::Discrete, 1.0);
        let zero = Vector::zeros(2);
        assert_eq!(control_discrete(&gains, &g, 0, &zero, &zero).unwrap(), zero);
        let e = Vector::from_vec(vec![1.0, 0.0]);
        // Agent 2 (index 1): d=1, beta=1 -> prefactor 1/3.
        let u = control_discrete(&gains, &g, 1, &e, &zero).unwrap();
        assert_relative_eq!(u[0], 1.0 / 3.0, epsilon = 1e-15);
        // Agent 3 (index 2): d=1, beta=0 -> prefactor 1/2.
        let u = control_discrete(&gains, &g, 2, &e, &zero).unwrap();
        assert_relative_eq!(u[0], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn synthesize_continuous_fixture() {
        let decomp = decompose(&fixtures::continuous_model()).unwrap();
        let g = fixtures::formation_graph();
        let w = SynthesisWeights::defaults(SystemKind::Continuous, 2, 2, 2);
        let gains = synthesize(SystemKind::Continuous, &decomp, &g, &w, CouplingChoice::Auto).unwrap();
        match gains.coupling {
            Coupling::Continuous { c, c_min, feasible } => {
                assert_eq!(c, 0.5);
                assert_eq!(c_min, 0.5);
                assert!(feasible);
            }
            _ => panic!("wrong coupling kind"),
        }
        let certs = certificates(&decomp, &g, &gains).unwrap();
        assert_eq!(certs.len(), 6);
        assert!(certs.iter().all(|c| c.ok), "{certs:?}");
    }

    #[test]
    fn synthesize_discrete_fixture_accepts_crossover_gain() {
        let decomp = decompose(&fixtures::discrete_model()).unwrap();
        let g = fixtures::formation_graph();
        let w = SynthesisWeights::defaults(SystemKind::Discrete, 2, 2, 2);
        let gains = synthesize(
            SystemKind::Discrete,
            &decomp,
            &g,
            &w,
            CouplingChoice::Single(12.0 / 7.0),
        )
        .unwrap();
        match &gains.coupling {
            Coupling::Discrete {
                r0_s, feasible, ..
            } => {
                assert!((r0_s - 1.0 / 12.0).abs() <= 1e-12);
                assert!(feasible);
            }
            _ => panic!("wrong coupling kind"),
        }
        let certs = certificates(&decomp, &g, &gains).unwrap();
        assert!(certs.iter().all(|c| c.ok && c.measure < 1.0), "{certs:?}");
    }

    proptest! {
        #[test]
        fn gamma_spectrum_inside_covering_circle(
            n in 1usize..=5,
            weights in proptest::collection::vec(0.0f64..2.0, 25),
            pins in proptest::collection::vec(0.0f64..2.0, 5),
            c in 0.05f64..20.0,
        ) {
            let adjacency = Matrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { weights[i * n + j] });
            let mut pinning = Vector::from_iterator(n, pins.iter().take(n).copied());
            pinning[0] = pinning[0].max(0.5);
            prop_assume!(build_graph(&adjacency, &pinning).is_ok());
            let g = build_graph(&adjacency, &pinning).unwrap();
            let r0 = covering_radius(&g, c).unwrap();
            let center = Complex::new(1.0 / c, 0.0);
            for l in g.gamma_eigenvalues().unwrap().values() {
                prop_assert!((l - center).norm() <= r0 + 1e-12);
            }
        }

        #[test]
        fn controls_are_linear_in_errors(alpha in -5.0f64..5.0, e in proptest::collection::vec(-2.0f64..2.0, 4)) {
            let gains = identity_gains(SystemKind::Continuous, 0.5);
            let e_s = Vector::from_vec(vec![e[0], e[1]]);
            let e_f = Vector::from_vec(vec![e[2], e[3]]);
            let u1 = control_continuous(&gains, &(alpha * &e_s), &(alpha * &e_f)).unwrap();
            let u2 = alpha * control_continuous(&gains, &e_s, &e_f).unwrap();
            prop_assert!((u1 - u2).norm() <= 1e-12);
        }
    }
}
