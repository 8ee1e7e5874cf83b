//! End-to-end regression checks against the bundled aircraft reference
//! results. Each criterion reports one pass/fail row; `verify-paper`
//! aggregates them.

use super::output;
use crate::decompose::{
    decompose, solve_m, PartitionedLinearModel, SystemKind, NEWTON_MAX_ITER, NEWTON_TOL,
};
use crate::matlib::{Matrix, Vector};
use crate::protocol::{
    certificates, continuous_coupling_bound, covering_radius, gain_discrete, lqr_gain_continuous,
    stability_radius_discrete, synthesize, CommGraph, CouplingChoice, SynthesisWeights,
};
use crate::sim::{compute_metrics, simulate_continuous, simulate_discrete, Horizon, Scenario};

#[derive(Debug, Clone)]
pub struct CriterionOutcome {
    pub index: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

struct Checks {
    failures: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Self { failures: Vec::new() }
    }

    fn require(&mut self, ok: bool, msg: String) {
        if !ok {
            self.failures.push(msg);
        }
    }
}

fn run_criterion(
    index: usize,
    name: &'static str,
    body: impl FnOnce(&mut Checks) -> Result<(), String>,
) -> CriterionOutcome {
    let mut checks = Checks::new();
    let result = body(&mut checks);
    let (passed, detail) = match result {
        Err(e) => (false, e),
        Ok(()) if checks.failures.is_empty() => (true, "ok".to_string()),
        Ok(()) => (false, checks.failures.join("; ")),
    };
    CriterionOutcome {
        index,
        name,
        passed,
        detail,
    }
}

fn mat(rows: usize, cols: usize, data: &[f64]) -> Matrix {
    Matrix::from_row_slice(rows, cols, data)
}

/// Worst absolute elementwise deviation with its location.
fn worst_entry(a: &Matrix, b: &Matrix) -> (usize, usize, f64) {
    let mut worst = (0, 0, 0.0);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let d = (a[(i, j)] - b[(i, j)]).abs();
            if d > worst.2 {
                worst = (i, j, d);
            }
        }
    }
    worst
}

fn check_elementwise(checks: &mut Checks, label: &str, got: &Matrix, reference: &Matrix, tol: f64) {
    let (i, j, dev) = worst_entry(got, reference);
    checks.require(
        dev <= tol,
        format!(
            "{label}[{i}][{j}] = {:.6} vs reference {:.6} (|dev| = {dev:.2e} > {tol:.0e})",
            got[(i, j)],
            reference[(i, j)]
        ),
    );
}

// Reference tables for the continuous experiment.
fn ref_m_continuous() -> Matrix {
    mat(2, 2, &[0.0992, -0.0334, -2.2051, -0.0356])
}
fn ref_n() -> Matrix {
    mat(2, 2, &[0.0221, 0.0190, 0.9225, -0.1621])
}
fn ref_af_continuous() -> Matrix {
    mat(2, 2, &[-0.8401, 0.9989, -4.7974, -0.4912])
}
fn ref_bf_continuous() -> Matrix {
    mat(2, 2, &[-0.1101, 6.9565e-5, -8.6980, -0.0016])
}
fn ref_bs_continuous() -> Matrix {
    mat(2, 2, &[0.1666, 0.0008, -1.3085, -0.0003])
}
fn ref_kf_continuous() -> Matrix {
    mat(2, 2, &[-15.0567, -31.4258, 0.0410, -0.0063])
}
fn ref_ks_continuous() -> Matrix {
    mat(2, 2, &[28.8604, -28.2527, 7.2949, 0.9046])
}

// Reference tables for the discrete experiment.
fn ref_m_discrete() -> Matrix {
    mat(2, 2, &[0.0938, -0.0334, -2.2051, -0.0356])
}
fn ref_af_discrete() -> Matrix {
    mat(2, 2, &[-0.3286, 0.1927, -0.9253, -0.2613])
}
fn ref_as_discrete() -> Matrix {
    mat(2, 2, &[0.9823, -0.0799, 0.0729, 0.9982])
}
fn ref_bf_discrete() -> Matrix {
    mat(2, 2, &[-1.8885, 0.0016, -3.2983, -0.0478])
}
fn ref_kf_discrete() -> Matrix {
    mat(2, 2, &[0.1801, -0.0917, 6.9349, 11.8009])
}
fn ref_ks_discrete() -> Matrix {
    mat(2, 2, &[-0.0289, -0.3882, 44.5447, -1.9819])
}

pub fn criterion_1_continuous_decomposition(model: &PartitionedLinearModel) -> CriterionOutcome {
    run_criterion(1, "continuous decomposition regression", |checks| {
        let d = decompose(model).map_err(|e| e.to_string())?;
        check_elementwise(checks, "M", &d.m, &ref_m_continuous(), 5e-4);
        check_elementwise(checks, "N", &d.n, &ref_n(), 5e-4);
        check_elementwise(checks, "A_f", &d.a_f, &ref_af_continuous(), 5e-4);
        check_elementwise(checks, "B_f", &d.b_f, &ref_bf_continuous(), 5e-4);
        check_elementwise(checks, "B_s", &d.b_s, &ref_bs_continuous(), 5e-4);
        // First row of A_s against the reference table; the full matrix
        // against the direct formula, recomputed here.
        checks.require(
            (d.a_s[(0, 0)] - (-0.0149)).abs() <= 5e-4 && (d.a_s[(0, 1)] - (-0.0805)).abs() <= 5e-4,
            format!("A_s first row [{:.6}, {:.6}] vs reference [-0.0149, -0.0805]", d.a_s[(0, 0)], d.a_s[(0, 1)]),
        );
        let oracle = &model.a1 - &model.a2 * &d.m;
        let dev = (&d.a_s - &oracle).norm();
        checks.require(
            dev <= 1e-10,
            format!("A_s deviates from A1 - A2 M by {dev:.2e} > 1e-10"),
        );
        Ok(())
    })
}

pub fn criterion_2_discrete_decomposition(model: &PartitionedLinearModel) -> CriterionOutcome {
    run_criterion(2, "discrete decomposition regression", |checks| {
        let d = decompose(model).map_err(|e| e.to_string())?;
        check_elementwise(checks, "M", &d.m, &ref_m_discrete(), 5e-4);
        check_elementwise(checks, "N", &d.n, &ref_n(), 5e-4);
        check_elementwise(checks, "A_f", &d.a_f, &ref_af_discrete(), 5e-4);
        check_elementwise(checks, "A_s", &d.a_s, &ref_as_discrete(), 5e-4);
        check_elementwise(checks, "B_f", &d.b_f, &ref_bf_discrete(), 7e-3);
        let oracle = &model.b1 - model.epsilon * &d.n * &d.b_f;
        let dev = (&d.b_s - &oracle).norm();
        checks.require(
            dev <= 1e-10,
            format!("B_s deviates from B1 - eps N B_f by {dev:.2e} > 1e-10"),
        );
        Ok(())
    })
}

pub fn criterion_3_spectrum_conservation(
    continuous: &PartitionedLinearModel,
    discrete: &PartitionedLinearModel,
) -> CriterionOutcome {
    run_criterion(3, "spectrum conservation", |checks| {
        for model in [continuous, discrete] {
            let d = decompose(model).map_err(|e| e.to_string())?;
            let report = crate::decompose::verify_decomposition(model, &d, 1e-6, 1e-10)
                .map_err(|e| e.to_string())?;
            checks.require(
                report.max_eigen_gap <= 1e-6,
                format!(
                    "{} matched eigenvalue gap {:.2e} > 1e-6",
                    model.kind.as_str(),
                    report.max_eigen_gap
                ),
            );
        }
        Ok(())
    })
}

pub fn criterion_4_gain_regression(
    continuous: &PartitionedLinearModel,
    discrete: &PartitionedLinearModel,
) -> CriterionOutcome {
    run_criterion(4, "gain regression", |checks| {
        let dc = decompose(continuous).map_err(|e| e.to_string())?;
        let q = Matrix::identity(2, 2);
        let r = 0.001 * Matrix::identity(2, 2);
        let (k_s, _) = lqr_gain_continuous(&dc.a_s, &dc.b_s, &q, &r).map_err(|e| e.to_string())?;
        let (k_f, _) = lqr_gain_continuous(&dc.a_f, &dc.b_f, &q, &r).map_err(|e| e.to_string())?;
        for (label, got, reference) in [
            ("K_s", &k_s, ref_ks_continuous()),
            ("K_f", &k_f, ref_kf_continuous()),
        ] {
            for i in 0..2 {
                for j in 0..2 {
                    let rel = ((got[(i, j)] - reference[(i, j)]) / reference[(i, j)]).abs();
                    checks.require(
                        rel <= 1e-2,
                        format!("continuous {label}[{i}][{j}] relative deviation {rel:.2e} > 1e-2"),
                    );
                }
            }
        }

        let dd = decompose(discrete).map_err(|e| e.to_string())?;
        let (kd_s, _) = gain_discrete(&dd.a_s, &dd.b_s, &q).map_err(|e| e.to_string())?;
        let (kd_f, _) = gain_discrete(&dd.a_f, &dd.b_f, &q).map_err(|e| e.to_string())?;
        for (label, got, reference) in [
            ("K_s", &kd_s, ref_ks_discrete()),
            ("K_f", &kd_f, ref_kf_discrete()),
        ] {
            let rel = (got.clone() - &reference).norm() / reference.norm();
            checks.require(
                rel <= 1e-2,
                format!("discrete {label} relative deviation {rel:.2e} > 1e-2"),
            );
        }
        Ok(())
    })
}

pub fn criterion_5_graph_coupling(
    graph: &CommGraph,
    discrete: &PartitionedLinearModel,
) -> CriterionOutcome {
    run_criterion(5, "graph and coupling regression", |checks| {
        let lb = crate::matlib::eigvals(&graph.pinned_laplacian()).map_err(|e| e.to_string())?;
        let mut re: Vec<f64> = lb.values().iter().map(|z| z.re).collect();
        re.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (got, want) in re.iter().zip([1.0, 1.0, 2.0]) {
            checks.require(
                (got - want).abs() <= 1e-12,
                format!("eig(L+B) {got} vs {want} beyond 1e-12"),
            );
        }
        let c_min = continuous_coupling_bound(graph).map_err(|e| e.to_string())?;
        checks.require((c_min - 0.5).abs() <= 1e-15, format!("c_min = {c_min} is not 0.5"));

        let gamma = graph.gamma_eigenvalues().map_err(|e| e.to_string())?;
        let mut gre: Vec<f64> = gamma.values().iter().map(|z| z.re).collect();
        gre.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (got, want) in gre.iter().zip([0.5, 0.5, 2.0 / 3.0]) {
            checks.require(
                (got - want).abs() <= 1e-12,
                format!("eig(Gamma) {got} vs {want} beyond 1e-12"),
            );
        }

        let d = decompose(discrete).map_err(|e| e.to_string())?;
        let q = Matrix::identity(2, 2);
        let (_, p_f) = gain_discrete(&d.a_f, &d.b_f, &q).map_err(|e| e.to_string())?;
        let (_, p_s) = gain_discrete(&d.a_s, &d.b_s, &q).map_err(|e| e.to_string())?;
        let r_f = stability_radius_discrete(&d.a_f, &d.b_f, &p_f, &q)
            .map_err(|e| e.to_string())?
            .value();
        let r_s = stability_radius_discrete(&d.a_s, &d.b_s, &p_s, &q)
            .map_err(|e| e.to_string())?
            .value();
        checks.require(
            (r_f - 1.001).abs() <= 1e-3,
            format!("r_f = {r_f:.6} outside 1.001 +- 1e-3"),
        );
        checks.require(
            (r_s - 0.9981).abs() <= 1e-3,
            format!("r_s = {r_s:.6} outside 0.9981 +- 1e-3"),
        );

        let c = 12.0 / 7.0;
        let r0 = covering_radius(graph, c).map_err(|e| e.to_string())?;
        checks.require(
            (r0 - 1.0 / 12.0).abs() <= 1e-12,
            format!("covering radius {r0} vs 1/12 beyond 1e-12"),
        );
        checks.require(
            c * r0 < r_s.min(r_f),
            format!("feasibility violated: {:.4} >= {:.4}", c * r0, r_s.min(r_f)),
        );
        Ok(())
    })
}

fn continuous_scenario(
    model: &PartitionedLinearModel,
    graph: &CommGraph,
    c: f64,
    horizon_s: f64,
    step: f64,
) -> Result<Scenario, String> {
    let decomp = decompose(model).map_err(|e| e.to_string())?;
    let weights = SynthesisWeights::defaults(SystemKind::Continuous, model.n1, model.n2, model.n_inputs);
    let gains = synthesize(
        SystemKind::Continuous,
        &decomp,
        graph,
        &weights,
        CouplingChoice::Single(c),
    )
    .map_err(|e| e.to_string())?;
    let (leader, followers) = crate::fixtures::continuous_initial_states();
    Ok(Scenario {
        model: model.clone(),
        decomp,
        graph: graph.clone(),
        gains,
        leader_init: leader,
        follower_inits: followers,
        horizon: Horizon::Seconds(horizon_s),
        step: Some(step),
        settle_threshold: 1e-2,
    })
}

fn discrete_scenario(
    model: &PartitionedLinearModel,
    graph: &CommGraph,
    theta_offset: f64,
    steps: usize,
) -> Result<Scenario, String> {
    let decomp = decompose(model).map_err(|e| e.to_string())?;
    let weights = SynthesisWeights::defaults(SystemKind::Discrete, model.n1, model.n2, model.n_inputs);
    let gains = synthesize(
        SystemKind::Discrete,
        &decomp,
        graph,
        &weights,
        CouplingChoice::Pair {
            c_s: 12.0 / 7.0,
            c_f: 12.0 / 7.0,
        },
    )
    .map_err(|e| e.to_string())?;
    let leader = Vector::from_vec(vec![0.0, 1.0, 0.0, 0.5]);
    let mut follower = leader.clone();
    follower[1] += theta_offset;
    Ok(Scenario {
        model: model.clone(),
        decomp,
        graph: graph.clone(),
        gains,
        leader_init: leader,
        follower_inits: vec![follower.clone(), follower.clone(), follower],
        horizon: Horizon::Steps(steps),
        step: None,
        settle_threshold: 1e-3,
    })
}

pub fn criterion_6_continuous_synchronization(
    model: &PartitionedLinearModel,
    graph: &CommGraph,
) -> CriterionOutcome {
    run_criterion(6, "continuous synchronization", |checks| {
        let scenario = continuous_scenario(model, graph, 0.5, 60.0, 0.01)?;
        let log = simulate_continuous(&scenario).map_err(|e| e.to_string())?;
        for (agent, errs) in log.error_norms.iter().enumerate() {
            let final_err = *errs.last().unwrap();
            let peak = errs.iter().fold(0.0f64, |a, &b| a.max(b));
            checks.require(
                final_err <= 1e-2,
                format!("agent {} final error {final_err:.4e} > 1e-2 at 60 s", agent + 1),
            );
            checks.require(
                final_err < 0.01 * peak,
                format!(
                    "agent {} error at 60 s is {:.2}% of its peak {peak:.3} (needs < 1%)",
                    agent + 1,
                    100.0 * final_err / peak
                ),
            );
        }
        Ok(())
    })
}

pub fn criterion_7_discrete_synchronization(
    model: &PartitionedLinearModel,
    graph: &CommGraph,
) -> CriterionOutcome {
    run_criterion(7, "discrete synchronization", |checks| {
        let scenario = discrete_scenario(model, graph, 0.1, 100)?;
        let log = simulate_discrete(&scenario).map_err(|e| e.to_string())?;
        let metrics = compute_metrics(&log, 1e-3);
        for (agent, final_err) in metrics.final_error.iter().enumerate() {
            checks.require(
                *final_err <= 1e-3,
                format!(
                    "agent {} error {final_err:.4e} > 1e-3 after 100 steps",
                    agent + 1
                ),
            );
        }
        let certs = certificates(&scenario.decomp, graph, &scenario.gains).map_err(|e| e.to_string())?;
        let worst = certs.iter().map(|c| c.measure).fold(0.0f64, f64::max);
        checks.require(
            certs.iter().all(|c| c.ok),
            format!("a per-mode spectral radius reaches {worst:.4} >= 1"),
        );
        Ok(())
    })
}

pub fn criterion_8_invariants(
    continuous: &PartitionedLinearModel,
    discrete: &PartitionedLinearModel,
    graph: &CommGraph,
) -> CriterionOutcome {
    run_criterion(8, "invariant suite", |checks| {
        // Manifold invariance, continuous.
        let mut scenario = continuous_scenario(continuous, graph, 0.5, 2.0, 0.01)?;
        scenario.follower_inits = vec![scenario.leader_init.clone(); 3];
        let scale = 1.0 + scenario.leader_init.amax();
        let log = simulate_continuous(&scenario).map_err(|e| e.to_string())?;
        let worst = log
            .error_norms
            .iter()
            .flat_map(|e| e.iter())
            .fold(0.0f64, |a, &b| a.max(b));
        checks.require(
            worst <= 1e-12 * scale,
            format!("continuous manifold error {worst:.2e} > 1e-12 * scale"),
        );

        // Manifold invariance, discrete (identical initial states).
        let scenario_d = discrete_scenario(discrete, graph, 0.0, 100)?;
        let log_d = simulate_discrete(&scenario_d).map_err(|e| e.to_string())?;
        let worst_d = log_d
            .error_norms
            .iter()
            .flat_map(|e| e.iter())
            .fold(0.0f64, |a, &b| a.max(b));
        checks.require(
            worst_d <= 1e-12 * scale,
            format!("discrete manifold error {worst_d:.2e} > 1e-12 * scale"),
        );

        // Linearity under initial-state scaling.
        let alpha = -2.5;
        let mut base = continuous_scenario(continuous, graph, 0.5, 1.0, 0.01)?;
        let log_base = simulate_continuous(&base).map_err(|e| e.to_string())?;
        base.leader_init *= alpha;
        for f in &mut base.follower_inits {
            *f *= alpha;
        }
        let log_scaled = simulate_continuous(&base).map_err(|e| e.to_string())?;
        let mut lin_dev = 0.0f64;
        for k in 0..log_base.times.len() {
            for i in 0..3 {
                let want = alpha * &log_base.follower_states[i][k];
                let dev = (&log_scaled.follower_states[i][k] - &want).amax()
                    / want.amax().max(1.0);
                lin_dev = lin_dev.max(dev);
            }
        }
        checks.require(
            lin_dev <= 1e-10,
            format!("linearity deviation {lin_dev:.2e} > 1e-10"),
        );

        // RK4 order on the single pinned follower.
        let single_graph = crate::protocol::build_graph(
            &Matrix::zeros(1, 1),
            &Vector::from_vec(vec![1.0]),
        )
        .map_err(|e| e.to_string())?;
        let decomp = decompose(continuous).map_err(|e| e.to_string())?;
        let weights =
            SynthesisWeights::defaults(SystemKind::Continuous, 2, 2, continuous.n_inputs);
        let gains = synthesize(
            SystemKind::Continuous,
            &decomp,
            &single_graph,
            &weights,
            CouplingChoice::Single(0.5),
        )
        .map_err(|e| e.to_string())?;
        let (leader, followers) = crate::fixtures::continuous_initial_states();
        let mut single = Scenario {
            model: continuous.clone(),
            decomp,
            graph: single_graph,
            gains,
            leader_init: leader,
            follower_inits: vec![followers[0].clone()],
            horizon: Horizon::Seconds(10.0),
            step: Some(0.01),
            settle_threshold: 1e-2,
        };
        let run = |s: &Scenario| -> Result<Vector, String> {
            Ok(simulate_continuous(s)
                .map_err(|e| e.to_string())?
                .follower_states[0]
                .last()
                .unwrap()
                .clone())
        };
        let xh = run(&single)?;
        single.step = Some(0.005);
        let xh2 = run(&single)?;
        single.step = Some(0.0025);
        let xh4 = run(&single)?;
        let factor = (&xh - &xh2).amax() / (&xh2 - &xh4).amax();
        checks.require(
            (12.0..=20.0).contains(&factor),
            format!("RK4 order factor {factor:.2} outside [12, 20]"),
        );

        // Newton convergence on both fixtures.
        for model in [continuous, discrete] {
            let (_, iterations, residual) =
                solve_m(model, NEWTON_TOL, NEWTON_MAX_ITER).map_err(|e| e.to_string())?;
            checks.require(
                iterations <= 20 && residual <= 1e-12,
                format!(
                    "{} Newton took {iterations} iterations to residual {residual:.2e}",
                    model.kind.as_str()
                ),
            );
        }

        // Transform round trip.
        for model in [continuous, discrete] {
            let d = decompose(model).map_err(|e| e.to_string())?;
            let x1 = Vector::from_vec(vec![1.3, -0.7]);
            let x2 = Vector::from_vec(vec![0.2, 2.1]);
            let (xs, xf) = crate::sim::transform_states(&d, &x1, &x2).map_err(|e| e.to_string())?;
            let (y1, y2) = crate::sim::inverse_transform(&d, &xs, &xf).map_err(|e| e.to_string())?;
            let dev = (&y1 - &x1).amax().max((&y2 - &x2).amax());
            checks.require(
                dev <= 1e-12 * 2.1,
                format!("{} transform round trip off by {dev:.2e}", model.kind.as_str()),
            );
        }

        // Determinism: identical CSV bytes across two fresh runs.
        let scenario = continuous_scenario(continuous, graph, 0.5, 5.0, 0.01)?;
        let csv_a = output::trajectory_csv(
            2,
            2,
            2,
            &simulate_continuous(&scenario).map_err(|e| e.to_string())?,
        );
        let csv_b = output::trajectory_csv(
            2,
            2,
            2,
            &simulate_continuous(&scenario).map_err(|e| e.to_string())?,
        );
        checks.require(csv_a == csv_b, "trajectory CSV differs between runs".into());
        Ok(())
    })
}

/// Runs every criterion against the given fixture set.
pub fn run_all(
    continuous: &PartitionedLinearModel,
    discrete: &PartitionedLinearModel,
    graph: &CommGraph,
) -> Vec<CriterionOutcome> {
    vec![
        criterion_1_continuous_decomposition(continuous),
        criterion_2_discrete_decomposition(discrete),
        criterion_3_spectrum_conservation(continuous, discrete),
        criterion_4_gain_regression(continuous, discrete),
        criterion_5_graph_coupling(graph, discrete),
        criterion_6_continuous_synchronization(continuous, graph),
        criterion_7_discrete_synchronization(discrete, graph),
        criterion_8_invariants(continuous, discrete, graph),
    ]
}

/// Runs every criterion against the compiled-in fixtures.
pub fn run_all_bundled() -> Vec<CriterionOutcome> {
    run_all(
        &crate::fixtures::continuous_model(),
        &crate::fixtures::discrete_model(),
        &crate::fixtures::formation_graph(),
    )
}
