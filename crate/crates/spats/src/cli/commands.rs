//! Implementations of the four subcommands.

use super::docs::{
    CouplingSpec, GraphDocument, ModelDocument, ScenarioDocument, WeightsDocument,
};
use super::{output, verify, CliError};
use crate::decompose::{self, NEWTON_MAX_ITER, NEWTON_TOL};
use crate::protocol;
use crate::sim;
use std::path::Path;
use std::time::Instant;

fn newton_tolerance() -> Result<f64, CliError> {
    Ok(super::tolerance_from_env()?.unwrap_or(NEWTON_TOL))
}

fn emit(out: Option<&Path>, contents: &str) -> Result<(), CliError> {
    match out {
        Some(path) => output::atomic_write(path, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

/// `spats decompose <model.json> [--epsilon eps] [--out out.json]`
pub fn run_decompose(
    model_path: &Path,
    epsilon: Option<f64>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let doc = ModelDocument::load(model_path)?;
    let model = doc.to_model(epsilon)?;
    let tol = newton_tolerance()?;
    let decomp = decompose::decompose_with(&model, tol, NEWTON_MAX_ITER)?;
    let report = decompose::verify_decomposition(&model, &decomp, 1e-6, tol)?;
    emit(out, &output::decompose_json(&doc.name, &model, &decomp, &report))?;
    if !report.residuals_ok {
        return Err(CliError::Numeric(format!(
            "decomposition residuals exceed tolerance: residual_m = {:.3e}, residual_n = {:.3e}",
            report.residual_m, report.residual_n
        )));
    }
    if !report.spectrum_ok {
        return Err(CliError::Numeric(format!(
            "spectrum conservation failed: matched eigenvalue gap {:.3e}",
            report.max_eigen_gap
        )));
    }
    if report.time_scale_separation < 1e-6 {
        eprintln!(
            "warning: slow and fast spectra nearly touch (separation {:.2e}); the time scales are not well separated",
            report.time_scale_separation
        );
    }
    eprintln!(
        "decomposition ok: {} Newton iterations, residual_m {:.2e}, eigenvalue gap {:.2e}",
        decomp.newton_iterations, decomp.residual_m, report.max_eigen_gap
    );
    Ok(())
}

/// `spats synthesize <model.json> <graph.json> [--weights w.json]
/// [--coupling auto|value] [--out g.json]`
pub fn run_synthesize(
    model_path: &Path,
    graph_path: &Path,
    weights_path: Option<&Path>,
    coupling: &str,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let model = ModelDocument::load(model_path)?.to_model(None)?;
    let graph = GraphDocument::load(graph_path)?.to_graph()?;
    let weights_doc = match weights_path {
        Some(p) => WeightsDocument::load(p)?,
        None => WeightsDocument::default(),
    };
    let weights = weights_doc.to_weights(model.kind, model.n1, model.n2, model.n_inputs)?;
    let choice = CouplingSpec::parse_arg(coupling)?.to_choice()?;

    let tol = newton_tolerance()?;
    let decomp = decompose::decompose_with(&model, tol, NEWTON_MAX_ITER)?;
    let gains = protocol::synthesize(model.kind, &decomp, &graph, &weights, choice)?;
    let certs = protocol::certificates(&decomp, &graph, &gains)?;
    let gamma_eigs = graph.gamma_eigenvalues()?;
    emit(out, &output::gains_json(&gains, &gamma_eigs, &certs))?;

    if !gains.coupling.feasible() {
        return Err(CliError::Numeric(
            "selected coupling gain violates its admissibility bound".into(),
        ));
    }
    if certs.iter().any(|c| !c.ok) {
        return Err(CliError::Numeric(
            "a per-mode closed-loop certificate failed".into(),
        ));
    }
    eprintln!("synthesis ok: all {} certificates hold", certs.len());
    Ok(())
}

/// `spats simulate <scenario.json>`
pub fn run_simulate(scenario_path: &Path) -> Result<(), CliError> {
    let (doc, base) = ScenarioDocument::load(scenario_path)?;
    let tol = newton_tolerance()?;
    let scenario = doc.to_scenario(&base, tol)?;

    let certs = protocol::certificates(&scenario.decomp, &scenario.graph, &scenario.gains)?;
    if certs.iter().any(|c| !c.ok) {
        eprintln!(
            "warning: {} of {} per-mode closed-loop certificates failed; the protocol may not synchronize",
            certs.iter().filter(|c| !c.ok).count(),
            certs.len()
        );
    }
    if !scenario.gains.coupling.feasible() {
        eprintln!("warning: the coupling gain violates its admissibility bound");
    }

    let log = sim::simulate(&scenario)?;
    let metrics = sim::compute_metrics(&log, scenario.settle_threshold);

    let outputs = doc.outputs.clone().unwrap_or_default();
    let csv_path = outputs.csv_path.unwrap_or_else(|| "trajectory.csv".into());
    let json_path = outputs.json_path.unwrap_or_else(|| "metrics.json".into());
    let csv = output::trajectory_csv(
        scenario.model.n1,
        scenario.model.n2,
        scenario.model.n_inputs,
        &log,
    );
    output::atomic_write(Path::new(&csv_path), &csv)?;
    output::atomic_write(Path::new(&json_path), &output::metrics_json(&metrics))?;
    if outputs.plot {
        let script = output::gnuplot_script(
            &csv_path,
            scenario.model.n1,
            scenario.model.n2,
            scenario.model.n_inputs,
            scenario.graph.n_agents,
        );
        let plot_path = format!("{csv_path}.gp");
        output::atomic_write(Path::new(&plot_path), &script)?;
    }

    eprintln!(
        "simulated {} samples; final errors: {:?}",
        log.times.len(),
        metrics.final_error
    );
    if !metrics.synchronized {
        return Err(CliError::Numeric(format!(
            "followers failed the synchronization threshold {:.1e}",
            metrics.threshold
        )));
    }
    Ok(())
}

/// `spats verify-paper [--fixtures dir]`
pub fn run_verify_paper(fixtures_dir: Option<&Path>) -> Result<(), CliError> {
    let start = Instant::now();
    let outcomes = match fixtures_dir {
        None => verify::run_all_bundled(),
        Some(dir) => {
            let continuous = ModelDocument::load(&dir.join("aircraft_continuous.json"))?
                .to_model(None)?;
            let discrete = ModelDocument::load(&dir.join("aircraft_discrete.json"))?
                .to_model(None)?;
            let graph = GraphDocument::load(&dir.join("formation_graph.json"))?.to_graph()?;
            verify::run_all(&continuous, &discrete, &graph)
        }
    };
    let mut failed = Vec::new();
    for outcome in &outcomes {
        let status = if outcome.passed { "PASS" } else { "FAIL" };
        println!("criterion {} [{status}] {} — {}", outcome.index, outcome.name, outcome.detail);
        if !outcome.passed {
            failed.push(outcome.index);
        }
    }
    println!(
        "{} of {} criteria passed in {:.2} s",
        outcomes.len() - failed.len(),
        outcomes.len(),
        start.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        return Err(CliError::Numeric(format!(
            "criteria failed: {}",
            failed
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        )));
    }
    Ok(())
}
