//! Result serialization: trajectory CSV, metrics/decomposition/gains JSON,
//! gnuplot script emission, and atomic file writes.

use super::docs::matrix_to_rows;
use super::CliError;
use crate::decompose::{ChangDecomposition, DecompositionReport, PartitionedLinearModel};
use crate::matlib::ComplexSpectrum;
use crate::protocol::{Certificate, Coupling, StabilityRadius, SynchronizationGains};
use crate::sim::{ConvergenceMetrics, TrajectoryLog};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;

/// Writes via a sibling temp file and rename, so rerunning a command
/// replaces outputs atomically and byte-deterministically.
pub fn atomic_write(path: &Path, contents: &str) -> Result<(), CliError> {
    let file_name = path
        .file_name()
        .ok_or_else(|| CliError::Input(format!("bad output path {}", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", file_name.to_string_lossy()));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn spectrum_pairs(s: &ComplexSpectrum) -> Vec<[f64; 2]> {
    s.values().iter().map(|z| [z.re, z.im]).collect()
}

#[derive(Serialize)]
struct ReportJson {
    spectrum_full: Vec<[f64; 2]>,
    spectrum_union: Vec<[f64; 2]>,
    max_eigen_gap: f64,
    time_scale_separation: f64,
    spectrum_ok: bool,
    residuals_ok: bool,
    passed: bool,
}

#[derive(Serialize)]
struct DecomposeJson {
    name: String,
    kind: &'static str,
    epsilon: f64,
    #[serde(rename = "M")]
    m: Vec<Vec<f64>>,
    #[serde(rename = "N")]
    n: Vec<Vec<f64>>,
    #[serde(rename = "A_s")]
    a_s: Vec<Vec<f64>>,
    #[serde(rename = "B_s")]
    b_s: Vec<Vec<f64>>,
    #[serde(rename = "A_f")]
    a_f: Vec<Vec<f64>>,
    #[serde(rename = "B_f")]
    b_f: Vec<Vec<f64>>,
    newton_iterations: usize,
    residual_m: f64,
    residual_n: f64,
    report: ReportJson,
}

pub fn decompose_json(
    name: &str,
    model: &PartitionedLinearModel,
    decomp: &ChangDecomposition,
    report: &DecompositionReport,
) -> String {
    let payload = DecomposeJson {
        name: name.to_string(),
        kind: model.kind.as_str(),
        epsilon: model.epsilon,
        m: matrix_to_rows(&decomp.m),
        n: matrix_to_rows(&decomp.n),
        a_s: matrix_to_rows(&decomp.a_s),
        b_s: matrix_to_rows(&decomp.b_s),
        a_f: matrix_to_rows(&decomp.a_f),
        b_f: matrix_to_rows(&decomp.b_f),
        newton_iterations: decomp.newton_iterations,
        residual_m: decomp.residual_m,
        residual_n: decomp.residual_n,
        report: ReportJson {
            spectrum_full: spectrum_pairs(&report.spectrum_full),
            spectrum_union: spectrum_pairs(&report.spectrum_union),
            max_eigen_gap: report.max_eigen_gap,
            time_scale_separation: report.time_scale_separation,
            spectrum_ok: report.spectrum_ok,
            residuals_ok: report.residuals_ok,
            passed: report.passed(),
        },
    };
    serde_json::to_string_pretty(&payload).expect("serializable") + "\n"
}

#[derive(Serialize)]
struct CertificateJson {
    subsystem: &'static str,
    graph_eigenvalue: [f64; 2],
    measure: f64,
    ok: bool,
}

#[derive(Serialize)]
struct GainsJson {
    kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    c_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    c_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    c_f: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    r_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    r_f: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    r0: Option<f64>,
    feasible: bool,
    #[serde(rename = "K_s")]
    k_s: Vec<Vec<f64>>,
    #[serde(rename = "K_f")]
    k_f: Vec<Vec<f64>>,
    #[serde(rename = "P_s")]
    p_s: Vec<Vec<f64>>,
    #[serde(rename = "P_f")]
    p_f: Vec<Vec<f64>>,
    gamma_eigenvalues: Vec<[f64; 2]>,
    certificates: Vec<CertificateJson>,
}

fn radius_value(r: &StabilityRadius) -> f64 {
    r.value()
}

pub fn gains_json(
    gains: &SynchronizationGains,
    gamma_eigenvalues: &ComplexSpectrum,
    certificates: &[Certificate],
) -> String {
    let mut payload = GainsJson {
        kind: gains.kind.as_str(),
        c: None,
        c_min: None,
        c_s: None,
        c_f: None,
        r_s: None,
        r_f: None,
        r0: None,
        feasible: gains.coupling.feasible(),
        k_s: matrix_to_rows(&gains.k_s),
        k_f: matrix_to_rows(&gains.k_f),
        p_s: matrix_to_rows(&gains.p_s),
        p_f: matrix_to_rows(&gains.p_f),
        gamma_eigenvalues: spectrum_pairs(gamma_eigenvalues),
        certificates: certificates
            .iter()
            .map(|c| CertificateJson {
                subsystem: c.subsystem,
                graph_eigenvalue: [c.graph_eigenvalue.re, c.graph_eigenvalue.im],
                measure: c.measure,
                ok: c.ok,
            })
            .collect(),
    };
    match &gains.coupling {
        Coupling::Continuous { c, c_min, .. } => {
            payload.c = Some(*c);
            payload.c_min = Some(*c_min);
        }
        Coupling::Discrete {
            c_s,
            c_f,
            radius_s,
            radius_f,
            r0_s,
            ..
        } => {
            payload.c_s = Some(*c_s);
            payload.c_f = Some(*c_f);
            payload.r_s = Some(radius_value(radius_s));
            payload.r_f = Some(radius_value(radius_f));
            payload.r0 = Some(*r0_s);
        }
    }
    serde_json::to_string_pretty(&payload).expect("serializable") + "\n"
}

#[derive(Serialize)]
struct MetricsJson {
    threshold: f64,
    synchronized: bool,
    final_error: Vec<f64>,
    settling_time: Vec<Option<f64>>,
}

pub fn metrics_json(metrics: &ConvergenceMetrics) -> String {
    serde_json::to_string_pretty(&MetricsJson {
        threshold: metrics.threshold,
        synchronized: metrics.synchronized,
        final_error: metrics.final_error.clone(),
        settling_time: metrics.settling_time.clone(),
    })
    .expect("serializable")
        + "\n"
}

/// Trajectory CSV with header
/// `t,agent,x1_1..x1_n1,x2_1..x2_n2,u_1..u_m,err_inf`; agent 0 is the leader
/// (zero controls, zero error). Floats print in shortest round-trip form.
pub fn trajectory_csv(n1: usize, n2: usize, m: usize, log: &TrajectoryLog) -> String {
    let mut out = String::new();
    out.push_str("t,agent");
    for i in 1..=n1 {
        let _ = write!(out, ",x1_{i}");
    }
    for i in 1..=n2 {
        let _ = write!(out, ",x2_{i}");
    }
    for i in 1..=m {
        let _ = write!(out, ",u_{i}");
    }
    out.push_str(",err_inf\n");
    let n_agents = log.follower_states.len();
    for (k, &t) in log.times.iter().enumerate() {
        let _ = write!(out, "{t},0");
        for v in log.leader_states[k].iter() {
            let _ = write!(out, ",{v}");
        }
        for _ in 0..m {
            out.push_str(",0");
        }
        out.push_str(",0\n");
        for agent in 0..n_agents {
            let _ = write!(out, "{t},{}", agent + 1);
            for v in log.follower_states[agent][k].iter() {
                let _ = write!(out, ",{v}");
            }
            for v in log.controls[agent][k].iter() {
                let _ = write!(out, ",{v}");
            }
            let _ = writeln!(out, ",{}", log.error_norms[agent][k]);
        }
    }
    out
}

/// Self-contained gnuplot script plotting per-agent tracking errors and two
/// attitude-like state components from the CSV.
pub fn gnuplot_script(csv_path: &str, n1: usize, n2: usize, m: usize, n_agents: usize) -> String {
    // Column layout: 1 = t, 2 = agent, then n1 slow states, n2 fast states,
    // m controls, err_inf.
    let theta_col = if n1 >= 2 { 4 } else { 3 };
    let alpha_col = 2 + n1 + if n2 >= 2 { 2 } else { 1 };
    let err_col = 2 + n1 + n2 + m + 1;
    let mut s = String::new();
    s.push_str("# gnuplot script; run with: gnuplot -persist <this file>\n");
    let _ = writeln!(s, "csv = '{csv_path}'");
    s.push_str("set datafile separator ','\n");
    s.push_str("set key outside\n");
    s.push_str("set xlabel 't'\n\n");
    s.push_str("set terminal pngcairo size 1000,1200\n");
    s.push_str("set output 'trajectory.png'\n");
    s.push_str("set multiplot layout 3,1\n\n");
    s.push_str("set title 'slow state component 2 (pitch-like)'\n");
    let _ = writeln!(
        s,
        "plot for [a=0:{n_agents}] csv using 1:($2==a?${theta_col}:1/0) with lines title sprintf('agent %d', a)"
    );
    s.push_str("\nset title 'fast state component 2 (attack-angle-like)'\n");
    let _ = writeln!(
        s,
        "plot for [a=0:{n_agents}] csv using 1:($2==a?${alpha_col}:1/0) with lines title sprintf('agent %d', a)"
    );
    s.push_str("\nset title 'tracking error (infinity norm)'\nset logscale y\n");
    let _ = writeln!(
        s,
        "plot for [a=1:{n_agents}] csv using 1:($2==a&&${err_col}>0?${err_col}:1/0) with lines title sprintf('agent %d', a)"
    );
    s.push_str("unset multiplot\n");
    s
}
