use clap::{Parser, Subcommand};
use spats::cli::commands;
use std::path::PathBuf;
use std::process::ExitCode;

/// Two-time-scale decomposition and leader-follower synchronization toolkit.
#[derive(Parser)]
#[command(name = "spats", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose a model into pure-slow and pure-fast subsystems.
    Decompose {
        /// Model document (JSON).
        model: PathBuf,
        /// Override the model's perturbation parameter.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Write the result here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthesize decentralized synchronization gains for a model and graph.
    Synthesize {
        /// Model document (JSON).
        model: PathBuf,
        /// Graph document (JSON with adjacency and pinning).
        graph: PathBuf,
        /// Optional weight matrices document.
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Coupling gain: "auto", a number, or a rational like 12/7.
        #[arg(long, default_value = "auto")]
        coupling: String,
        /// Write the result here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a closed-loop scenario and write trajectory/metrics files.
    Simulate {
        /// Scenario document (JSON).
        scenario: PathBuf,
    },
    /// Run the bundled regression suite and print one row per criterion.
    #[command(name = "verify-paper")]
    VerifyPaper {
        /// Load fixture documents from this directory instead of the
        /// compiled-in ones.
        #[arg(long)]
        fixtures: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Decompose { model, epsilon, out } => {
            commands::run_decompose(model, *epsilon, out.as_deref())
        }
        Command::Synthesize {
            model,
            graph,
            weights,
            coupling,
            out,
        } => commands::run_synthesize(model, graph, weights.as_deref(), coupling, out.as_deref()),
        Command::Simulate { scenario } => commands::run_simulate(scenario),
        Command::VerifyPaper { fixtures } => commands::run_verify_paper(fixtures.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
