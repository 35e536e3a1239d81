use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use zgs::runner::{self, RunError, SweepAxis};
use zgs::scenario::{Scenario, ScenarioError};

#[derive(Parser)]
#[command(name = "zgs", version, about = "Simulate and analyze zero-gradient-sum distributed optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write the trajectory CSV and JSON summary.
    Run {
        scenario: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Run a scenario for several values of one parameter.
    Sweep {
        scenario: PathBuf,
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated values; may be empty.
        #[arg(long, value_parser = parse_values, allow_hyphen_values = true)]
        values: Values,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Print the rate bounds as JSON without integrating.
    Analyze { scenario: PathBuf },
    /// Parse the scenario and check the initial state against the manifold.
    Validate { scenario: PathBuf },
}

#[derive(Clone)]
struct Values(Vec<f64>);

fn parse_values(s: &str) -> Result<Values, String> {
    s.split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| v.parse::<f64>().map_err(|e| format!("'{v}': {e}")))
        .collect::<Result<_, _>>()
        .map(Values)
}

fn load(path: &Path) -> Result<Scenario, RunError> {
    let mut s = Scenario::from_path(path)?;
    if let Ok(seed) = std::env::var("ZGS_SEED") {
        s.seed = seed
            .trim()
            .parse()
            .map_err(|e| ScenarioError::new("ZGS_SEED", format!("'{seed}': {e}")))?;
    }
    Ok(s)
}

fn execute(cmd: Command) -> Result<(), RunError> {
    match cmd {
        Command::Run { scenario, out_dir } => {
            let out = runner::run(&load(&scenario)?)?;
            let (csv, summary) = out.write(&out_dir)?;
            log::info!("wrote {} and {}", csv.display(), summary.display());
        }
        Command::Sweep {
            scenario,
            axis,
            values,
            out_dir,
        } => {
            let rows = runner::sweep(&load(&scenario)?, axis, &values.0)?;
            let aggregate = runner::write_sweep(&rows, axis, &out_dir)?;
            log::info!("wrote {}", aggregate.display());
        }
        Command::Analyze { scenario } => {
            print!("{}", runner::analyze(&load(&scenario)?)?.summary().to_json());
        }
        Command::Validate { scenario } => {
            let v = runner::validate(&load(&scenario)?)?;
            println!(
                "ok: {} nodes, {} edges, dimension {}",
                v.instance.problem.n_nodes(),
                v.instance.problem.graph().n_edges(),
                v.instance.problem.dim()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("zgs: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
