//! Load a JSON scenario, run it and write `trajectory.csv` and
//! `summary.json`, the same as `zgs run`.
//!
//! ```text
//! cargo run --example scenario_run -- [scenario.json] [out-dir]
//! ```
//!
//! Defaults to the bundled random quadratic scenario and a temporary
//! directory.

use std::path::PathBuf;

use zgs::{runner, Scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/random_quadratic.json"));
    let out_dir = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("zgs_scenario_run"));

    let scenario = Scenario::from_path(&path)?;
    let out = runner::run(&scenario)?;
    let summary = out.summary();
    println!("{}: seed {}", summary.name, summary.seed);
    match out.prepared.analysis.bounds() {
        Some(b) => println!("rho = {:.6}  rho~ = {:.6}", b.rho, b.rho_tilde),
        None => println!("rate bounds not applicable"),
    }
    if let Some(fit) = out.trajectory.fitted_decay_rate() {
        println!("fitted rate = {:.6}", fit.rate);
    }
    println!("final error = {:.3e}", out.trajectory.final_error());

    std::fs::create_dir_all(&out_dir)?;
    let (csv, json) = out.write(&out_dir)?;
    println!("wrote {} and {}", csv.display(), json.display());
    Ok(())
}
