//! Parameter sweeps through the runner.
//!
//! * graph size on a path family, where `ρ = 4(1 - cos(π/N))` shrinks with `N`
//! * RK4 step size, with the error measured against a much finer run
//! * curvature ratio across the nodes of a random quadratic instance
//!
//! ```text
//! cargo run --example sweeps
//! ```

use std::path::PathBuf;

use zgs::runner::{sweep, sweep_csv};
use zgs::{Scenario, SweepAxis};

fn load(name: &str) -> Result<Scenario, Box<dyn std::error::Error>> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name);
    Ok(Scenario::from_path(&path)?)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path_family = load("path_family.json")?;
    let rows = sweep(&path_family, SweepAxis::GraphSize, &[3.0, 5.0, 8.0, 12.0])?;
    println!("graph-size");
    for r in &rows {
        let b = r.output.prepared.analysis.bounds().expect("quadratic instance");
        let n = r.value;
        let exact = 4.0 * (1.0 - (std::f64::consts::PI / n).cos());
        println!("  N={n:<3} rho={:.6} expected={exact:.6}", b.rho);
    }

    let rows = sweep(&path_family, SweepAxis::StepSize, &[0.1, 0.05, 0.025])?;
    println!("step-size");
    let errs: Vec<f64> = rows.iter().map(|r| r.step_err.unwrap_or(f64::NAN)).collect();
    for (r, e) in rows.iter().zip(&errs) {
        println!("  h={:<6} err={e:.3e}", r.value);
    }
    for w in errs.windows(2) {
        println!("  ratio {:.2}", w[0] / w[1]);
    }

    let rows = sweep(&load("random_quadratic.json")?, SweepAxis::CurvatureRatio, &[1.0, 4.0, 16.0])?;
    println!("curvature-ratio");
    print!("{}", String::from_utf8(sweep_csv(&rows))?);
    Ok(())
}
