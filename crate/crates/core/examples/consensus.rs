//! Path of three nodes with `fᵢ(x) = ½(x - yᵢ)²` and linear couplings.
//!
//! With identity Hessians the dynamics reduce to Laplacian consensus, so the
//! states converge to the mean of the `yᵢ`.
//!
//! ```text
//! cargo run --example consensus
//! ```

use std::sync::Arc;

use zgs::rate::{bound_envelopes, estimate_rate_constants};
use zgs::{integrate, solve_centralized, CouplingKind, EdgeCoupling, Graph, IntegratorConfig, LinkPotential, NetworkProblem, ObjectiveFunction, RateBounds};

fn main() -> zgs::Result<()> {
    let targets = [1.0, 2.0, 6.0];
    let objectives = targets
        .iter()
        .map(|&y| ObjectiveFunction::scalar_quadratic(1.0, y).map(Arc::new))
        .collect::<zgs::Result<Vec<_>>>()?;
    let graph = Graph::path(3)?;
    let problem = NetworkProblem::with_uniform_coupling(graph, objectives, |a, b| {
        EdgeCoupling::new(a, b, CouplingKind::GradientDiff(LinkPotential::scaled_identity(1.0, 1)?))
    })?;

    let x0 = problem.default_initialization()?;
    let x_star = solve_centralized(&problem)?.x_star;
    let constants = estimate_rate_constants(&problem, &x0)?;
    let bounds = RateBounds::compute(&constants, problem.graph())?;
    println!("x* = {:.6}", x_star[0]);
    println!("rho = {:.6}  rho~ = {:.6}", bounds.rho, bounds.rho_tilde);

    let traj = integrate(&problem, &x0, &IntegratorConfig::rk4(1e-3, 8.0, 1.0), &x_star)?;
    let v: Vec<f64> = traj.diagnostics.iter().map(|d| d.v).collect();
    let (upper, lower) = bound_envelopes(v[0], &bounds, &traj.times)?;
    println!("{:>5} {:>12} {:>12} {:>12}", "t", "lower", "V", "upper");
    for k in 0..traj.len() {
        println!("{:>5.1} {:>12.4e} {:>12.4e} {:>12.4e}", traj.times[k], lower[k], v[k], upper[k]);
    }
    let last = traj.final_state();
    println!("final states: {:?}", last.nodes().iter().map(|x| x[0]).collect::<Vec<_>>());
    Ok(())
}
