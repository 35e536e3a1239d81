//! Regularized logistic regression split over a ring of four nodes.
//!
//! Each node sees only its own samples. The link potentials are
//! `g(y) = fᵢ(y) + fⱼ(y)`, so the coupling strength follows the local
//! curvature. The consensus point matches the centralized Newton solution.
//!
//! ```text
//! cargo run --example logistic_network
//! ```

use std::sync::Arc;

use nalgebra::{dvector, DVector};
use zgs::objective::Sample;
use zgs::rate::estimate_rate_constants;
use zgs::{integrate, solve_centralized, CouplingKind, EdgeCoupling, Graph, IntegratorConfig, LinkPotential, NetworkProblem, ObjectiveFunction, RateBounds};

fn sample(x0: f64, x1: f64, label: f64) -> Sample {
    Sample { features: dvector![x0, x1], label }
}

fn main() -> zgs::Result<()> {
    let data = [
        vec![sample(1.0, 0.5, 1.0), sample(-0.3, 1.2, -1.0)],
        vec![sample(0.8, -0.4, 1.0), sample(-1.0, -0.2, -1.0), sample(0.2, 0.9, 1.0)],
        vec![sample(-0.6, 0.3, -1.0)],
        vec![sample(1.5, 1.0, 1.0), sample(-0.9, 0.7, -1.0)],
    ];
    let objectives = data
        .into_iter()
        .map(|s| ObjectiveFunction::logistic(0.5, 2, s).map(Arc::new))
        .collect::<zgs::Result<Vec<_>>>()?;
    let graph = Graph::ring(4)?;
    let fs = objectives.clone();
    let p = NetworkProblem::with_uniform_coupling(graph, objectives, |a, b| {
        let link = LinkPotential::sum_of_endpoints(fs[a].clone(), fs[b].clone())?;
        EdgeCoupling::new(a, b, CouplingKind::GradientDiff(link))
    })?;

    let x0 = p.default_initialization()?;
    let oracle = solve_centralized(&p)?;
    let xs = &oracle.x_star;
    println!("centralized x* = [{:.8}, {:.8}]  |grad| = {:.1e}", xs[0], xs[1], oracle.grad_norm);
    for (i, x) in x0.state().nodes().iter().enumerate() {
        println!("node {i} local minimizer = [{:.5}, {:.5}]", x[0], x[1]);
    }

    let c = estimate_rate_constants(&p, &x0)?;
    let b = RateBounds::compute(&c, p.graph())?;
    println!("theta={:.4} Theta={:.4} gamma={:.4} Gamma={:.4}", c.theta(), c.big_theta(), c.gamma(), c.big_gamma());
    println!("rho={:.4} rho~={:.4}", b.rho, b.rho_tilde);

    let traj = integrate(&p, &x0, &IntegratorConfig::rk45(1e-10, 1e-10, 6.0, 1.0), &oracle.x_star)?;
    for (t, d) in traj.times.iter().zip(&traj.diagnostics) {
        println!("t={t:.1}  V={:.3e}  err={:.3e}", d.v, d.err_to_x_star);
    }
    if let Some(fit) = traj.fitted_decay_rate() {
        println!("fitted decay rate {:.4} over [{:.1}, {:.1}]", fit.rate, fit.t_start, fit.t_end);
    }
    let mean: DVector<f64> = traj.final_state().mean();
    println!("final mean state = [{:.8}, {:.8}]", mean[0], mean[1]);
    Ok(())
}
