//! Nonlinear per-coordinate couplings on a path: `tanh` and a rational
//! coupling whose two endpoint functions are not plain negatives of a
//! difference map.
//!
//! Both keep the gradient sum at zero and still reach the optimum, but the
//! rate bounds have no curvature constants to work with.
//!
//! ```text
//! cargo run --example elementwise_couplings
//! ```

use std::sync::Arc;

use zgs::rate::estimate_rate_constants;
use zgs::{integrate, solve_centralized, CouplingKind, EdgeCoupling, Elementwise, Graph, IntegratorConfig, NetworkProblem, ObjectiveFunction};

fn main() -> zgs::Result<()> {
    for kind in [Elementwise::Tanh, Elementwise::Rational] {
        let objectives = [1.0, 2.0, 6.0]
            .iter()
            .map(|&y| ObjectiveFunction::scalar_quadratic(1.0, y).map(Arc::new))
            .collect::<zgs::Result<Vec<_>>>()?;
        let p = NetworkProblem::with_uniform_coupling(Graph::path(3)?, objectives, |a, b| {
            EdgeCoupling::new(a, b, CouplingKind::Elementwise(kind))
        })?;
        let x0 = p.default_initialization()?;
        let x_star = solve_centralized(&p)?.x_star;
        let traj = integrate(&p, &x0, &IntegratorConfig::rk45(1e-10, 1e-10, 30.0, 5.0), &x_star)?;

        println!("{kind:?}");
        for (t, d) in traj.times.iter().zip(&traj.diagnostics) {
            println!("  t={t:>4.1}  V={:.3e}  |sum grad|={:.1e}  err={:.3e}", d.v, d.grad_sum_norm, d.err_to_x_star);
        }
        println!("  steps accepted={} rejected={}", traj.stats.accepted, traj.stats.rejected);
        match estimate_rate_constants(&p, &x0) {
            Ok(_) => println!("  rate bounds available"),
            Err(e) => println!("  rate bounds: {e}"),
        }
    }
    Ok(())
}
