//! Initial states must satisfy `Σᵢ∇fᵢ(xᵢ) = 0`.
//!
//! The local minimizers always do. Any other point on the manifold works too,
//! and points off it are rejected before integration.
//!
//! ```text
//! cargo run --example manifold_check
//! ```

use std::sync::Arc;

use nalgebra::DVector;
use zgs::dynamics::MANIFOLD_TOL;
use zgs::{integrate, solve_centralized, CouplingKind, EdgeCoupling, Graph, IntegratorConfig, LinkPotential, NetworkProblem, ObjectiveFunction, StackedState};

fn scalar_state(values: &[f64]) -> zgs::Result<StackedState> {
    StackedState::new(DVector::from_column_slice(values), 1)
}

fn main() -> zgs::Result<()> {
    let objectives = [1.0, 2.0, 6.0]
        .iter()
        .map(|&y| ObjectiveFunction::scalar_quadratic(1.0, y).map(Arc::new))
        .collect::<zgs::Result<Vec<_>>>()?;
    let p = NetworkProblem::with_uniform_coupling(Graph::path(3)?, objectives, |a, b| {
        EdgeCoupling::new(a, b, CouplingKind::GradientDiff(LinkPotential::scaled_identity(1.0, 1)?))
    })?;
    let x_star = solve_centralized(&p)?.x_star;

    for init in [[1.0, 2.0, 6.0], [2.0, 1.0, 6.0], [0.0, 0.0, 0.0]] {
        let x = scalar_state(&init)?;
        let residual = p.gradient_sum(&x)?.norm();
        print!("x0 = {init:?}  |sum grad| = {residual:.1e}  ");
        match p.validate_initialization(x, MANIFOLD_TOL) {
            Ok(checked) => {
                let traj = integrate(&p, &checked, &IntegratorConfig::rk4(1e-3, 12.0, 12.0), &x_star)?;
                println!("accepted, error at t=12: {:.2e}", traj.final_error());
            }
            Err(e) => println!("rejected: {e}"),
        }
    }
    Ok(())
}
