//! Two nodes, scalar quadratics, one linear link: the disagreement decays as
//! `e^{-2wt}` and the exact solution is available for comparison.
//!
//! Also prints the observed order of RK4 from two step sizes.
//!
//! ```text
//! cargo run --example two_node_closed_form
//! ```

use std::sync::Arc;

use zgs::{integrate, CouplingKind, EdgeCoupling, Graph, IntegratorConfig, LinkPotential, NetworkProblem, ObjectiveFunction};

fn problem(weight: f64) -> zgs::Result<NetworkProblem> {
    let objectives = vec![
        Arc::new(ObjectiveFunction::scalar_quadratic(1.0, 0.0)?),
        Arc::new(ObjectiveFunction::scalar_quadratic(1.0, 2.0)?),
    ];
    NetworkProblem::with_uniform_coupling(Graph::path(2)?, objectives, |a, b| {
        EdgeCoupling::new(a, b, CouplingKind::GradientDiff(LinkPotential::scaled_identity(weight, 1)?))
    })
}

fn exact(t: f64, w: f64) -> [f64; 2] {
    let e = (-2.0 * w * t).exp();
    [1.0 - e, 1.0 + e]
}

fn max_error(p: &NetworkProblem, h: f64, w: f64) -> zgs::Result<f64> {
    let x0 = p.default_initialization()?;
    let x_star = nalgebra::DVector::from_element(1, 1.0);
    let traj = integrate(p, &x0, &IntegratorConfig::rk4(h, 2.0, 0.5), &x_star)?;
    let mut worst: f64 = 0.0;
    for (t, x) in traj.times.iter().zip(&traj.states) {
        let ex = exact(*t, w);
        for (i, e) in ex.iter().enumerate() {
            worst = worst.max((x.node(i)[0] - e).abs());
        }
    }
    Ok(worst)
}

fn main() -> zgs::Result<()> {
    let w = 1.0;
    let p = problem(w)?;
    for h in [1e-3, 0.1, 0.05] {
        println!("h = {h:<6} max error = {:.3e}", max_error(&p, h, w)?);
    }
    let ratio = max_error(&p, 0.1, w)? / max_error(&p, 0.05, w)?;
    println!("error ratio for h halved: {ratio:.2} (observed order {:.2})", ratio.log2());
    Ok(())
}
