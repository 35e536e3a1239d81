//! Rate bounds from curvature constants on a few graph families.
//!
//! For unit constants the bounds collapse to `2λ₂` and `2λ_N` of the
//! Laplacian. Non-uniform constants separate the tight pencil bounds from
//! the simpler spectral ones.
//!
//! ```text
//! cargo run --example rate_bounds
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zgs::{Graph, RateBounds, RateConstants};

fn report(name: &str, graph: &Graph, c: &RateConstants) -> zgs::Result<()> {
    let b = RateBounds::compute(c, graph)?;
    println!(
        "{name:<16} l2={:<8.4} lN={:<8.4} {:.4} <= rho={:.4} <= rho~={:.4} <= {:.4}",
        b.lambda2, b.lambda_n, b.rho_spectral, b.rho, b.rho_tilde, b.rho_tilde_spectral
    );
    Ok(())
}

fn main() -> zgs::Result<()> {
    println!("unit constants");
    for (name, g) in [
        ("path 6", Graph::path(6)?),
        ("ring 6", Graph::ring(6)?),
        ("complete 6", Graph::complete(6)?),
    ] {
        let c = RateConstants::new(vec![1.0; 6], vec![1.0; 6], vec![1.0; g.n_edges()], vec![1.0; g.n_edges()])?;
        report(name, &g, &c)?;
    }

    println!("random constants");
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for k in 0..4 {
        let n = rng.random_range(4..9);
        let g = Graph::random_connected(n, 0.4, &mut rng)?;
        let theta: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
        let big_theta = theta.iter().map(|t| t * rng.random_range(1.0..3.0)).collect();
        let gamma: Vec<f64> = (0..g.n_edges()).map(|_| rng.random_range(0.5..2.0)).collect();
        let big_gamma = gamma.iter().map(|t| t * rng.random_range(1.0..3.0)).collect();
        let c = RateConstants::new(theta, big_theta, gamma, big_gamma)?;
        report(&format!("random #{k} N={n}"), &g, &c)?;
    }
    Ok(())
}
