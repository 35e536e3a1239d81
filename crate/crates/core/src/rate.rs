//! Exponential convergence-rate bounds for gradient-difference couplings.
//!
//! Along any trajectory started on the manifold,
//! `V(0)·e^{-ρ̃t} ≤ V(t) ≤ V(0)·e^{-ρt}`, where
//! `ρ = sup{ε : εP ⪯ Q}` and `ρ̃ = inf{ε : εP̃ ⪰ Q̃}`. Both are computed from
//! eigenvalues rather than by searching over `ε`:
//!
//! * `P` and `Q` share the null vector `(1,…,1)`, so both are reduced to its
//!   orthogonal complement and `ρ = λ_min(P̄^{-1/2} Q̄ P̄^{-1/2})`.
//! * `P̃ = diag(θᵢ/2)` is positive definite, so `ρ̃ = λ_max(P̃^{-1/2} Q̃ P̃^{-1/2})`.
//!
//! The explicit bounds `2γλ₂/Θ ≤ ρ` and `ρ̃ ≤ 2Γλ_N/θ` are looser but only need
//! the Laplacian spectrum.

use nalgebra::{DMatrix, DVector};

use crate::coupling::CouplingKind;
use crate::dynamics::{CheckedState, NetworkProblem};
use crate::error::{Result, ZgsError};
use crate::graph::Graph;
use crate::linalg;
use crate::oracle;

/// Slack for the semidefinite checks `ρP ⪯ Q` and `ρ̃P̃ ⪰ Q̃`, relative to
/// `max(1, ‖Q‖_F)`.
pub const PENCIL_CHECK_TOL: f64 = 1e-9;
/// Reduced `P̄` eigenvalues at or below this are treated as degenerate.
pub const REDUCED_EIG_FLOOR: f64 = 1e-12;

fn require_positive(what: &str, values: &[f64]) -> Result<()> {
    match values.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
        Some(k) => Err(ZgsError::InvalidParameter(format!(
            "{what}[{k}] = {} must be positive",
            values[k]
        ))),
        None => Ok(()),
    }
}

/// `P` from the per-node upper curvature bounds `Θᵢ`:
/// `Pᵢᵢ = (½ - 1/N)Θᵢ + S/(2N²)`, `Pᵢⱼ = -(Θᵢ + Θⱼ)/(2N) + S/(2N²)`,
/// with `S = Σ_ℓ Θ_ℓ`.
pub fn build_p(big_theta: &[f64]) -> Result<DMatrix<f64>> {
    require_positive("Theta", big_theta)?;
    let n = big_theta.len();
    if n < 2 {
        return Err(ZgsError::InvalidParameter("P needs at least 2 nodes".into()));
    }
    let nf = n as f64;
    let shared = big_theta.iter().sum::<f64>() / (2.0 * nf * nf);
    Ok(DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            (0.5 - 1.0 / nf) * big_theta[i] + shared
        } else {
            -(big_theta[i] + big_theta[j]) / (2.0 * nf) + shared
        }
    }))
}

/// Edge-weighted Laplacian; `weights[k]` belongs to `graph.edges()[k]`.
/// With `γ` weights this is `Q`, with `Γ` weights it is `Q̃`.
pub fn build_q(weights: &[f64], graph: &Graph) -> Result<DMatrix<f64>> {
    if weights.len() != graph.n_edges() {
        return Err(ZgsError::DimensionMismatch {
            expected: graph.n_edges(),
            got: weights.len(),
        });
    }
    require_positive("edge weight", weights)?;
    let n = graph.n_nodes();
    let mut q = DMatrix::zeros(n, n);
    for (&w, &(a, b)) in weights.iter().zip(graph.edges()) {
        q[(a, b)] -= w;
        q[(b, a)] -= w;
        q[(a, a)] += w;
        q[(b, b)] += w;
    }
    Ok(q)
}

/// `P̃ = diag(θᵢ/2)`.
pub fn build_p_tilde(theta: &[f64]) -> Result<DMatrix<f64>> {
    require_positive("theta", theta)?;
    Ok(DMatrix::from_diagonal(&DVector::from_iterator(
        theta.len(),
        theta.iter().map(|t| 0.5 * t),
    )))
}

/// `ρ = sup{ε : εP ⪯ Q}` for `P`, `Q` with common null vector `(1,…,1)`.
pub fn rho_lower(p: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<f64> {
    let n = p.nrows();
    if !p.is_square() || q.shape() != p.shape() || n < 2 {
        return Err(ZgsError::InvalidParameter(format!(
            "P {:?} and Q {:?} must be square, equal-sized, N >= 2",
            p.shape(),
            q.shape()
        )));
    }
    let w = linalg::consensus_complement_basis(n);
    let p_bar = w.transpose() * p * &w;
    let q_bar = w.transpose() * q * &w;
    let p_inv_sqrt = linalg::spd_inverse_sqrt(&p_bar, REDUCED_EIG_FLOOR)?;
    let m = &p_inv_sqrt * q_bar * &p_inv_sqrt;
    let rho = linalg::symmetric_eigen(&m)?.min();
    if !(rho > 0.0) {
        return Err(ZgsError::DegeneratePencil(format!(
            "reduced Q is not positive definite (rho = {rho:e})"
        )));
    }

    let slack = linalg::symmetric_eigen(&(q - p * rho))?.min();
    let tol = PENCIL_CHECK_TOL * q.norm().max(1.0);
    if slack < -tol {
        return Err(ZgsError::BoundVerification(format!(
            "rho*P <= Q violated: smallest eigenvalue of Q - rho*P is {slack:e}"
        )));
    }
    Ok(rho)
}

/// `ρ̃ = inf{ε : εP̃ ⪰ Q̃}` with `P̃ = diag(θᵢ/2)` and `Q̃` the `Γ`-weighted Laplacian.
pub fn rho_upper(theta: &[f64], big_gamma_edges: &[f64], graph: &Graph) -> Result<f64> {
    if theta.len() != graph.n_nodes() {
        return Err(ZgsError::DimensionMismatch {
            expected: graph.n_nodes(),
            got: theta.len(),
        });
    }
    let p_tilde = build_p_tilde(theta)?;
    let q_tilde = build_q(big_gamma_edges, graph)?;
    let d = DMatrix::from_diagonal(&DVector::from_iterator(
        theta.len(),
        theta.iter().map(|t| 1.0 / (0.5 * t).sqrt()),
    ));
    let m = &d * &q_tilde * &d;
    let rho_tilde = linalg::symmetric_eigen(&m)?.max();

    let slack = linalg::symmetric_eigen(&(&p_tilde * rho_tilde - &q_tilde))?.min();
    let tol = PENCIL_CHECK_TOL * q_tilde.norm().max(1.0);
    if slack < -tol {
        return Err(ZgsError::BoundVerification(format!(
            "rho~*P~ >= Q~ violated: smallest eigenvalue of rho~*P~ - Q~ is {slack:e}"
        )));
    }
    Ok(rho_tilde)
}

/// Curvature constants of a problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct RateConstants {
    /// `θᵢ` per node.
    pub theta_nodes: Vec<f64>,
    /// `Θᵢ` per node.
    pub big_theta_nodes: Vec<f64>,
    /// `γ_{ij}` per edge, in edge-index order.
    pub gamma_edges: Vec<f64>,
    /// `Γ_{ij}` per edge.
    pub big_gamma_edges: Vec<f64>,
    /// Radius of the ball around `(x*, …, x*)` the constants are valid on.
    pub radius: f64,
}

impl RateConstants {
    /// From explicit constants (mainly for tests and parameter studies).
    pub fn new(
        theta_nodes: Vec<f64>,
        big_theta_nodes: Vec<f64>,
        gamma_edges: Vec<f64>,
        big_gamma_edges: Vec<f64>,
    ) -> Result<Self> {
        if theta_nodes.len() != big_theta_nodes.len() || gamma_edges.len() != big_gamma_edges.len() {
            return Err(ZgsError::InvalidParameter(
                "per-node and per-edge constant lists must have matching lengths".into(),
            ));
        }
        require_positive("theta", &theta_nodes)?;
        require_positive("gamma", &gamma_edges)?;
        for (k, (&lo, &hi)) in theta_nodes.iter().zip(&big_theta_nodes).enumerate() {
            if hi < lo {
                return Err(ZgsError::InvalidParameter(format!(
                    "Theta[{k}] = {hi} < theta[{k}] = {lo}"
                )));
            }
        }
        for (k, (&lo, &hi)) in gamma_edges.iter().zip(&big_gamma_edges).enumerate() {
            if hi < lo {
                return Err(ZgsError::InvalidParameter(format!(
                    "Gamma[{k}] = {hi} < gamma[{k}] = {lo}"
                )));
            }
        }
        Ok(RateConstants {
            theta_nodes,
            big_theta_nodes,
            gamma_edges,
            big_gamma_edges,
            radius: f64::INFINITY,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta_nodes.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn big_theta(&self) -> f64 {
        self.big_theta_nodes.iter().copied().fold(0.0, f64::max)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma_edges.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn big_gamma(&self) -> f64 {
        self.big_gamma_edges.iter().copied().fold(0.0, f64::max)
    }
}

/// Constants valid on the ball `B(x*, R)`, `R = √(2·V(x0)/θ)`, which contains
/// every node state of the trajectory from `x0`. Fails with
/// [`ZgsError::NotApplicable`] if any edge uses an elementwise coupling.
pub fn estimate_rate_constants(p: &NetworkProblem, x0: &CheckedState) -> Result<RateConstants> {
    let x_star = oracle::solve_centralized(p)?.x_star;
    estimate_rate_constants_at(p, x0, &x_star)
}

/// Per-node curvature constants `(θᵢ, Θᵢ)` on the ball `B(x*, R)` with
/// `R = √(2·V(x0)/θ)`. These do not depend on the couplings.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeCurvature {
    pub theta_nodes: Vec<f64>,
    pub big_theta_nodes: Vec<f64>,
    pub radius: f64,
}

pub fn node_curvature(p: &NetworkProblem, x0: &CheckedState, x_star: &DVector<f64>) -> Result<NodeCurvature> {
    let theta_nodes: Vec<f64> = p.objectives().iter().map(|f| f.convexity_parameter()).collect();
    let theta = theta_nodes.iter().copied().fold(f64::INFINITY, f64::min);
    let v0 = p.lyapunov(x0.state(), x_star)?;
    let radius = (2.0 * v0 / theta).sqrt();
    let big_theta_nodes = p
        .objectives()
        .iter()
        .map(|f| f.curvature_upper_bound(x_star, radius))
        .collect::<Result<Vec<_>>>()?;
    Ok(NodeCurvature {
        theta_nodes,
        big_theta_nodes,
        radius,
    })
}

pub fn estimate_rate_constants_at(
    p: &NetworkProblem,
    x0: &CheckedState,
    x_star: &DVector<f64>,
) -> Result<RateConstants> {
    if let Some(k) = p
        .couplings()
        .iter()
        .position(|c| matches!(c.kind(), CouplingKind::Elementwise(_)))
    {
        let (a, b) = p.graph().edges()[k];
        return Err(ZgsError::NotApplicable(format!(
            "edge {{{},{}}} uses an elementwise coupling; rate bounds need gradient-difference couplings",
            a + 1,
            b + 1
        )));
    }
    let nodes = node_curvature(p, x0, x_star)?;
    let mut gamma_edges = Vec::with_capacity(p.couplings().len());
    let mut big_gamma_edges = Vec::with_capacity(p.couplings().len());
    for c in p.couplings() {
        let g = c.link_potential().expect("elementwise couplings rejected above");
        let (lo, hi) = g.curvature_range(x_star, nodes.radius)?;
        gamma_edges.push(lo);
        big_gamma_edges.push(hi);
    }
    let mut constants = RateConstants::new(nodes.theta_nodes, nodes.big_theta_nodes, gamma_edges, big_gamma_edges)?;
    constants.radius = nodes.radius;
    Ok(constants)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBounds {
    /// Lower bound on the decay rate of `V`.
    pub rho: f64,
    /// Upper bound on the decay rate of `V`.
    pub rho_tilde: f64,
    /// `2γλ₂/Θ ≤ ρ`.
    pub rho_spectral: f64,
    /// `2Γλ_N/θ ≥ ρ̃`.
    pub rho_tilde_spectral: f64,
    pub lambda2: f64,
    pub lambda_n: f64,
}

impl RateBounds {
    pub fn compute(constants: &RateConstants, graph: &Graph) -> Result<Self> {
        if constants.theta_nodes.len() != graph.n_nodes() || constants.gamma_edges.len() != graph.n_edges() {
            return Err(ZgsError::InvalidParameter(
                "rate constants do not match the graph".into(),
            ));
        }
        let p = build_p(&constants.big_theta_nodes)?;
        let q = build_q(&constants.gamma_edges, graph)?;
        let rho = rho_lower(&p, &q)?;
        let rho_tilde = rho_upper(&constants.theta_nodes, &constants.big_gamma_edges, graph)?;
        let spectrum = graph.laplacian_spectrum()?;
        Ok(RateBounds {
            rho,
            rho_tilde,
            rho_spectral: 2.0 * constants.gamma() * spectrum.lambda2 / constants.big_theta(),
            rho_tilde_spectral: 2.0 * constants.big_gamma() * spectrum.lambda_n / constants.theta(),
            lambda2: spectrum.lambda2,
            lambda_n: spectrum.lambda_n,
        })
    }
}

/// `upper(t) = V0·e^{-ρt}` and `lower(t) = V0·e^{-ρ̃t}`.
pub fn bound_envelopes(v0: f64, bounds: &RateBounds, times: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(v0 >= 0.0) {
        return Err(ZgsError::InvalidParameter(format!("V0 = {v0} must be non-negative")));
    }
    let upper = times.iter().map(|&t| v0 * (-bounds.rho * t).exp()).collect();
    let lower = times.iter().map(|&t| v0 * (-bounds.rho_tilde * t).exp()).collect();
    Ok((upper, lower))
}
