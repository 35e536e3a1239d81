//! Distributed convex optimization with zero-gradient-sum dynamics.
//!
//! Each node `i` of a connected undirected graph holds a private strictly convex
//! objective `fᵢ` and evolves its state by
//! `ẋᵢ = (∇²fᵢ(xᵢ))⁻¹ Σ_{j∈Nᵢ} φᵢⱼ(xᵢ, xⱼ)`. Started at the local minimizers, the
//! states stay on the manifold `Σᵢ∇fᵢ(xᵢ) = 0` and converge to the minimizer of
//! `Σᵢ fᵢ`.
//!
//! See the `examples/` directory for end-to-end usage.

pub mod coupling;
pub mod dynamics;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod newton;
pub mod objective;
pub mod ode;
pub mod oracle;
pub mod rate;
pub mod runner;
pub mod scenario;

pub use coupling::{CouplingKind, EdgeCoupling, Elementwise, LinkPotential, PairCoupling};
pub use dynamics::{CheckedState, NetworkProblem, StackedState};
pub use error::{Result, ZgsError};
pub use graph::Graph;
pub use objective::ObjectiveFunction;
pub use ode::{integrate, IntegratorConfig, Method, Trajectory};
pub use oracle::solve_centralized;
pub use rate::{RateBounds, RateConstants};
pub use runner::{RunError, RunOutput, SweepAxis};
pub use scenario::{Scenario, ScenarioError};
