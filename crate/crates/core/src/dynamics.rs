//! The zero-gradient-sum vector field and its Lyapunov diagnostics.
//!
//! Node `i` evolves as `ẋᵢ = (∇²fᵢ(xᵢ))⁻¹ Σ_{j∈𝒩ᵢ} φᵢⱼ(xᵢ, xⱼ)`. The flow keeps
//! `Σᵢ ∇fᵢ(xᵢ)` constant, so starting on the manifold where that sum is zero
//! drives every node to the minimizer of `Σᵢ fᵢ`.

use std::sync::Arc;

use nalgebra::{Cholesky, DVector, Dyn};

use crate::coupling::{EdgeCoupling, PairCoupling};
use crate::error::{Result, ZgsError};
use crate::graph::Graph;
use crate::objective::ObjectiveFunction;

/// Default relative tolerance on the gradient-sum residual of an initial state.
pub const MANIFOLD_TOL: f64 = 1e-8;

/// Node states `(x₁, …, x_N)` stacked into one vector of length `N·n`.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedState {
    values: DVector<f64>,
    dim: usize,
}

impl StackedState {
    pub fn new(values: DVector<f64>, dim: usize) -> Result<Self> {
        if dim == 0 || values.len() % dim != 0 {
            return Err(ZgsError::DimensionMismatch {
                expected: dim,
                got: values.len(),
            });
        }
        Ok(StackedState { values, dim })
    }

    pub fn from_nodes(nodes: &[DVector<f64>]) -> Result<Self> {
        let dim = nodes.first().map(|v| v.len()).unwrap_or(0);
        if let Some(bad) = nodes.iter().find(|v| v.len() != dim) {
            return Err(ZgsError::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        let values = DVector::from_iterator(nodes.len() * dim, nodes.iter().flat_map(|v| v.iter().copied()));
        Self::new(values, dim)
    }

    /// All nodes at the same point.
    pub fn agreement(point: &DVector<f64>, n_nodes: usize) -> Self {
        Self::from_nodes(&vec![point.clone(); n_nodes]).expect("uniform node dimension")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_nodes(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn node(&self, i: usize) -> DVector<f64> {
        self.values.rows(i * self.dim, self.dim).into_owned()
    }

    pub fn nodes(&self) -> Vec<DVector<f64>> {
        (0..self.n_nodes()).map(|i| self.node(i)).collect()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.values
    }

    /// Mean node state `x̄`.
    pub fn mean(&self) -> DVector<f64> {
        let mut m = DVector::zeros(self.dim);
        for i in 0..self.n_nodes() {
            m += self.values.rows(i * self.dim, self.dim);
        }
        m / self.n_nodes() as f64
    }

    /// `Σᵢ ‖xᵢ - x̄‖²`; zero exactly on the agreement set.
    pub fn disagreement(&self) -> f64 {
        // Shifted by node 0 so that agreement states give exactly zero.
        let anchor = self.node(0);
        let shifted: Vec<DVector<f64>> = (0..self.n_nodes()).map(|i| self.node(i) - &anchor).collect();
        let mean = shifted.iter().sum::<DVector<f64>>() / self.n_nodes() as f64;
        shifted.iter().map(|d| (d - &mean).norm_squared()).sum()
    }

    /// `‖x - (p, …, p)‖`.
    pub fn distance_to_agreement_point(&self, point: &DVector<f64>) -> f64 {
        (0..self.n_nodes())
            .map(|i| (self.values.rows(i * self.dim, self.dim) - point).norm_squared())
            .sum::<f64>()
            .sqrt()
    }
}

/// An initial state that passed [`NetworkProblem::validate_initialization`].
#[derive(Debug, Clone, PartialEq)]
pub struct CheckedState(StackedState);

impl CheckedState {
    pub fn state(&self) -> &StackedState {
        &self.0
    }

    pub fn into_state(self) -> StackedState {
        self.0
    }
}

/// Graph, per-node objectives and per-edge couplings.
#[derive(Debug, Clone)]
pub struct NetworkProblem {
    graph: Graph,
    objectives: Vec<Arc<ObjectiveFunction>>,
    couplings: Vec<EdgeCoupling>,
    dim: usize,
    /// Factorizations of constant Hessians, reused across evaluations.
    fixed_hessians: Vec<Option<Cholesky<f64, Dyn>>>,
}

impl NetworkProblem {
    /// `couplings` may be given in any order but must cover every edge exactly once.
    pub fn new(
        graph: Graph,
        objectives: Vec<Arc<ObjectiveFunction>>,
        couplings: Vec<EdgeCoupling>,
    ) -> Result<Self> {
        if objectives.len() != graph.n_nodes() {
            return Err(ZgsError::InvalidParameter(format!(
                "{} objectives for {} nodes",
                objectives.len(),
                graph.n_nodes()
            )));
        }
        let dim = objectives[0].dim();
        if let Some(bad) = objectives.iter().find(|f| f.dim() != dim) {
            return Err(ZgsError::DimensionMismatch {
                expected: dim,
                got: bad.dim(),
            });
        }

        let mut slots: Vec<Option<EdgeCoupling>> = vec![None; graph.n_edges()];
        for c in couplings {
            let (a, b) = c.endpoints();
            let idx = graph.edge_index(a, b).ok_or_else(|| {
                ZgsError::InvalidCoupling(format!("coupling on non-edge {{{a},{b}}}"))
            })?;
            if let Some(d) = c.dim() {
                if d != dim {
                    return Err(ZgsError::DimensionMismatch { expected: dim, got: d });
                }
            }
            if slots[idx].replace(c).is_some() {
                return Err(ZgsError::InvalidCoupling(format!(
                    "duplicate coupling on edge {{{a},{b}}}"
                )));
            }
        }
        let couplings = slots
            .into_iter()
            .zip(graph.edges())
            .map(|(c, &(a, b))| {
                c.ok_or_else(|| ZgsError::InvalidCoupling(format!("edge {{{a},{b}}} has no coupling")))
            })
            .collect::<Result<Vec<_>>>()?;

        let fixed_hessians = objectives
            .iter()
            .enumerate()
            .map(|(i, f)| {
                if f.hessian_is_constant() {
                    f.hessian_unchecked(&DVector::zeros(dim))
                        .cholesky()
                        .map(Some)
                        .ok_or(ZgsError::HessianSolve { node: i })
                } else {
                    Ok(None)
                }
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(NetworkProblem {
            graph,
            objectives,
            couplings,
            dim,
            fixed_hessians,
        })
    }

    /// Same coupling kind on every edge, produced by `make(i, j)`.
    pub fn with_uniform_coupling<F>(graph: Graph, objectives: Vec<Arc<ObjectiveFunction>>, mut make: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> Result<EdgeCoupling>,
    {
        let couplings = graph
            .edges()
            .iter()
            .map(|&(a, b)| make(a, b))
            .collect::<Result<Vec<_>>>()?;
        Self::new(graph, objectives, couplings)
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn objectives(&self) -> &[Arc<ObjectiveFunction>] {
        &self.objectives
    }

    /// Couplings in edge-index order.
    pub fn couplings(&self) -> &[EdgeCoupling] {
        &self.couplings
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_nodes(&self) -> usize {
        self.graph.n_nodes()
    }

    fn check_state(&self, x: &StackedState) -> Result<()> {
        if x.dim() != self.dim || x.n_nodes() != self.n_nodes() {
            return Err(ZgsError::DimensionMismatch {
                expected: self.dim * self.n_nodes(),
                got: x.as_vector().len(),
            });
        }
        Ok(())
    }

    /// `φᵢ = Σ_{j∈𝒩ᵢ} φᵢⱼ(xᵢ, xⱼ)` for every node, each edge evaluated once.
    fn coupling_sums(&self, nodes: &[DVector<f64>]) -> Vec<DVector<f64>> {
        let mut sums = vec![DVector::zeros(self.dim); self.n_nodes()];
        for (c, &(a, b)) in self.couplings.iter().zip(self.graph.edges()) {
            let phi = c.couple_unchecked(a, &nodes[a], &nodes[b]);
            sums[a] += &phi;
            sums[b] -= &phi;
        }
        sums
    }

    /// `ẋ` at `x`. Each node applies its inverse Hessian by a Cholesky solve.
    pub fn vector_field(&self, x: &StackedState) -> Result<StackedState> {
        self.check_state(x)?;
        let nodes = x.nodes();
        let sums = self.coupling_sums(&nodes);
        let mut out = Vec::with_capacity(self.n_nodes());
        for (i, phi) in sums.into_iter().enumerate() {
            let step = match &self.fixed_hessians[i] {
                Some(chol) => chol.solve(&phi),
                None => self.objectives[i]
                    .hessian_unchecked(&nodes[i])
                    .cholesky()
                    .ok_or(ZgsError::HessianSolve { node: i })?
                    .solve(&phi),
            };
            out.push(step);
        }
        StackedState::from_nodes(&out)
    }

    /// `V(x) = Σᵢ [fᵢ(x*) - fᵢ(xᵢ) - ∇fᵢ(xᵢ)ᵀ(x* - xᵢ)]`.
    pub fn lyapunov(&self, x: &StackedState, x_star: &DVector<f64>) -> Result<f64> {
        self.check_state(x)?;
        if x_star.len() != self.dim {
            return Err(ZgsError::DimensionMismatch {
                expected: self.dim,
                got: x_star.len(),
            });
        }
        Ok(self
            .objectives
            .iter()
            .enumerate()
            .map(|(i, f)| f.bregman_gap_unchecked(&x.node(i), x_star))
            .sum())
    }

    /// `V̇(x) = Σ_{{i,j}∈ℰ} (xᵢ - xⱼ)ᵀ φᵢⱼ(xᵢ, xⱼ)`; does not need `x*`.
    pub fn lyapunov_rate(&self, x: &StackedState) -> Result<f64> {
        self.check_state(x)?;
        let nodes = x.nodes();
        Ok(self
            .couplings
            .iter()
            .zip(self.graph.edges())
            .map(|(c, &(a, b))| {
                let phi = c.couple_unchecked(a, &nodes[a], &nodes[b]);
                (&nodes[a] - &nodes[b]).dot(&phi)
            })
            .sum())
    }

    /// Manifold residual `Σᵢ ∇fᵢ(xᵢ)`.
    pub fn gradient_sum(&self, x: &StackedState) -> Result<DVector<f64>> {
        self.check_state(x)?;
        let mut s = DVector::zeros(self.dim);
        for (i, f) in self.objectives.iter().enumerate() {
            s += f.gradient_unchecked(&x.node(i));
        }
        Ok(s)
    }

    /// `maxᵢ ‖∇fᵢ(xᵢ)‖`, the scale used by manifold tolerances.
    pub fn max_node_gradient(&self, x: &StackedState) -> Result<f64> {
        self.check_state(x)?;
        Ok(self
            .objectives
            .iter()
            .enumerate()
            .map(|(i, f)| f.gradient_unchecked(&x.node(i)).norm())
            .fold(0.0, f64::max))
    }

    /// Accepts `x0` iff `‖Σᵢ∇fᵢ(x0ᵢ)‖ ≤ tol · max(1, maxᵢ‖∇fᵢ(x0ᵢ)‖)`.
    pub fn validate_initialization(&self, x0: StackedState, tol: f64) -> Result<CheckedState> {
        if !(tol > 0.0) {
            return Err(ZgsError::InvalidParameter(format!(
                "manifold tolerance {tol} must be positive"
            )));
        }
        self.check_state(&x0)?;
        if !x0.as_vector().iter().all(|v| v.is_finite()) {
            return Err(ZgsError::NonFiniteState { t: 0.0 });
        }
        let residual = self.gradient_sum(&x0)?.norm();
        let threshold = tol * self.max_node_gradient(&x0)?.max(1.0);
        if residual <= threshold {
            Ok(CheckedState(x0))
        } else {
            Err(ZgsError::ManifoldViolation {
                residual,
                threshold,
            })
        }
    }

    /// Every node starts at its own local minimizer.
    pub fn local_minimizers(&self) -> Result<StackedState> {
        let mins = self
            .objectives
            .iter()
            .map(|f| f.local_minimizer())
            .collect::<Result<Vec<_>>>()?;
        StackedState::from_nodes(&mins)
    }

    pub fn default_initialization(&self) -> Result<CheckedState> {
        self.validate_initialization(self.local_minimizers()?, MANIFOLD_TOL)
    }

    /// `F(x) = Σᵢ fᵢ(x)`.
    pub fn total_objective(&self, x: &DVector<f64>) -> Result<f64> {
        self.objectives.iter().map(|f| f.eval(x)).sum()
    }
}
