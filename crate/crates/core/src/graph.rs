//! Connected undirected communication graphs and their Laplacian spectra.
//!
//! Nodes are 0-based inside the library. Scenario files use 1-based node
//! labels and are converted when parsed.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Result, ZgsError};
use crate::linalg;

/// A connected, undirected, unweighted graph without self-loops.
///
/// Edges are stored as `(i, j)` with `i < j`, sorted lexicographically; the
/// position of an edge in [`Graph::edges`] is its edge index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n_nodes: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from 0-based edge pairs. Orientation of the pairs is
    /// irrelevant. Fails on self-loops, duplicates, out-of-range nodes, fewer
    /// than two nodes, or a disconnected result.
    pub fn new(n_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n_nodes < 2 {
            return Err(ZgsError::InvalidGraph(format!(
                "need at least 2 nodes, got {n_nodes}"
            )));
        }
        let mut normalized = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            for idx in [a, b] {
                if idx >= n_nodes {
                    return Err(ZgsError::NodeOutOfRange {
                        index: idx,
                        n_nodes,
                    });
                }
            }
            if a == b {
                return Err(ZgsError::InvalidGraph(format!("self-loop at node {a}")));
            }
            normalized.push((a.min(b), a.max(b)));
        }
        normalized.sort_unstable();
        if let Some(w) = normalized.windows(2).find(|w| w[0] == w[1]) {
            return Err(ZgsError::InvalidGraph(format!(
                "duplicate edge {{{},{}}}",
                w[0].0, w[0].1
            )));
        }

        let mut adjacency = vec![Vec::new(); n_nodes];
        for &(a, b) in &normalized {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }

        let graph = Graph {
            n_nodes,
            edges: normalized,
            adjacency,
        };
        if !graph.is_connected() {
            return Err(ZgsError::Disconnected);
        }
        Ok(graph)
    }

    pub fn path(n_nodes: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n_nodes).map(|i| (i - 1, i)).collect();
        Self::new(n_nodes, &edges)
    }

    /// Cycle graph. For `n_nodes == 2` this is the single edge.
    pub fn ring(n_nodes: usize) -> Result<Self> {
        let mut edges: Vec<_> = (1..n_nodes).map(|i| (i - 1, i)).collect();
        if n_nodes > 2 {
            edges.push((n_nodes - 1, 0));
        }
        Self::new(n_nodes, &edges)
    }

    pub fn complete(n_nodes: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for i in 0..n_nodes {
            for j in (i + 1)..n_nodes {
                edges.push((i, j));
            }
        }
        Self::new(n_nodes, &edges)
    }

    /// Erdős–Rényi graph conditioned on connectivity by rejection sampling.
    /// The result is a deterministic function of the RNG state.
    pub fn random_connected<R: Rng + ?Sized>(
        n_nodes: usize,
        edge_probability: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if !(edge_probability > 0.0 && edge_probability <= 1.0) {
            return Err(ZgsError::InvalidGraph(format!(
                "edge probability {edge_probability} not in (0, 1]"
            )));
        }
        if n_nodes < 2 {
            return Err(ZgsError::InvalidGraph(format!(
                "need at least 2 nodes, got {n_nodes}"
            )));
        }
        const MAX_ATTEMPTS: usize = 100_000;
        for _ in 0..MAX_ATTEMPTS {
            let mut edges = Vec::new();
            for i in 0..n_nodes {
                for j in (i + 1)..n_nodes {
                    if rng.random::<f64>() < edge_probability {
                        edges.push((i, j));
                    }
                }
            }
            match Self::new(n_nodes, &edges) {
                Ok(g) => return Ok(g),
                Err(ZgsError::Disconnected) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(ZgsError::InvalidGraph(format!(
            "no connected sample in {MAX_ATTEMPTS} attempts (N = {n_nodes}, p = {edge_probability})"
        )))
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Index of edge `{a, b}` in [`Graph::edges`], if present.
    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        self.edges.binary_search(&(a.min(b), a.max(b))).ok()
    }

    /// Neighbors of node `i`, sorted ascending.
    pub fn neighbors(&self, i: usize) -> Result<&[usize]> {
        self.adjacency
            .get(i)
            .map(Vec::as_slice)
            .ok_or(ZgsError::NodeOutOfRange {
                index: i,
                n_nodes: self.n_nodes,
            })
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n_nodes).map(|i| self.degree(i)).max().unwrap_or(0)
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n_nodes];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == self.n_nodes
    }

    /// Graph Laplacian `L = D - A`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(self.n_nodes, self.n_nodes);
        for &(a, b) in &self.edges {
            l[(a, b)] = -1.0;
            l[(b, a)] = -1.0;
            l[(a, a)] += 1.0;
            l[(b, b)] += 1.0;
        }
        l
    }

    /// Algebraic connectivity and spectral radius of the Laplacian.
    pub fn laplacian_spectrum(&self) -> Result<LaplacianSpectrum> {
        let eig = linalg::symmetric_eigen(&self.laplacian())?;
        Ok(LaplacianSpectrum {
            lambda2: eig.values[1],
            lambda_n: eig.max(),
        })
    }
}

/// `λ₂` (second-smallest) and `λ_N` (largest) Laplacian eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplacianSpectrum {
    pub lambda2: f64,
    pub lambda_n: f64,
}
