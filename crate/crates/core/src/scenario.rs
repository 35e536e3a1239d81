//! JSON scenario files.
//!
//! A scenario fully determines a problem instance: graph, objectives,
//! couplings, initial state and integrator. Node labels in scenario files are
//! 1-based. Random generators draw from a ChaCha8 stream seeded by `seed`, so
//! the same file and seed always give the same instance.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "name": "path3",
//!   "dimension": 1,
//!   "graph": { "kind": "path", "nodes": 3 },
//!   "objectives": { "kind": "per_node", "functions": [
//!     { "kind": "isotropic_quadratic", "weight": 1.0, "center": [1.0] },
//!     { "kind": "isotropic_quadratic", "weight": 1.0, "center": [2.0] },
//!     { "kind": "isotropic_quadratic", "weight": 1.0, "center": [6.0] } ] },
//!   "coupling": { "default": { "kind": "linear", "weight": 1.0 } },
//!   "integrator": { "method": "rk4", "step": 0.001, "t_end": 8.0, "sample_every": 0.1 }
//! }
//! ```

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coupling::{CouplingKind, EdgeCoupling, Elementwise, LinkPotential};
use crate::dynamics::{NetworkProblem, StackedState};
use crate::error::ZgsError;
use crate::graph::Graph;
use crate::objective::{ObjectiveFunction, Sample};
use crate::ode::{IntegratorConfig, Method};

pub const SCHEMA_VERSION: u32 = 1;

const GRAPH_STREAM: u64 = 1;
const OBJECTIVE_STREAM: u64 = 2;

/// A scenario that could not be read or turned into a problem instance.
/// `field` is a dotted path into the scenario document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioError {
    pub field: String,
    pub message: String,
}

impl ScenarioError {
    pub fn new(field: impl Into<String>, message: impl fmt::Display) -> Self {
        ScenarioError {
            field: field.into(),
            message: message.to_string(),
        }
    }
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl std::error::Error for ScenarioError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub dimension: usize,
    pub graph: GraphSpec,
    pub objectives: ObjectivesSpec,
    pub coupling: CouplingSpec,
    #[serde(default)]
    pub initialization: InitSpec,
    pub integrator: IntegratorSpec,
    /// Scales the Hessian of node `i` by `1 + (r - 1)(i - 1)/(N - 1)`.
    /// Quadratic objectives only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curvature_ratio: Option<f64>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSpec {
    Edges { nodes: usize, edges: Vec<[usize; 2]> },
    Path { nodes: usize },
    Ring { nodes: usize },
    Complete { nodes: usize },
    RandomConnected { nodes: usize, edge_probability: f64 },
}

impl GraphSpec {
    pub fn nodes(&self) -> usize {
        match *self {
            GraphSpec::Edges { nodes, .. }
            | GraphSpec::Path { nodes }
            | GraphSpec::Ring { nodes }
            | GraphSpec::Complete { nodes }
            | GraphSpec::RandomConnected { nodes, .. } => nodes,
        }
    }

    fn build(&self, rng: &mut ChaCha8Rng) -> Result<Graph, ScenarioError> {
        let at = |e: ZgsError| ScenarioError::new("graph", e);
        match self {
            GraphSpec::Edges { nodes, edges } => {
                let mut zero_based = Vec::with_capacity(edges.len());
                for (k, &[a, b]) in edges.iter().enumerate() {
                    for v in [a, b] {
                        if v == 0 || v > *nodes {
                            return Err(ScenarioError::new(
                                format!("graph.edges[{k}]"),
                                format!("node {v} outside 1..={nodes}"),
                            ));
                        }
                    }
                    zero_based.push((a - 1, b - 1));
                }
                Graph::new(*nodes, &zero_based).map_err(at)
            }
            GraphSpec::Path { nodes } => Graph::path(*nodes).map_err(at),
            GraphSpec::Ring { nodes } => Graph::ring(*nodes).map_err(at),
            GraphSpec::Complete { nodes } => Graph::complete(*nodes).map_err(at),
            GraphSpec::RandomConnected {
                nodes,
                edge_probability,
            } => Graph::random_connected(*nodes, *edge_probability, rng).map_err(at),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectivesSpec {
    /// One function per node, in node order.
    PerNode { functions: Vec<ObjectiveSpec> },
    /// `fᵢ(x) = (w/2)‖x - i·(1,…,1)‖²` for node label `i`.
    IndexedCenters { weight: f64 },
    /// `fᵢ(x) = ½(x - cᵢ)ᵀAᵢ(x - cᵢ)` with eigenvalues of `Aᵢ` uniform in
    /// `[min_eig, max_eig]`, random eigenvectors, and `cᵢ` uniform in
    /// `[-center_range, center_range]ⁿ`.
    RandomQuadratic {
        min_eig: f64,
        max_eig: f64,
        center_range: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveSpec {
    /// `½xᵀAx + bᵀx + c`, `A` given as rows.
    Quadratic {
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
        #[serde(default)]
        c: f64,
    },
    /// `½(x - center)ᵀW(x - center)`.
    CenteredQuadratic {
        weight: Vec<Vec<f64>>,
        center: Vec<f64>,
    },
    /// `(w/2)‖x - center‖²`.
    IsotropicQuadratic { weight: f64, center: Vec<f64> },
    /// `(θ/2)‖x‖² + Σₖ log(1 + exp(-labelₖ·aₖᵀx))`.
    Logistic { theta: f64, samples: Vec<SampleSpec> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSpec {
    pub features: Vec<f64>,
    pub label: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSpec {
    pub default: CouplingKindSpec,
    #[serde(default)]
    pub overrides: Vec<CouplingOverride>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingOverride {
    pub edge: [usize; 2],
    pub coupling: CouplingKindSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CouplingKindSpec {
    /// Gradient difference of `(w/2)‖y‖²`, i.e. `w(z - y)`.
    Linear { weight: f64 },
    /// Gradient difference of `½yᵀAy`.
    Quadratic { a: Vec<Vec<f64>> },
    /// Gradient difference of `fᵢ + fⱼ`.
    SumOfEndpoints,
    Tanh,
    Rational,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSpec {
    #[default]
    LocalMinimizers,
    Explicit { states: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase", deny_unknown_fields)]
pub enum IntegratorSpec {
    Rk4 {
        step: f64,
        t_end: f64,
        sample_every: f64,
    },
    Rk45 {
        abs_tol: f64,
        rel_tol: f64,
        t_end: f64,
        sample_every: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        h_init: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        h_min: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        h_max: Option<f64>,
    },
}

impl IntegratorSpec {
    pub fn config(&self) -> IntegratorConfig {
        match *self {
            IntegratorSpec::Rk4 {
                step,
                t_end,
                sample_every,
            } => IntegratorConfig::rk4(step, t_end, sample_every),
            IntegratorSpec::Rk45 {
                abs_tol,
                rel_tol,
                t_end,
                sample_every,
                h_init,
                h_min,
                h_max,
            } => {
                let mut cfg = IntegratorConfig::rk45(abs_tol, rel_tol, t_end, sample_every);
                if let Method::Rk45 {
                    h_init: ref mut hi,
                    h_min: ref mut lo,
                    h_max: ref mut hm,
                    ..
                } = cfg.method
                {
                    *hi = h_init.unwrap_or(*hi);
                    *lo = h_min.unwrap_or(*lo);
                    *hm = h_max.unwrap_or(*hm);
                }
                cfg
            }
        }
    }
}

/// Output file names, relative to the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_csv")]
    pub csv: String,
    #[serde(default = "default_summary")]
    pub summary: String,
}

fn default_csv() -> String {
    "trajectory.csv".into()
}

fn default_summary() -> String {
    "summary.json".into()
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            csv: default_csv(),
            summary: default_summary(),
        }
    }
}

/// A constructed problem with its integrator settings.
#[derive(Debug, Clone)]
pub struct Instance {
    pub problem: NetworkProblem,
    /// `None` means start at the local minimizers.
    pub explicit_init: Option<StackedState>,
    pub integrator: IntegratorConfig,
}

impl Instance {
    /// The configured initial state, not yet checked against the manifold.
    pub fn initial_state(&self) -> crate::error::Result<StackedState> {
        match &self.explicit_init {
            Some(x0) => Ok(x0.clone()),
            None => self.problem.local_minimizers(),
        }
    }
}

fn matrix(rows: &[Vec<f64>], n: usize, field: &str) -> Result<DMatrix<f64>, ScenarioError> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(ScenarioError::new(field, format!("expected a {n}x{n} matrix")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn vector(v: &[f64], n: usize, field: &str) -> Result<DVector<f64>, ScenarioError> {
    if v.len() != n {
        return Err(ScenarioError::new(
            field,
            format!("expected {n} entries, got {}", v.len()),
        ));
    }
    Ok(DVector::from_column_slice(v))
}

impl ObjectiveSpec {
    fn build(&self, n: usize, field: &str) -> Result<ObjectiveFunction, ScenarioError> {
        let f = match self {
            ObjectiveSpec::Quadratic { a, b, c } => ObjectiveFunction::quadratic(
                matrix(a, n, &format!("{field}.a"))?,
                vector(b, n, &format!("{field}.b"))?,
                *c,
            ),
            ObjectiveSpec::CenteredQuadratic { weight, center } => ObjectiveFunction::centered_quadratic(
                matrix(weight, n, &format!("{field}.weight"))?,
                vector(center, n, &format!("{field}.center"))?,
            ),
            ObjectiveSpec::IsotropicQuadratic { weight, center } => ObjectiveFunction::centered_quadratic(
                DMatrix::identity(n, n) * *weight,
                vector(center, n, &format!("{field}.center"))?,
            ),
            ObjectiveSpec::Logistic { theta, samples } => {
                let mut parsed = Vec::with_capacity(samples.len());
                for (k, s) in samples.iter().enumerate() {
                    parsed.push(Sample {
                        features: vector(&s.features, n, &format!("{field}.samples[{k}].features"))?,
                        label: s.label,
                    });
                }
                ObjectiveFunction::logistic(*theta, n, parsed)
            }
        };
        f.map_err(|e| ScenarioError::new(field, e))
    }
}

fn random_quadratic(
    rng: &mut ChaCha8Rng,
    n: usize,
    min_eig: f64,
    max_eig: f64,
    center_range: f64,
) -> crate::error::Result<ObjectiveFunction> {
    let raw = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let q = raw.qr().q();
    let eigs = DVector::from_fn(n, |_, _| {
        if max_eig > min_eig {
            rng.random_range(min_eig..=max_eig)
        } else {
            min_eig
        }
    });
    let a = &q * DMatrix::from_diagonal(&eigs) * q.transpose();
    let center = DVector::from_fn(n, |_, _| {
        if center_range > 0.0 {
            rng.random_range(-center_range..=center_range)
        } else {
            0.0
        }
    });
    ObjectiveFunction::centered_quadratic(a, center)
}

impl ObjectivesSpec {
    fn build(&self, n_nodes: usize, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<ObjectiveFunction>, ScenarioError> {
        match self {
            ObjectivesSpec::PerNode { functions } => {
                if functions.len() != n_nodes {
                    return Err(ScenarioError::new(
                        "objectives.functions",
                        format!("expected {n_nodes} functions (one per node), got {}", functions.len()),
                    ));
                }
                functions
                    .iter()
                    .enumerate()
                    .map(|(i, f)| f.build(n, &format!("objectives.functions[{i}]")))
                    .collect()
            }
            ObjectivesSpec::IndexedCenters { weight } => (0..n_nodes)
                .map(|i| {
                    ObjectiveFunction::centered_quadratic(
                        DMatrix::identity(n, n) * *weight,
                        DVector::from_element(n, (i + 1) as f64),
                    )
                    .map_err(|e| ScenarioError::new("objectives.weight", e))
                })
                .collect(),
            ObjectivesSpec::RandomQuadratic {
                min_eig,
                max_eig,
                center_range,
            } => {
                if !(*min_eig > 0.0 && max_eig >= min_eig && max_eig.is_finite()) {
                    return Err(ScenarioError::new(
                        "objectives.min_eig",
                        format!("need 0 < min_eig <= max_eig, got ({min_eig}, {max_eig})"),
                    ));
                }
                if !(*center_range >= 0.0 && center_range.is_finite()) {
                    return Err(ScenarioError::new(
                        "objectives.center_range",
                        format!("{center_range} must be non-negative"),
                    ));
                }
                (0..n_nodes)
                    .map(|_| {
                        random_quadratic(rng, n, *min_eig, *max_eig, *center_range)
                            .map_err(|e| ScenarioError::new("objectives", e))
                    })
                    .collect()
            }
        }
    }
}

impl CouplingKindSpec {
    fn build(
        &self,
        a: usize,
        b: usize,
        objectives: &[Arc<ObjectiveFunction>],
        n: usize,
        field: &str,
    ) -> Result<EdgeCoupling, ScenarioError> {
        let at = |e: ZgsError| ScenarioError::new(field, e);
        let kind = match self {
            CouplingKindSpec::Linear { weight } => {
                CouplingKind::GradientDiff(LinkPotential::scaled_identity(*weight, n).map_err(at)?)
            }
            CouplingKindSpec::Quadratic { a: rows } => CouplingKind::GradientDiff(
                LinkPotential::quadratic(matrix(rows, n, &format!("{field}.a"))?).map_err(at)?,
            ),
            CouplingKindSpec::SumOfEndpoints => CouplingKind::GradientDiff(
                LinkPotential::sum_of_endpoints(objectives[a].clone(), objectives[b].clone()).map_err(at)?,
            ),
            CouplingKindSpec::Tanh => CouplingKind::Elementwise(Elementwise::Tanh),
            CouplingKindSpec::Rational => CouplingKind::Elementwise(Elementwise::Rational),
        };
        EdgeCoupling::new(a, b, kind).map_err(at)
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let s: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let field = if path == "." || path == "?" { "<document>".to_string() } else { path };
            ScenarioError::new(field, e.into_inner())
        })?;
        if s.schema_version != SCHEMA_VERSION {
            return Err(ScenarioError::new(
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", s.schema_version),
            ));
        }
        Ok(s)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ScenarioError::new(path.display().to_string(), e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn build(&self) -> Result<Instance, ScenarioError> {
        let n = self.dimension;
        if n == 0 {
            return Err(ScenarioError::new("dimension", "must be at least 1"));
        }
        let mut graph_rng = ChaCha8Rng::seed_from_u64(self.seed);
        graph_rng.set_stream(GRAPH_STREAM);
        let mut objective_rng = ChaCha8Rng::seed_from_u64(self.seed);
        objective_rng.set_stream(OBJECTIVE_STREAM);

        let graph = self.graph.build(&mut graph_rng)?;
        let n_nodes = graph.n_nodes();
        let mut objectives = self.objectives.build(n_nodes, n, &mut objective_rng)?;

        if let Some(r) = self.curvature_ratio {
            if !(r > 0.0 && r.is_finite()) {
                return Err(ScenarioError::new("curvature_ratio", format!("{r} must be positive")));
            }
            for (i, f) in objectives.iter_mut().enumerate() {
                let factor = 1.0 + (r - 1.0) * i as f64 / (n_nodes - 1) as f64;
                *f = f
                    .scaled(factor)
                    .map_err(|e| ScenarioError::new("curvature_ratio", e))?;
            }
        }
        let objectives: Vec<Arc<ObjectiveFunction>> = objectives.into_iter().map(Arc::new).collect();

        let mut kinds: Vec<(&CouplingKindSpec, String)> = vec![(&self.coupling.default, "coupling.default".into()); graph.n_edges()];
        let mut overridden = vec![false; graph.n_edges()];
        for (k, o) in self.coupling.overrides.iter().enumerate() {
            let field = format!("coupling.overrides[{k}]");
            let [a, b] = o.edge;
            let idx = (a >= 1 && b >= 1)
                .then(|| graph.edge_index(a - 1, b - 1))
                .flatten()
                .ok_or_else(|| ScenarioError::new(format!("{field}.edge"), format!("{{{a},{b}}} is not an edge of the graph")))?;
            if std::mem::replace(&mut overridden[idx], true) {
                return Err(ScenarioError::new(format!("{field}.edge"), format!("edge {{{a},{b}}} overridden twice")));
            }
            kinds[idx] = (&o.coupling, format!("{field}.coupling"));
        }
        let couplings = graph
            .edges()
            .iter()
            .zip(&kinds)
            .map(|(&(a, b), (spec, field))| spec.build(a, b, &objectives, n, field))
            .collect::<Result<Vec<_>, _>>()?;

        let explicit_init = match &self.initialization {
            InitSpec::LocalMinimizers => None,
            InitSpec::Explicit { states } => {
                if states.len() != n_nodes {
                    return Err(ScenarioError::new(
                        "initialization.states",
                        format!("expected {n_nodes} node states, got {}", states.len()),
                    ));
                }
                let nodes = states
                    .iter()
                    .enumerate()
                    .map(|(i, s)| vector(s, n, &format!("initialization.states[{i}]")))
                    .collect::<Result<Vec<_>, _>>()?;
                Some(StackedState::from_nodes(&nodes).map_err(|e| ScenarioError::new("initialization.states", e))?)
            }
        };

        let integrator = self.integrator.config();
        integrator
            .validate()
            .map_err(|e| ScenarioError::new("integrator", e))?;

        let problem =
            NetworkProblem::new(graph, objectives, couplings).map_err(|e| ScenarioError::new("coupling", e))?;
        Ok(Instance {
            problem,
            explicit_init,
            integrator,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PATH3: &str = r#"{
        "schema_version": 1,
        "name": "path3",
        "dimension": 1,
        "graph": { "kind": "path", "nodes": 3 },
        "objectives": { "kind": "per_node", "functions": [
            { "kind": "isotropic_quadratic", "weight": 1.0, "center": [1.0] },
            { "kind": "isotropic_quadratic", "weight": 1.0, "center": [2.0] },
            { "kind": "isotropic_quadratic", "weight": 1.0, "center": [6.0] } ] },
        "coupling": { "default": { "kind": "linear", "weight": 1.0 } },
        "integrator": { "method": "rk4", "step": 0.001, "t_end": 8.0, "sample_every": 0.1 }
    }"#;

    fn edit(f: impl FnOnce(&mut serde_json::Value)) -> String {
        let mut v: serde_json::Value = serde_json::from_str(PATH3).unwrap();
        f(&mut v);
        v.to_string()
    }

    #[test]
    fn parses_and_builds() {
        let s = Scenario::from_json(PATH3).unwrap();
        assert_eq!(s.output, OutputSpec::default());
        let inst = s.build().unwrap();
        assert_eq!(inst.problem.n_nodes(), 3);
        assert_eq!(inst.initial_state().unwrap().as_vector().as_slice(), &[1.0, 2.0, 6.0]);
        assert_eq!(inst.integrator, IntegratorConfig::rk4(1e-3, 8.0, 0.1));
        assert_eq!(Scenario::from_json(&s.to_json()).unwrap(), s);
    }

    #[test]
    fn errors_name_the_field() {
        let bad_version = edit(|v| v["schema_version"] = 7.into());
        assert_eq!(Scenario::from_json(&bad_version).unwrap_err().field, "schema_version");

        let missing = edit(|v| {
            v.as_object_mut().unwrap().remove("integrator");
        });
        assert!(Scenario::from_json(&missing).unwrap_err().message.contains("integrator"));

        let typo = edit(|v| v["graph"]["nodez"] = 3.into());
        let e = Scenario::from_json(&typo).unwrap_err();
        assert!(e.to_string().contains("nodez"), "{e}");

        let wrong_type = edit(|v| v["objectives"]["functions"][1]["weight"] = "one".into());
        let e = Scenario::from_json(&wrong_type).unwrap_err();
        assert!(e.field.starts_with("objectives"), "{e}");
        assert!(e.message.contains("line 1 column"), "{e}");

        let short = edit(|v| v["objectives"]["functions"][2]["center"] = serde_json::json!([1.0, 2.0]));
        let e = Scenario::from_json(&short).unwrap().build().unwrap_err();
        assert_eq!(e.field, "objectives.functions[2].center");

        let off_graph = edit(|v| {
            v["coupling"]["overrides"] = serde_json::json!([{ "edge": [1, 3], "coupling": { "kind": "tanh" } }])
        });
        let e = Scenario::from_json(&off_graph).unwrap().build().unwrap_err();
        assert_eq!(e.field, "coupling.overrides[0].edge");

        let bad_edge = edit(|v| v["graph"] = serde_json::json!({ "kind": "edges", "nodes": 3, "edges": [[1, 2], [2, 4]] }));
        let e = Scenario::from_json(&bad_edge).unwrap().build().unwrap_err();
        assert_eq!(e.field, "graph.edges[1]");

        let bad_step = edit(|v| v["integrator"]["step"] = (-1.0).into());
        assert_eq!(Scenario::from_json(&bad_step).unwrap().build().unwrap_err().field, "integrator");

        assert_eq!(Scenario::from_json("{").unwrap_err().field, "<document>");
    }

    #[test]
    fn overrides_and_explicit_init() {
        let text = edit(|v| {
            v["coupling"]["overrides"] = serde_json::json!([{ "edge": [3, 2], "coupling": { "kind": "rational" } }]);
            v["initialization"] = serde_json::json!({ "kind": "explicit", "states": [[2.0], [1.0], [6.0]] });
        });
        let inst = Scenario::from_json(&text).unwrap().build().unwrap();
        assert!(matches!(inst.problem.couplings()[0].kind(), CouplingKind::GradientDiff(_)));
        assert!(matches!(
            inst.problem.couplings()[1].kind(),
            CouplingKind::Elementwise(Elementwise::Rational)
        ));
        assert_eq!(inst.initial_state().unwrap().as_vector().as_slice(), &[2.0, 1.0, 6.0]);
    }

    #[test]
    fn random_instances_follow_the_seed() {
        let text = edit(|v| {
            v["dimension"] = 2.into();
            v["seed"] = 11.into();
            v["graph"] = serde_json::json!({ "kind": "random_connected", "nodes": 7, "edge_probability": 0.3 });
            v["objectives"] = serde_json::json!({ "kind": "random_quadratic", "min_eig": 0.5, "max_eig": 2.0, "center_range": 3.0 });
        });
        let s = Scenario::from_json(&text).unwrap();
        let a = s.build().unwrap();
        let b = s.build().unwrap();
        assert_eq!(a.problem.graph(), b.problem.graph());
        assert_eq!(
            a.initial_state().unwrap().as_vector(),
            b.initial_state().unwrap().as_vector()
        );
        for f in a.problem.objectives() {
            let eig = f.hessian(&DVector::zeros(2)).unwrap().symmetric_eigenvalues();
            assert!(eig.min() >= 0.5 - 1e-12 && eig.max() <= 2.0 + 1e-12);
        }
        let mut other = s.clone();
        other.seed = 12;
        let c = other.build().unwrap();
        assert_ne!(
            a.initial_state().unwrap().as_vector(),
            c.initial_state().unwrap().as_vector()
        );
    }

    #[test]
    fn curvature_ratio_scales_linearly() {
        let text = edit(|v| v["curvature_ratio"] = 5.0.into());
        let inst = Scenario::from_json(&text).unwrap().build().unwrap();
        let x = DVector::zeros(1);
        let curv: Vec<f64> = inst
            .problem
            .objectives()
            .iter()
            .map(|f| f.hessian(&x).unwrap()[(0, 0)])
            .collect();
        assert_eq!(curv, vec![1.0, 3.0, 5.0]);

        let logistic = edit(|v| {
            v["curvature_ratio"] = 2.0.into();
            v["objectives"]["functions"][0] = serde_json::json!({
                "kind": "logistic", "theta": 1.0, "samples": [{ "features": [1.0], "label": 1.0 }]
            });
        });
        let e = Scenario::from_json(&logistic).unwrap().build().unwrap_err();
        assert_eq!(e.field, "curvature_ratio");
    }

    #[test]
    fn indexed_centers() {
        let text = edit(|v| v["objectives"] = serde_json::json!({ "kind": "indexed_centers", "weight": 2.0 }));
        let inst = Scenario::from_json(&text).unwrap().build().unwrap();
        let x0 = inst.initial_state().unwrap();
        assert!((x0.as_vector() - DVector::from_vec(vec![1.0, 2.0, 3.0])).amax() < 1e-14);
    }
}
