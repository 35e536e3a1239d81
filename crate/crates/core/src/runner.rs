//! Scenario execution: validation, rate analysis, simulation and
//! byte-stable output.
//!
//! Every floating-point number written to CSV or JSON uses 17 significant
//! digits in scientific notation, so repeated runs are byte-identical and
//! values round-trip exactly.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::dynamics::{CheckedState, MANIFOLD_TOL};
use crate::error::ZgsError;
use crate::graph::LaplacianSpectrum;
use crate::ode::{self, Trajectory};
use crate::oracle;
use crate::rate::{self, NodeCurvature, RateBounds, RateConstants};
use crate::scenario::{GraphSpec, InitSpec, Instance, IntegratorSpec, ObjectivesSpec, Scenario, ScenarioError};

pub const CSV_HEADER: [&str; 7] = [
    "t",
    "V",
    "V_bound_upper",
    "V_bound_lower",
    "grad_sum_norm",
    "disagreement",
    "err_to_xstar",
];

pub const SWEEP_HEADER: [&str; 7] = ["value", "fitted_rate", "rho", "rho_tilde", "final_err", "drift", "step_err"];

/// Finest step-size value is divided by this to get the reference run of a
/// step-size sweep.
pub const SWEEP_REFERENCE_REFINEMENT: f64 = 16.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RunError {
    #[error("scenario error: {0}")]
    Scenario(#[from] ScenarioError),
    #[error("{0}")]
    Manifold(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Scenario(_) => 2,
            RunError::Manifold(_) => 3,
            RunError::Numerical(_) => 4,
            RunError::Io(_) => 1,
        }
    }
}

fn numerical(stage: &str, e: ZgsError) -> RunError {
    RunError::Numerical(format!("{stage}: {e}"))
}

/// Formats `x` with 17 significant digits.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

/// A float that serializes with [`format_number`], or `null` if not finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            RawValue::from_string(format_number(self.0))
                .map_err(serde::ser::Error::custom)?
                .serialize(s)
        } else {
            s.serialize_none()
        }
    }
}

/// Results of the static analysis of a validated instance.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub x_star: DVector<f64>,
    pub oracle_grad_norm: f64,
    pub v0: f64,
    pub nodes: NodeCurvature,
    pub spectrum: LaplacianSpectrum,
    /// `Err` holds the reason the rate bounds do not apply.
    pub rate: Result<(RateConstants, RateBounds), String>,
}

impl Analysis {
    pub fn bounds(&self) -> Option<&RateBounds> {
        self.rate.as_ref().ok().map(|(_, b)| b)
    }

    pub fn constants(&self) -> Option<&RateConstants> {
        self.rate.as_ref().ok().map(|(c, _)| c)
    }
}

/// A built instance with a validated initial state.
#[derive(Debug, Clone)]
pub struct Validated {
    pub scenario: Scenario,
    pub instance: Instance,
    pub x0: CheckedState,
}

#[derive(Debug, Clone)]
pub struct Prepared {
    pub validated: Validated,
    pub analysis: Analysis,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub prepared: Prepared,
    pub trajectory: Trajectory,
    /// `(upper, lower)` per sample, when the rate analysis applies.
    pub envelopes: Option<(Vec<f64>, Vec<f64>)>,
}

/// Builds the instance and checks that the initial state lies on the manifold.
pub fn validate(s: &Scenario) -> Result<Validated, RunError> {
    let instance = s.build()?;
    let x0 = instance
        .initial_state()
        .map_err(|e| numerical("computing local minimizers", e))?;
    let x0 = match instance.problem.validate_initialization(x0, MANIFOLD_TOL) {
        Ok(x0) => x0,
        Err(e @ ZgsError::ManifoldViolation { .. }) => {
            return Err(RunError::Manifold(format!("initialization: {e}")));
        }
        Err(e) => return Err(ScenarioError::new("initialization", e).into()),
    };
    Ok(Validated {
        scenario: s.clone(),
        instance,
        x0,
    })
}

/// Validation plus oracle solve and rate bounds; no integration.
pub fn analyze(s: &Scenario) -> Result<Prepared, RunError> {
    let validated = validate(s)?;
    let p = &validated.instance.problem;
    let oracle = oracle::solve_centralized(p).map_err(|e| numerical("centralized solve", e))?;
    let x_star = oracle.x_star;
    let v0 = p
        .lyapunov(validated.x0.state(), &x_star)
        .map_err(|e| numerical("Lyapunov function", e))?;
    let nodes = rate::node_curvature(p, &validated.x0, &x_star).map_err(|e| numerical("curvature bounds", e))?;
    let spectrum = p
        .graph()
        .laplacian_spectrum()
        .map_err(|e| numerical("Laplacian spectrum", e))?;
    let rate = match rate::estimate_rate_constants_at(p, &validated.x0, &x_star) {
        Ok(c) => {
            let b = RateBounds::compute(&c, p.graph()).map_err(|e| numerical("rate bounds", e))?;
            Ok((c, b))
        }
        Err(ZgsError::NotApplicable(reason)) => Err(reason),
        Err(e) => return Err(numerical("rate constants", e)),
    };
    Ok(Prepared {
        validated,
        analysis: Analysis {
            x_star,
            oracle_grad_norm: oracle.grad_norm,
            v0,
            nodes,
            spectrum,
            rate,
        },
    })
}

pub fn run(s: &Scenario) -> Result<RunOutput, RunError> {
    let prepared = analyze(s)?;
    let v = &prepared.validated;
    let a = &prepared.analysis;
    let trajectory = ode::integrate(&v.instance.problem, &v.x0, &v.instance.integrator, &a.x_star)
        .map_err(|e| numerical("integration", e))?;
    let envelopes = match a.bounds() {
        Some(b) => Some(rate::bound_envelopes(a.v0, b, &trajectory.times).map_err(|e| numerical("envelopes", e))?),
        None => None,
    };
    Ok(RunOutput {
        prepared,
        trajectory,
        envelopes,
    })
}

/// The JSON summary of a run or analysis. Run-only fields are `null` for an
/// analysis, and rate fields are `null` when the rate analysis does not apply.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub name: String,
    pub seed: u64,
    pub x_star: Vec<Num>,
    pub oracle_grad_norm: Num,
    pub v0: Num,
    pub rho: Option<Num>,
    pub rho_tilde: Option<Num>,
    pub rho_cor_lower: Option<Num>,
    pub rho_tilde_cor_upper: Option<Num>,
    pub lambda2: Num,
    #[serde(rename = "lambdaN")]
    pub lambda_n: Num,
    pub theta: Num,
    #[serde(rename = "Theta")]
    pub big_theta: Num,
    pub gamma: Option<Num>,
    #[serde(rename = "Gamma")]
    pub big_gamma: Option<Num>,
    /// `"applicable"` or the reason the bounds do not apply.
    pub rate_analysis: String,
    pub final_err: Option<Num>,
    pub max_drift: Option<Num>,
    pub fitted_rate: Option<Num>,
    /// `[start, end]` of the log-V fit: final half of the horizon without its last 5%.
    pub fit_window: Option<[Num; 2]>,
    pub steps_accepted: Option<usize>,
    pub steps_rejected: Option<usize>,
}

impl Summary {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}

impl Prepared {
    pub fn summary(&self) -> Summary {
        let s = &self.validated.scenario;
        let a = &self.analysis;
        let b = a.bounds();
        let c = a.constants();
        let theta = a.nodes.theta_nodes.iter().copied().fold(f64::INFINITY, f64::min);
        let big_theta = a.nodes.big_theta_nodes.iter().copied().fold(0.0, f64::max);
        Summary {
            schema_version: s.schema_version,
            name: s.name.clone(),
            seed: s.seed,
            x_star: a.x_star.iter().map(|&v| Num(v)).collect(),
            oracle_grad_norm: Num(a.oracle_grad_norm),
            v0: Num(a.v0),
            rho: b.map(|b| Num(b.rho)),
            rho_tilde: b.map(|b| Num(b.rho_tilde)),
            rho_cor_lower: b.map(|b| Num(b.rho_spectral)),
            rho_tilde_cor_upper: b.map(|b| Num(b.rho_tilde_spectral)),
            lambda2: Num(a.spectrum.lambda2),
            lambda_n: Num(a.spectrum.lambda_n),
            theta: Num(theta),
            big_theta: Num(big_theta),
            gamma: c.map(|c| Num(c.gamma())),
            big_gamma: c.map(|c| Num(c.big_gamma())),
            rate_analysis: match &a.rate {
                Ok(_) => "applicable".into(),
                Err(reason) => format!("not applicable: {reason}"),
            },
            final_err: None,
            max_drift: None,
            fitted_rate: None,
            fit_window: None,
            steps_accepted: None,
            steps_rejected: None,
        }
    }
}

impl RunOutput {
    pub fn summary(&self) -> Summary {
        let mut s = self.prepared.summary();
        let t = &self.trajectory;
        let t_end = t.times.last().copied().unwrap_or(0.0);
        s.final_err = Some(Num(t.final_error()));
        s.max_drift = Some(Num(t.max_drift()));
        s.fitted_rate = t.fitted_decay_rate().map(|f| Num(f.rate));
        s.fit_window = Some([Num(0.5 * t_end), Num(0.95 * t_end)]);
        s.steps_accepted = Some(t.stats.accepted);
        s.steps_rejected = Some(t.stats.rejected);
        s
    }

    /// RFC 4180 CSV with one row per sample.
    pub fn csv(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(Vec::new());
        w.write_record(CSV_HEADER).expect("in-memory write");
        for (k, (&t, d)) in self.trajectory.times.iter().zip(&self.trajectory.diagnostics).enumerate() {
            let (upper, lower) = match &self.envelopes {
                Some((u, l)) => (format_number(u[k]), format_number(l[k])),
                None => (String::new(), String::new()),
            };
            w.write_record([
                format_number(t),
                format_number(d.v),
                upper,
                lower,
                format_number(d.grad_sum_norm),
                format_number(d.disagreement),
                format_number(d.err_to_x_star),
            ])
            .expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    /// Writes the CSV and the JSON summary under `dir`, using the file names of
    /// the scenario's output section. Returns the two paths.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf), RunError> {
        let out = &self.prepared.validated.scenario.output;
        let csv_path = dir.join(&out.csv);
        let summary_path = dir.join(&out.summary);
        write_file(&csv_path, &self.csv())?;
        write_file(&summary_path, self.summary().to_json().as_bytes())?;
        Ok((csv_path, summary_path))
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| RunError::Io(format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(path, bytes).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    StepSize,
    GraphSize,
    CurvatureRatio,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::StepSize => "step-size",
            SweepAxis::GraphSize => "graph-size",
            SweepAxis::CurvatureRatio => "curvature-ratio",
        }
    }

    /// The scenario with this axis set to `value`.
    pub fn apply(self, s: &Scenario, value: f64) -> Result<Scenario, ScenarioError> {
        let mut out = s.clone();
        match self {
            SweepAxis::StepSize => match &mut out.integrator {
                IntegratorSpec::Rk4 { step, .. } => *step = value,
                IntegratorSpec::Rk45 { .. } => {
                    return Err(ScenarioError::new(
                        "integrator.method",
                        "step-size sweeps need the fixed-step rk4 integrator",
                    ));
                }
            },
            SweepAxis::GraphSize => {
                if !(value >= 2.0 && value.fract() == 0.0) {
                    return Err(ScenarioError::new("graph.nodes", format!("{value} is not a node count >= 2")));
                }
                let n = value as usize;
                out.graph = match &s.graph {
                    GraphSpec::Path { .. } => GraphSpec::Path { nodes: n },
                    GraphSpec::Ring { .. } => GraphSpec::Ring { nodes: n },
                    GraphSpec::Complete { .. } => GraphSpec::Complete { nodes: n },
                    GraphSpec::RandomConnected { edge_probability, .. } => GraphSpec::RandomConnected {
                        nodes: n,
                        edge_probability: *edge_probability,
                    },
                    GraphSpec::Edges { .. } => {
                        return Err(ScenarioError::new("graph.kind", "explicit edge lists cannot be resized"));
                    }
                };
                if matches!(s.objectives, ObjectivesSpec::PerNode { .. }) {
                    return Err(ScenarioError::new(
                        "objectives.kind",
                        "graph-size sweeps need generated objectives (indexed_centers or random_quadratic)",
                    ));
                }
                if matches!(s.initialization, InitSpec::Explicit { .. }) {
                    return Err(ScenarioError::new(
                        "initialization.kind",
                        "graph-size sweeps need local_minimizers initialization",
                    ));
                }
            }
            SweepAxis::CurvatureRatio => out.curvature_ratio = Some(value),
        }
        Ok(out)
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "step-size" => Ok(SweepAxis::StepSize),
            "graph-size" => Ok(SweepAxis::GraphSize),
            "curvature-ratio" => Ok(SweepAxis::CurvatureRatio),
            other => Err(format!(
                "unknown axis '{other}' (expected step-size, graph-size or curvature-ratio)"
            )),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: f64,
    pub output: RunOutput,
    /// Step-size sweeps only: largest state difference over the samples against
    /// a reference run with the finest step divided by
    /// [`SWEEP_REFERENCE_REFINEMENT`].
    pub step_err: Option<f64>,
}

fn run_all(scenarios: &[Scenario]) -> Vec<Result<RunOutput, RunError>> {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(scenarios.len().max(1));
    let chunk = scenarios.len().div_ceil(workers).max(1);
    std::thread::scope(|scope| {
        let handles: Vec<_> = scenarios
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(run).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    })
}

/// Runs the scenario once per value. Independent runs execute in parallel;
/// rows keep the order of `values`. The first failing run aborts the sweep.
pub fn sweep(s: &Scenario, axis: SweepAxis, values: &[f64]) -> Result<Vec<SweepRow>, RunError> {
    let scenarios = values
        .iter()
        .map(|&v| axis.apply(s, v))
        .collect::<Result<Vec<_>, _>>()?;
    let outputs = run_all(&scenarios).into_iter().collect::<Result<Vec<_>, _>>()?;

    let reference = if axis == SweepAxis::StepSize && !values.is_empty() {
        let finest = values.iter().copied().fold(f64::INFINITY, f64::min);
        Some(run(&axis.apply(s, finest / SWEEP_REFERENCE_REFINEMENT)?)?)
    } else {
        None
    };
    Ok(values
        .iter()
        .zip(outputs)
        .map(|(&value, output)| {
            let step_err = reference.as_ref().map(|r| {
                output
                    .trajectory
                    .states
                    .iter()
                    .zip(&r.trajectory.states)
                    .map(|(a, b)| (a.as_vector() - b.as_vector()).norm())
                    .fold(0.0, f64::max)
            });
            SweepRow {
                value,
                output,
                step_err,
            }
        })
        .collect())
}

/// Aggregate CSV: one row per sweep value; empty cells where a quantity does
/// not apply.
pub fn sweep_csv(rows: &[SweepRow]) -> Vec<u8> {
    let opt = |x: Option<f64>| x.map(format_number).unwrap_or_default();
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    w.write_record(SWEEP_HEADER).expect("in-memory write");
    for row in rows {
        let t = &row.output.trajectory;
        let b = row.output.prepared.analysis.bounds();
        w.write_record([
            format_number(row.value),
            opt(t.fitted_decay_rate().map(|f| f.rate)),
            opt(b.map(|b| b.rho)),
            opt(b.map(|b| b.rho_tilde)),
            format_number(t.final_error()),
            format_number(t.max_drift()),
            opt(row.step_err),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Writes `sweep_<axis>.csv` and one `sweep_<axis>_<k>.json` summary per row
/// under `dir`.
pub fn write_sweep(rows: &[SweepRow], axis: SweepAxis, dir: &Path) -> Result<PathBuf, RunError> {
    let aggregate = dir.join(format!("sweep_{axis}.csv"));
    write_file(&aggregate, &sweep_csv(rows))?;
    for (k, row) in rows.iter().enumerate() {
        write_file(
            &dir.join(format!("sweep_{axis}_{k}.json")),
            row.output.summary().to_json().as_bytes(),
        )?;
    }
    Ok(aggregate)
}
