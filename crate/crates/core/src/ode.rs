//! Time integration of the network flow with per-sample diagnostics.
//!
//! Two integrators: classic fixed-step RK4 (the default) and the embedded
//! Dormand–Prince 5(4) pair with PI step-size control. Neither projects back
//! onto the zero-gradient-sum manifold; drift is reported in the diagnostics.

use nalgebra::DVector;

use crate::dynamics::{CheckedState, NetworkProblem, StackedState};
use crate::error::{Result, ZgsError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Rk4 {
        step: f64,
    },
    Rk45 {
        abs_tol: f64,
        rel_tol: f64,
        h_init: f64,
        h_min: f64,
        h_max: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    pub t_end: f64,
    /// Output decimation interval; a sample is also always taken at `t_end`.
    pub sample_every: f64,
}

impl IntegratorConfig {
    pub fn rk4(step: f64, t_end: f64, sample_every: f64) -> Self {
        IntegratorConfig {
            method: Method::Rk4 { step },
            t_end,
            sample_every,
        }
    }

    pub fn rk45(abs_tol: f64, rel_tol: f64, t_end: f64, sample_every: f64) -> Self {
        IntegratorConfig {
            method: Method::Rk45 {
                abs_tol,
                rel_tol,
                h_init: 1e-3,
                h_min: 1e-12,
                h_max: 0.1,
            },
            t_end,
            sample_every,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(ZgsError::InvalidIntegrator(msg));
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end {} must be positive", self.t_end));
        }
        if !(self.sample_every > 0.0) {
            return bad(format!("sample_every {} must be positive", self.sample_every));
        }
        match self.method {
            Method::Rk4 { step } => {
                if !(step > 0.0) {
                    return bad(format!("step {step} must be positive"));
                }
            }
            Method::Rk45 {
                abs_tol,
                rel_tol,
                h_init,
                h_min,
                h_max,
            } => {
                if !(abs_tol > 0.0 && rel_tol > 0.0) {
                    return bad(format!("tolerances ({abs_tol}, {rel_tol}) must be positive"));
                }
                if !(h_min > 0.0 && h_min <= h_init && h_init <= h_max) {
                    return bad(format!(
                        "need 0 < h_min <= h_init <= h_max, got ({h_min}, {h_init}, {h_max})"
                    ));
                }
            }
        }
        Ok(())
    }

    /// Sample times `0, Δ, 2Δ, …, t_end`.
    pub fn sample_times(&self) -> Vec<f64> {
        let mut times = vec![0.0];
        let mut k = 1usize;
        loop {
            let t = k as f64 * self.sample_every;
            if t >= self.t_end * (1.0 - 1e-12) {
                break;
            }
            times.push(t);
            k += 1;
        }
        times.push(self.t_end);
        times
    }
}

/// Diagnostics at one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleDiagnostics {
    pub v: f64,
    pub v_dot: f64,
    pub grad_sum_norm: f64,
    pub disagreement: f64,
    pub err_to_x_star: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
}

/// Least-squares fit of `log V` against time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// Negated slope: `V ≈ C·e^{-rate·t}`.
    pub rate: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StackedState>,
    pub diagnostics: Vec<SampleDiagnostics>,
    pub stats: StepStats,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &StackedState {
        self.states.last().expect("trajectory has at least one sample")
    }

    pub fn final_error(&self) -> f64 {
        self.diagnostics.last().map_or(f64::NAN, |d| d.err_to_x_star)
    }

    /// Largest `‖Σᵢ∇fᵢ(xᵢ(t))‖` over the samples.
    pub fn max_drift(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.grad_sum_norm).fold(0.0, f64::max)
    }

    /// Largest increase `V(t_{k+1}) - V(t_k)` between consecutive samples
    /// (non-positive when `V` is monotone).
    pub fn max_v_increase(&self) -> f64 {
        self.diagnostics
            .windows(2)
            .map(|w| w[1].v - w[0].v)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Fit over `[T/2, 0.95·T]`; the last 5% are skipped because `V` may have
    /// reached its floating-point floor there. Samples with `V <= 0` are
    /// ignored. `None` if fewer than two usable samples remain.
    pub fn fitted_decay_rate(&self) -> Option<DecayFit> {
        let t_final = *self.times.last()?;
        let (lo, hi) = (0.5 * t_final, 0.95 * t_final);
        let pts: Vec<(f64, f64)> = self
            .times
            .iter()
            .zip(&self.diagnostics)
            .filter(|(&t, d)| t >= lo && t <= hi && d.v > 0.0 && d.v.is_finite())
            .map(|(&t, d)| (t, d.v.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let t_mean = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let y_mean = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - t_mean) * (p.1 - y_mean)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - t_mean).powi(2)).sum();
        if sxx == 0.0 {
            return None;
        }
        Some(DecayFit {
            rate: -sxy / sxx,
            t_start: lo,
            t_end: hi,
            points: pts.len(),
        })
    }
}

fn diagnose(p: &NetworkProblem, x: &StackedState, x_star: &DVector<f64>) -> Result<SampleDiagnostics> {
    Ok(SampleDiagnostics {
        v: p.lyapunov(x, x_star)?,
        v_dot: p.lyapunov_rate(x)?,
        grad_sum_norm: p.gradient_sum(x)?.norm(),
        disagreement: x.disagreement(),
        err_to_x_star: x.distance_to_agreement_point(x_star),
    })
}

/// Integrates the flow from a validated initial state over `[0, t_end]`.
/// `x_star` is used only for the diagnostics.
pub fn integrate(
    p: &NetworkProblem,
    x0: &CheckedState,
    cfg: &IntegratorConfig,
    x_star: &DVector<f64>,
) -> Result<Trajectory> {
    cfg.validate()?;
    let dim = p.dim();
    let field = |x: &DVector<f64>| -> Result<DVector<f64>> {
        let s = StackedState::new(x.clone(), dim)?;
        Ok(p.vector_field(&s)?.into_vector())
    };

    let sample_times = cfg.sample_times();
    let mut traj = Trajectory {
        times: Vec::with_capacity(sample_times.len()),
        states: Vec::with_capacity(sample_times.len()),
        diagnostics: Vec::with_capacity(sample_times.len()),
        stats: StepStats::default(),
    };
    let record = |traj: &mut Trajectory, t: f64, x: &DVector<f64>| -> Result<()> {
        let s = StackedState::new(x.clone(), dim)?;
        traj.diagnostics.push(diagnose(p, &s, x_star)?);
        traj.states.push(s);
        traj.times.push(t);
        Ok(())
    };

    let mut x = x0.state().as_vector().clone();
    record(&mut traj, 0.0, &x)?;

    match cfg.method {
        Method::Rk4 { step } => {
            for w in sample_times.windows(2) {
                let (t0, t1) = (w[0], w[1]);
                let n_steps = ((t1 - t0) / step - 1e-9).ceil().max(1.0) as usize;
                let h = (t1 - t0) / n_steps as f64;
                for k in 0..n_steps {
                    x = rk4_step(&field, &x, h)?;
                    traj.stats.accepted += 1;
                    if !x.iter().all(|v| v.is_finite()) {
                        return Err(ZgsError::NonFiniteState {
                            t: t0 + (k + 1) as f64 * h,
                        });
                    }
                }
                record(&mut traj, t1, &x)?;
            }
        }
        Method::Rk45 {
            abs_tol,
            rel_tol,
            h_init,
            h_min,
            h_max,
        } => {
            let mut ctl = DormandPrince {
                abs_tol,
                rel_tol,
                h_min,
                h_max,
                h: h_init,
                err_prev: 1e-4,
                k1: field(&x)?,
            };
            let mut t = 0.0;
            for &t_next in &sample_times[1..] {
                while t < t_next {
                    let remaining = t_next - t;
                    let (x_new, h_used) = ctl.advance(&field, &x, t, remaining, &mut traj.stats)?;
                    x = x_new;
                    t = if h_used >= remaining { t_next } else { t + h_used };
                    if !x.iter().all(|v| v.is_finite()) {
                        return Err(ZgsError::NonFiniteState { t });
                    }
                }
                record(&mut traj, t_next, &x)?;
            }
        }
    }
    Ok(traj)
}

fn rk4_step<F>(f: &F, x: &DVector<f64>, h: f64) -> Result<DVector<f64>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let k1 = f(x)?;
    let k2 = f(&(x + &k1 * (0.5 * h)))?;
    let k3 = f(&(x + &k2 * (0.5 * h)))?;
    let k4 = f(&(x + &k3 * h))?;
    Ok(x + (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0))
}

// Dormand–Prince 5(4) tableau. The flow is autonomous, so the nodes c_s are not needed.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const PI_ALPHA: f64 = 0.17;
const PI_BETA: f64 = 0.04;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

struct DormandPrince {
    abs_tol: f64,
    rel_tol: f64,
    h_min: f64,
    h_max: f64,
    h: f64,
    err_prev: f64,
    /// First stage at the current point (first-same-as-last).
    k1: DVector<f64>,
}

impl DormandPrince {
    /// Takes one accepted step of length at most `remaining`; returns the new
    /// state and the step length used.
    fn advance<F>(
        &mut self,
        f: &F,
        x: &DVector<f64>,
        t: f64,
        remaining: f64,
        stats: &mut StepStats,
    ) -> Result<(DVector<f64>, f64)>
    where
        F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
    {
        loop {
            let clipped = self.h.min(self.h_max).min(remaining);
            let h = clipped;
            let mut k: Vec<DVector<f64>> = Vec::with_capacity(7);
            k.push(self.k1.clone());
            for s in 1..7 {
                let mut xs = x.clone();
                for (j, kj) in k.iter().enumerate() {
                    if A[s][j] != 0.0 {
                        xs.axpy(h * A[s][j], kj, 1.0);
                    }
                }
                k.push(f(&xs)?);
            }
            // Stage 7 is evaluated at the fifth-order solution.
            let mut x_new = x.clone();
            for (j, kj) in k.iter().take(6).enumerate() {
                if A[6][j] != 0.0 {
                    x_new.axpy(h * A[6][j], kj, 1.0);
                }
            }
            let mut err_vec = DVector::zeros(x.len());
            for (j, kj) in k.iter().enumerate() {
                if E[j] != 0.0 {
                    err_vec.axpy(h * E[j], kj, 1.0);
                }
            }
            let err = (err_vec
                .iter()
                .zip(x.iter().zip(x_new.iter()))
                .map(|(e, (a, b))| {
                    let sc = self.abs_tol + self.rel_tol * a.abs().max(b.abs());
                    (e / sc).powi(2)
                })
                .sum::<f64>()
                / x.len().max(1) as f64)
                .sqrt();

            if err.is_finite() && err <= 1.0 {
                let err = err.max(1e-10);
                let fac = (SAFETY * err.powf(-PI_ALPHA) * self.err_prev.powf(PI_BETA)).clamp(FAC_MIN, FAC_MAX);
                self.err_prev = err;
                // A step clipped to a sample boundary does not shrink the controller's h.
                if h == self.h.min(self.h_max) {
                    self.h = (h * fac).min(self.h_max);
                }
                self.k1 = k.pop().expect("seven stages");
                stats.accepted += 1;
                return Ok((x_new, h));
            }

            stats.rejected += 1;
            let fac = if err.is_finite() {
                (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, 1.0)
            } else {
                FAC_MIN
            };
            self.h = h * fac;
            if self.h < self.h_min {
                return Err(ZgsError::StepUnderflow {
                    t,
                    h: self.h,
                    h_min: self.h_min,
                });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use crate::coupling::{CouplingKind, EdgeCoupling, LinkPotential};
    use crate::graph::Graph;
    use crate::objective::ObjectiveFunction;
    use crate::oracle::solve_centralized;

    fn unit_problem(centers: &[f64]) -> NetworkProblem {
        let objectives = centers
            .iter()
            .map(|&y| Arc::new(ObjectiveFunction::scalar_quadratic(1.0, y).unwrap()))
            .collect();
        NetworkProblem::with_uniform_coupling(Graph::path(centers.len()).unwrap(), objectives, |a, b| {
            EdgeCoupling::new(a, b, CouplingKind::GradientDiff(LinkPotential::scaled_identity(1.0, 1)?))
        })
        .unwrap()
    }

    /// Closed form of the two-node unit problem with y = (0, 2).
    fn two_node_exact(t: f64) -> f64 {
        1.0 - (-2.0 * t).exp()
    }

    #[test]
    fn sample_times_cover_horizon() {
        let cfg = IntegratorConfig::rk4(1e-3, 1.0, 0.3);
        assert_eq!(cfg.sample_times(), vec![0.0, 0.3, 0.6, 0.8999999999999999, 1.0]);
        let exact = IntegratorConfig::rk4(1e-3, 1.0, 0.25).sample_times();
        assert_eq!(exact, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn config_validation() {
        assert!(IntegratorConfig::rk4(0.0, 1.0, 0.1).validate().is_err());
        assert!(IntegratorConfig::rk4(1e-3, -1.0, 0.1).validate().is_err());
        assert!(IntegratorConfig::rk4(1e-3, 1.0, 0.0).validate().is_err());
        let mut bad = IntegratorConfig::rk45(1e-8, 1e-8, 1.0, 0.1);
        if let Method::Rk45 { ref mut h_min, .. } = bad.method {
            *h_min = 1.0;
        }
        assert!(bad.validate().is_err());
    }

    #[test]
    fn two_node_closed_form_rk4() {
        let p = unit_problem(&[0.0, 2.0]);
        let x0 = p.default_initialization().unwrap();
        let x_star = solve_centralized(&p).unwrap().x_star;
        let traj = integrate(&p, &x0, &IntegratorConfig::rk4(1e-3, 2.0, 0.5), &x_star).unwrap();
        for (t, s) in traj.times.iter().zip(&traj.states) {
            assert!((s.node(0)[0] - two_node_exact(*t)).abs() < 1e-6);
            assert!((s.node(1)[0] - (2.0 - two_node_exact(*t))).abs() < 1e-6);
        }
        assert_eq!(traj.times, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn two_node_closed_form_rk45() {
        let p = unit_problem(&[0.0, 2.0]);
        let x0 = p.default_initialization().unwrap();
        let x_star = solve_centralized(&p).unwrap().x_star;
        let traj = integrate(&p, &x0, &IntegratorConfig::rk45(1e-10, 1e-10, 2.0, 0.5), &x_star).unwrap();
        for (t, s) in traj.times.iter().zip(&traj.states) {
            assert!((s.node(0)[0] - two_node_exact(*t)).abs() < 1e-8);
        }
        assert!(traj.stats.accepted > 0);
    }

    #[test]
    fn equilibrium_stays_put() {
        let p = unit_problem(&[1.0, 2.0, 6.0]);
        let x_star = DVector::from_element(1, 3.0);
        let x0 = p
            .validate_initialization(StackedState::agreement(&x_star, 3), 1e-8)
            .unwrap();
        let traj = integrate(&p, &x0, &IntegratorConfig::rk4(1e-2, 1.0, 0.1), &x_star).unwrap();
        assert!(traj.diagnostics.iter().all(|d| d.v == 0.0));
        assert!(traj.states.iter().all(|s| s == x0.state()));
        assert!(traj.fitted_decay_rate().is_none());
    }

    #[test]
    fn path_converges_to_mean() {
        let p = unit_problem(&[1.0, 2.0, 6.0]);
        let x0 = p.default_initialization().unwrap();
        let x_star = solve_centralized(&p).unwrap().x_star;
        let traj = integrate(&p, &x0, &IntegratorConfig::rk4(1e-3, 12.0, 0.1), &x_star).unwrap();
        assert!(traj.final_error() <= 1e-4);
        assert!(traj.max_v_increase() <= 1e-10 * traj.diagnostics[0].v);
        let fit = traj.fitted_decay_rate().unwrap();
        // Slowest mode of the path-3 Laplacian: V decays like e^{-2t}.
        assert!((fit.rate - 2.0).abs() < 1e-3, "{fit:?}");
    }

    #[test]
    fn step_underflow_reported() {
        let p = unit_problem(&[0.0, 2.0]);
        let x0 = p.default_initialization().unwrap();
        let x_star = DVector::from_element(1, 1.0);
        let cfg = IntegratorConfig {
            method: Method::Rk45 {
                abs_tol: 1e-30,
                rel_tol: 1e-30,
                h_init: 0.5,
                h_min: 1e-2,
                h_max: 1.0,
            },
            t_end: 1.0,
            sample_every: 0.5,
        };
        assert!(matches!(
            integrate(&p, &x0, &cfg, &x_star),
            Err(ZgsError::StepUnderflow { .. })
        ));
    }
}
