//! Centralized ground truth for `min_x Σᵢ fᵢ(x)`.
//!
//! The oracle sees every objective at once, which the distributed algorithm
//! never does. It exists to check trajectories, not to compete with them.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{NetworkProblem, StackedState};
use crate::error::Result;
use crate::newton::{self, SmoothConvex};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub x_star: DVector<f64>,
    /// `‖∇F(x*)‖`.
    pub grad_norm: f64,
    pub iterations: usize,
}

struct TotalObjective<'a>(&'a NetworkProblem);

impl SmoothConvex for TotalObjective<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        self.0.objectives().iter().map(|f| f.value_unchecked(x)).sum()
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(self.dim());
        for f in self.0.objectives() {
            g += f.gradient_unchecked(x);
        }
        g
    }
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(self.dim(), self.dim());
        for f in self.0.objectives() {
            h += f.hessian_unchecked(x);
        }
        h
    }
}

/// Damped Newton on `F = Σᵢ fᵢ` from the origin.
pub fn solve_centralized(p: &NetworkProblem) -> Result<OracleResult> {
    solve_centralized_from(p, &DVector::zeros(p.dim()))
}

pub fn solve_centralized_from(p: &NetworkProblem, start: &DVector<f64>) -> Result<OracleResult> {
    let r = newton::minimize(&TotalObjective(p), start)?;
    Ok(OracleResult {
        x_star: r.x,
        grad_norm: r.grad_norm,
        iterations: r.iterations,
    })
}

/// Residual tolerance for `Σᵢ∇fᵢ(x*)` in [`IntersectionReport::passed`].
pub const INTERSECTION_TOL: f64 = 1e-10;

/// Sign changes of `c ↦ Σᵢ fᵢ′(c)` along the agreement line of a scalar problem.
#[derive(Debug, Clone, PartialEq)]
pub struct AgreementScan {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
    /// Grid intervals `[c_k, c_{k+1}]` where the residual changes sign or hits zero.
    pub sign_changes: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntersectionReport {
    pub gradient_sum_norm: f64,
    pub disagreement: f64,
    /// Present only for scalar problems.
    pub scan: Option<AgreementScan>,
    pub x_star: DVector<f64>,
}

impl IntersectionReport {
    pub fn passed(&self) -> bool {
        let manifold_ok = self.gradient_sum_norm <= INTERSECTION_TOL * self.x_star.norm().max(1.0);
        let scan_ok = self.scan.as_ref().is_none_or(|s| {
            s.sign_changes.len() == 1 && {
                let (a, b) = s.sign_changes[0];
                a - s.step <= self.x_star[0] && self.x_star[0] <= b + s.step
            }
        });
        manifold_ok && self.disagreement == 0.0 && scan_ok
    }
}

/// Scans `Σᵢ fᵢ′(c)` on the grid `lo, lo + step, …, hi` (scalar problems only).
pub fn scan_agreement_line(p: &NetworkProblem, lo: f64, hi: f64, step: f64) -> Option<AgreementScan> {
    if p.dim() != 1 || !(step > 0.0) || !(hi > lo) {
        return None;
    }
    let n_points = ((hi - lo) / step).round() as usize + 1;
    let residual = |c: f64| -> f64 {
        let x = DVector::from_element(1, c);
        p.objectives().iter().map(|f| f.gradient_unchecked(&x)[0]).sum()
    };
    let grid: Vec<f64> = (0..n_points).map(|k| lo + k as f64 * step).collect();
    let values: Vec<f64> = grid.iter().map(|&c| residual(c)).collect();
    let mut sign_changes = Vec::new();
    for k in 0..n_points - 1 {
        let (r0, r1) = (values[k], values[k + 1]);
        if r0 == 0.0 || r0 * r1 < 0.0 {
            sign_changes.push((grid[k], grid[k + 1]));
        }
    }
    if values[n_points - 1] == 0.0 {
        sign_changes.push((grid[n_points - 1], grid[n_points - 1]));
    }
    Some(AgreementScan {
        lo,
        hi,
        step,
        sign_changes,
    })
}

/// Checks that `(x*, …, x*)` lies on both the agreement set and the
/// zero-gradient-sum manifold. Scalar problems additionally get a grid scan of
/// width 10 on each side of `x*` with step 0.01.
pub fn verify_agreement_manifold_intersection(
    p: &NetworkProblem,
    x_star: &DVector<f64>,
) -> Result<IntersectionReport> {
    let stacked = StackedState::agreement(x_star, p.n_nodes());
    let gradient_sum_norm = p.gradient_sum(&stacked)?.norm();
    let scan = if p.dim() == 1 {
        let c = x_star[0];
        scan_agreement_line(p, c - 10.0, c + 10.0, 0.01)
    } else {
        None
    };
    Ok(IntersectionReport {
        gradient_sum_norm,
        disagreement: stacked.disagreement(),
        scan,
        x_star: x_star.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use crate::coupling::{CouplingKind, EdgeCoupling, Elementwise, LinkPotential};
    use crate::graph::Graph;
    use crate::objective::ObjectiveFunction;

    fn scalar_problem(weights: &[f64], centers: &[f64]) -> NetworkProblem {
        let objectives = weights
            .iter()
            .zip(centers)
            .map(|(&w, &y)| Arc::new(ObjectiveFunction::scalar_quadratic(w, y).unwrap()))
            .collect();
        NetworkProblem::with_uniform_coupling(Graph::path(weights.len()).unwrap(), objectives, |a, b| {
            EdgeCoupling::new(a, b, CouplingKind::Elementwise(Elementwise::Tanh))
        })
        .unwrap()
    }

    #[test]
    fn scalar_means() {
        let p = scalar_problem(&[1.0, 1.0, 1.0], &[1.0, 2.0, 6.0]);
        let r = solve_centralized(&p).unwrap();
        assert!((r.x_star[0] - 3.0).abs() < 1e-14);
        assert!(r.iterations <= 2);

        let w = scalar_problem(&[1.0, 2.0, 1.0], &[0.0, 3.0, 2.0]);
        assert!((solve_centralized(&w).unwrap().x_star[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn weighted_average_consensus_form() {
        let ws = [
            DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]),
            DMatrix::from_row_slice(2, 2, &[1.0, -0.3, -0.3, 3.0]),
            DMatrix::identity(2, 2) * 0.5,
        ];
        let ys = [
            DVector::from_vec(vec![1.0, -1.0]),
            DVector::from_vec(vec![0.0, 4.0]),
            DVector::from_vec(vec![-2.0, 2.0]),
        ];
        let objectives = ws
            .iter()
            .zip(&ys)
            .map(|(w, y)| Arc::new(ObjectiveFunction::centered_quadratic(w.clone(), y.clone()).unwrap()))
            .collect();
        let p = NetworkProblem::with_uniform_coupling(Graph::complete(3).unwrap(), objectives, |a, b| {
            EdgeCoupling::new(a, b, CouplingKind::GradientDiff(LinkPotential::scaled_identity(1.0, 2)?))
        })
        .unwrap();
        let total_w: DMatrix<f64> = ws.iter().sum();
        let weighted: DVector<f64> = ws.iter().zip(&ys).map(|(w, y)| w * y).sum();
        let expected = total_w.lu().solve(&weighted).unwrap();
        let r = solve_centralized(&p).unwrap();
        assert!((&r.x_star - expected).amax() < 1e-12);
        let again = solve_centralized_from(&p, &r.x_star).unwrap();
        assert!(again.iterations <= 1);
    }

    #[test]
    fn total_objective_matches_term_by_term_sum() {
        let p = scalar_problem(&[1.0, 2.0, 0.5], &[0.0, 3.0, -2.0]);
        for c in [-2.0, 0.0, 1.7] {
            let x = DVector::from_element(1, c);
            let by_hand: f64 = [(1.0, 0.0), (2.0, 3.0), (0.5, -2.0)]
                .iter()
                .map(|&(w, y)| 0.5 * w * (c - y) * (c - y))
                .sum();
            assert!((p.total_objective(&x).unwrap() - by_hand).abs() < 1e-12);
        }
    }

    #[test]
    fn intersection_report() {
        let p = scalar_problem(&[1.0, 1.0, 1.0], &[1.0, 2.0, 6.0]);
        let x_star = solve_centralized(&p).unwrap().x_star;
        let report = verify_agreement_manifold_intersection(&p, &x_star).unwrap();
        assert!(report.passed(), "{report:?}");
        assert!(report.gradient_sum_norm <= 1e-10);
        assert_eq!(report.disagreement, 0.0);

        let scan = scan_agreement_line(&p, -10.0, 10.0, 0.01).unwrap();
        assert_eq!(scan.sign_changes.len(), 1);
        let (a, b) = scan.sign_changes[0];
        assert!(a >= 2.99 - 1e-9 && b <= 3.01 + 1e-9, "{a} {b}");

        let off = DVector::from_element(1, 3.5);
        assert!(!verify_agreement_manifold_intersection(&p, &off).unwrap().passed());
    }
}
