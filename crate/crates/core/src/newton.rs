//! Damped Newton minimization for smooth strongly convex functions.
//!
//! Used both for each node's local minimizer and for the centralized oracle,
//! so the project validates against a single solver implementation.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, ZgsError};
use crate::linalg;

pub const ARMIJO: f64 = 1e-4;
pub const GRADIENT_TOL: f64 = 1e-12;
pub const MAX_ITERATIONS: usize = 200;
const MAX_HALVINGS: usize = 60;

/// A twice-differentiable function with positive definite Hessian everywhere.
pub trait SmoothConvex {
    fn dim(&self) -> usize;
    fn value(&self, x: &DVector<f64>) -> f64;
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonResult {
    pub x: DVector<f64>,
    pub grad_norm: f64,
    pub iterations: usize,
}

/// Minimizes `f` from `start` with backtracking (halving) line search.
///
/// Terminates when `‖∇f(x)‖ ≤ 1e-12 · max(1, ‖∇f(0)‖)`. The reference scale is
/// the gradient at the origin, independent of `start`, so warm starts test
/// against the same threshold as cold ones.
pub fn minimize<F: SmoothConvex + ?Sized>(f: &F, start: &DVector<f64>) -> Result<NewtonResult> {
    let n = f.dim();
    if start.len() != n {
        return Err(ZgsError::DimensionMismatch {
            expected: n,
            got: start.len(),
        });
    }
    let scale = f.gradient(&DVector::zeros(n)).norm().max(1.0);
    let tol = GRADIENT_TOL * scale;

    let mut x = start.clone();
    let mut fx = f.value(&x);
    let mut g = f.gradient(&x);
    for iteration in 0..MAX_ITERATIONS {
        let grad_norm = g.norm();
        if grad_norm <= tol {
            return Ok(NewtonResult {
                x,
                grad_norm,
                iterations: iteration,
            });
        }
        let h = f.hessian(&x);
        let step = linalg::spd_solve(&h, &(-&g)).ok_or(ZgsError::NewtonNoConvergence {
            iterations: iteration,
            grad_norm,
        })?;
        let slope = g.dot(&step);

        // Inside the quadratic-convergence region the Armijo test is dominated
        // by rounding in f, so the full step is taken unconditionally.
        let mut t = 1.0;
        if -slope > 1e-8 * (1.0 + fx.abs()) {
            let mut halvings = 0;
            loop {
                let trial = &x + &step * t;
                let f_trial = f.value(&trial);
                if f_trial <= fx + ARMIJO * t * slope {
                    break;
                }
                halvings += 1;
                if halvings > MAX_HALVINGS {
                    return Err(ZgsError::NewtonNoConvergence {
                        iterations: iteration,
                        grad_norm,
                    });
                }
                t *= 0.5;
            }
        }
        x += &step * t;
        fx = f.value(&x);
        g = f.gradient(&x);
    }
    let grad_norm = g.norm();
    if grad_norm <= tol {
        return Ok(NewtonResult {
            x,
            grad_norm,
            iterations: MAX_ITERATIONS,
        });
    }
    Err(ZgsError::NewtonNoConvergence {
        iterations: MAX_ITERATIONS,
        grad_norm,
    })
}
