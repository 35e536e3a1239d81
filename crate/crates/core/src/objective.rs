//! Strongly convex local objectives with analytic derivatives.
//!
//! Two families are provided: quadratics `½xᵀAx + bᵀx + c` with `A ≻ 0`, and
//! ℓ2-regularized logistic losses
//! `(θ/2)‖x‖² + Σₖ log(1 + exp(-labelₖ·aₖᵀx))`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, ZgsError};
use crate::linalg;
use crate::newton::{self, SmoothConvex};

/// Asymmetry above which a supplied quadratic matrix triggers a warning.
pub const SYMMETRY_WARN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: f64,
    min_eig: f64,
    max_eig: f64,
}

impl Quadratic {
    /// `A` is symmetrized as `(A + Aᵀ)/2`; a warning is logged if the input
    /// asymmetry exceeds [`SYMMETRY_WARN_TOL`].
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, c: f64) -> Result<Self> {
        if !a.is_square() || a.nrows() == 0 {
            return Err(ZgsError::InvalidObjective(format!(
                "quadratic matrix must be square and non-empty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.len() != a.nrows() {
            return Err(ZgsError::DimensionMismatch {
                expected: a.nrows(),
                got: b.len(),
            });
        }
        if !a.iter().chain(b.iter()).all(|v| v.is_finite()) || !c.is_finite() {
            return Err(ZgsError::InvalidObjective("non-finite coefficient".into()));
        }
        let skew = linalg::asymmetry(&a);
        if skew > SYMMETRY_WARN_TOL {
            log::warn!("quadratic matrix asymmetric by {skew:e}; using (A + Aᵀ)/2");
        }
        let a = (&a + a.transpose()) * 0.5;
        let (min_eig, max_eig) = linalg::eigen_extremes(&a)?;
        if min_eig <= 0.0 {
            return Err(ZgsError::InvalidObjective(format!(
                "quadratic matrix is not positive definite (smallest eigenvalue {min_eig:e})"
            )));
        }
        Ok(Quadratic {
            a,
            b,
            c,
            min_eig,
            max_eig,
        })
    }

    /// `½(x - y)ᵀW(x - y)`.
    pub fn centered(weight: DMatrix<f64>, center: DVector<f64>) -> Result<Self> {
        if center.len() != weight.nrows() {
            return Err(ZgsError::DimensionMismatch {
                expected: weight.nrows(),
                got: center.len(),
            });
        }
        let sym = (&weight + weight.transpose()) * 0.5;
        let wy = &sym * &center;
        let c = 0.5 * center.dot(&wy);
        Self::new(weight, -wy, c)
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Multiplies the whole function by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(ZgsError::InvalidParameter(format!(
                "scale factor {factor} must be positive"
            )));
        }
        Self::new(&self.a * factor, &self.b * factor, self.c * factor)
    }
}

/// One labelled sample of a logistic loss.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: DVector<f64>,
    pub label: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularizedLogistic {
    theta: f64,
    samples: Vec<Sample>,
    dim: usize,
}

impl RegularizedLogistic {
    pub fn new(theta: f64, dim: usize, samples: Vec<Sample>) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(ZgsError::InvalidObjective(format!(
                "regularization {theta} must be positive"
            )));
        }
        if dim == 0 {
            return Err(ZgsError::InvalidObjective("dimension must be >= 1".into()));
        }
        for s in &samples {
            if s.features.len() != dim {
                return Err(ZgsError::DimensionMismatch {
                    expected: dim,
                    got: s.features.len(),
                });
            }
            if s.label != 1.0 && s.label != -1.0 {
                return Err(ZgsError::InvalidObjective(format!(
                    "label {} must be +1 or -1",
                    s.label
                )));
            }
            if !s.features.iter().all(|v| v.is_finite()) {
                return Err(ZgsError::InvalidObjective("non-finite feature".into()));
            }
        }
        Ok(RegularizedLogistic {
            theta,
            samples,
            dim,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    /// Global Hessian bound `θ + ¼ Σ‖aₖ‖²` from `σ′ ≤ ¼`.
    fn global_curvature_bound(&self) -> f64 {
        self.theta + 0.25 * self.samples.iter().map(|s| s.features.norm_squared()).sum::<f64>()
    }

    /// Margin argument `u = -label·aᵀx` of the softplus term.
    fn margin(s: &Sample, x: &DVector<f64>) -> f64 {
        -s.label * s.features.dot(x)
    }
}

pub(crate) fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn softplus(u: f64) -> f64 {
    if u > 0.0 {
        u + (-u).exp().ln_1p()
    } else {
        u.exp().ln_1p()
    }
}

/// `softplus(u + δ) - softplus(u) - σ(u)·δ`, accurate for small `δ`.
fn softplus_gap(u: f64, delta: f64) -> f64 {
    if delta.abs() < 1e-3 {
        let s = sigmoid(u);
        let s2 = s * (1.0 - s);
        let s3 = s2 * (1.0 - 2.0 * s);
        let s4 = s2 * (1.0 - 6.0 * s + 6.0 * s * s);
        let d2 = delta * delta;
        d2 * (0.5 * s2 + delta * (s3 / 6.0 + delta * s4 / 24.0))
    } else {
        (softplus(u + delta) - softplus(u) - sigmoid(u) * delta).max(0.0)
    }
}

/// A strongly convex local objective `fᵢ`.
#[derive(Debug, Clone, PartialEq)]
pub enum ObjectiveFunction {
    Quadratic(Quadratic),
    RegularizedLogistic(RegularizedLogistic),
}

/// Lower and upper curvature constants of one objective over a ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureBounds {
    pub theta: f64,
    pub big_theta: f64,
    pub valid_radius: f64,
}

impl ObjectiveFunction {
    pub fn quadratic(a: DMatrix<f64>, b: DVector<f64>, c: f64) -> Result<Self> {
        Quadratic::new(a, b, c).map(Self::Quadratic)
    }

    /// `½(x - y)ᵀW(x - y)`.
    pub fn centered_quadratic(weight: DMatrix<f64>, center: DVector<f64>) -> Result<Self> {
        Quadratic::centered(weight, center).map(Self::Quadratic)
    }

    /// Scalar `(w/2)(x - y)²`.
    pub fn scalar_quadratic(weight: f64, center: f64) -> Result<Self> {
        Self::centered_quadratic(
            DMatrix::from_element(1, 1, weight),
            DVector::from_element(1, center),
        )
    }

    pub fn logistic(theta: f64, dim: usize, samples: Vec<Sample>) -> Result<Self> {
        RegularizedLogistic::new(theta, dim, samples).map(Self::RegularizedLogistic)
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Quadratic(q) => q.a.nrows(),
            Self::RegularizedLogistic(l) => l.dim,
        }
    }

    fn check_dim(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() == self.dim() {
            Ok(())
        } else {
            Err(ZgsError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            })
        }
    }

    pub fn eval(&self, x: &DVector<f64>) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.value_unchecked(x))
    }

    pub fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(x)?;
        Ok(self.gradient_unchecked(x))
    }

    pub fn hessian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_dim(x)?;
        Ok(self.hessian_unchecked(x))
    }

    pub(crate) fn value_unchecked(&self, x: &DVector<f64>) -> f64 {
        match self {
            Self::Quadratic(q) => 0.5 * x.dot(&(&q.a * x)) + q.b.dot(x) + q.c,
            Self::RegularizedLogistic(l) => {
                0.5 * l.theta * x.norm_squared()
                    + l.samples
                        .iter()
                        .map(|s| softplus(RegularizedLogistic::margin(s, x)))
                        .sum::<f64>()
            }
        }
    }

    pub(crate) fn gradient_unchecked(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            Self::Quadratic(q) => &q.a * x + &q.b,
            Self::RegularizedLogistic(l) => {
                let mut g = x * l.theta;
                for s in &l.samples {
                    let w = sigmoid(RegularizedLogistic::margin(s, x));
                    g.axpy(-s.label * w, &s.features, 1.0);
                }
                g
            }
        }
    }

    pub(crate) fn hessian_unchecked(&self, x: &DVector<f64>) -> DMatrix<f64> {
        match self {
            Self::Quadratic(q) => q.a.clone(),
            Self::RegularizedLogistic(l) => {
                let mut h = DMatrix::identity(l.dim, l.dim) * l.theta;
                for s in &l.samples {
                    let sig = sigmoid(RegularizedLogistic::margin(s, x));
                    let w = sig * (1.0 - sig);
                    h.ger(w, &s.features, &s.features, 1.0);
                }
                h
            }
        }
    }

    /// True when the Hessian does not depend on `x`.
    pub fn hessian_is_constant(&self) -> bool {
        matches!(self, Self::Quadratic(_))
    }

    /// Strong convexity parameter `θᵢ`: `∇²f(x) ⪰ θᵢI` for all `x`.
    pub fn convexity_parameter(&self) -> f64 {
        match self {
            Self::Quadratic(q) => q.min_eig,
            Self::RegularizedLogistic(l) => l.theta,
        }
    }

    /// Unique minimizer, by damped Newton from the origin.
    pub fn local_minimizer(&self) -> Result<DVector<f64>> {
        self.local_minimizer_from(&DVector::zeros(self.dim()))
    }

    pub fn local_minimizer_from(&self, start: &DVector<f64>) -> Result<DVector<f64>> {
        newton::minimize(self, start).map(|r| r.x)
    }

    /// `Θᵢ` with `∇²f(x) ⪯ ΘᵢI` on the ball `B(center, radius)`. Exact for
    /// quadratics; for the logistic family it is a global bound, so the ball
    /// is ignored.
    pub fn curvature_upper_bound(&self, center: &DVector<f64>, radius: f64) -> Result<f64> {
        self.check_dim(center)?;
        if !(radius >= 0.0) {
            return Err(ZgsError::InvalidParameter(format!(
                "radius {radius} must be non-negative"
            )));
        }
        Ok(match self {
            Self::Quadratic(q) => q.max_eig,
            Self::RegularizedLogistic(l) => l.global_curvature_bound(),
        })
    }

    pub fn curvature_bounds(&self, center: &DVector<f64>, radius: f64) -> Result<CurvatureBounds> {
        Ok(CurvatureBounds {
            theta: self.convexity_parameter(),
            big_theta: self.curvature_upper_bound(center, radius)?,
            valid_radius: radius,
        })
    }

    /// Bregman gap `f(to) - f(from) - ∇f(from)ᵀ(to - from)`, evaluated in a
    /// form that avoids cancellation when `to` and `from` are close.
    pub fn bregman_gap(&self, from: &DVector<f64>, to: &DVector<f64>) -> Result<f64> {
        self.check_dim(from)?;
        self.check_dim(to)?;
        Ok(self.bregman_gap_unchecked(from, to))
    }

    pub(crate) fn bregman_gap_unchecked(&self, from: &DVector<f64>, to: &DVector<f64>) -> f64 {
        let d = to - from;
        match self {
            Self::Quadratic(q) => 0.5 * d.dot(&(&q.a * &d)),
            Self::RegularizedLogistic(l) => {
                let mut gap = 0.5 * l.theta * d.norm_squared();
                for s in &l.samples {
                    let u = RegularizedLogistic::margin(s, from);
                    let delta = -s.label * s.features.dot(&d);
                    gap += softplus_gap(u, delta);
                }
                gap
            }
        }
    }

    /// The same function multiplied by `factor > 0`. Only the quadratic
    /// family is closed under scaling.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        match self {
            Self::Quadratic(q) => q.scaled(factor).map(Self::Quadratic),
            Self::RegularizedLogistic(_) => Err(ZgsError::InvalidObjective(
                "logistic objectives cannot be rescaled within their family".into(),
            )),
        }
    }
}

impl SmoothConvex for ObjectiveFunction {
    fn dim(&self) -> usize {
        ObjectiveFunction::dim(self)
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        self.value_unchecked(x)
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.gradient_unchecked(x)
    }
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        self.hessian_unchecked(x)
    }
}
