//! Pairwise edge couplings `φᵢⱼ(y, z)`.
//!
//! Each edge stores one coupling, oriented for its lower-index endpoint. The
//! higher-index endpoint uses `φⱼᵢ(z, y) = -φᵢⱼ(y, z)`, so antisymmetry holds
//! by construction and only the descent inequality
//! `(y - z)ᵀφᵢⱼ(y, z) < 0` depends on the chosen kind.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Result, ZgsError};
use crate::linalg;
use crate::objective::ObjectiveFunction;

/// Strongly convex potential `g` attached to an edge; the coupling is
/// `∇g(z) - ∇g(y)`.
#[derive(Debug, Clone, PartialEq)]
pub enum LinkPotential {
    /// `g(y) = ½ yᵀAy`.
    Quadratic {
        a: DMatrix<f64>,
        min_eig: f64,
        max_eig: f64,
    },
    /// `g = fᵢ + fⱼ`; requires the endpoints to exchange their objectives.
    SumOfEndpoints(Arc<ObjectiveFunction>, Arc<ObjectiveFunction>),
}

impl LinkPotential {
    pub fn quadratic(a: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() || a.nrows() == 0 {
            return Err(ZgsError::InvalidCoupling(
                "link potential matrix must be square and non-empty".into(),
            ));
        }
        let a = (&a + a.transpose()) * 0.5;
        let (min_eig, max_eig) = linalg::eigen_extremes(&a)?;
        if min_eig <= 0.0 {
            return Err(ZgsError::InvalidCoupling(format!(
                "link potential matrix is not positive definite (smallest eigenvalue {min_eig:e})"
            )));
        }
        Ok(LinkPotential::Quadratic {
            a,
            min_eig,
            max_eig,
        })
    }

    /// `g(y) = (w/2)‖y‖²` in dimension `dim`.
    pub fn scaled_identity(weight: f64, dim: usize) -> Result<Self> {
        Self::quadratic(DMatrix::identity(dim, dim) * weight)
    }

    pub fn sum_of_endpoints(fi: Arc<ObjectiveFunction>, fj: Arc<ObjectiveFunction>) -> Result<Self> {
        if fi.dim() != fj.dim() {
            return Err(ZgsError::DimensionMismatch {
                expected: fi.dim(),
                got: fj.dim(),
            });
        }
        Ok(LinkPotential::SumOfEndpoints(fi, fj))
    }

    pub fn dim(&self) -> usize {
        match self {
            LinkPotential::Quadratic { a, .. } => a.nrows(),
            LinkPotential::SumOfEndpoints(fi, _) => fi.dim(),
        }
    }

    pub fn value(&self, y: &DVector<f64>) -> f64 {
        match self {
            LinkPotential::Quadratic { a, .. } => 0.5 * y.dot(&(a * y)),
            LinkPotential::SumOfEndpoints(fi, fj) => fi.value_unchecked(y) + fj.value_unchecked(y),
        }
    }

    pub fn gradient(&self, y: &DVector<f64>) -> DVector<f64> {
        match self {
            LinkPotential::Quadratic { a, .. } => a * y,
            LinkPotential::SumOfEndpoints(fi, fj) => {
                fi.gradient_unchecked(y) + fj.gradient_unchecked(y)
            }
        }
    }

    pub fn hessian(&self, y: &DVector<f64>) -> DMatrix<f64> {
        match self {
            LinkPotential::Quadratic { a, .. } => a.clone(),
            LinkPotential::SumOfEndpoints(fi, fj) => {
                fi.hessian_unchecked(y) + fj.hessian_unchecked(y)
            }
        }
    }

    /// `(γ, Γ)` with `γI ⪯ ∇²g ⪯ ΓI` on the ball `B(center, radius)`.
    ///
    /// Exact for quadratic potentials; for `fᵢ + fⱼ` the endpoint constants
    /// are added, which is valid but not tight.
    pub fn curvature_range(&self, center: &DVector<f64>, radius: f64) -> Result<(f64, f64)> {
        match self {
            LinkPotential::Quadratic {
                min_eig, max_eig, ..
            } => Ok((*min_eig, *max_eig)),
            LinkPotential::SumOfEndpoints(fi, fj) => {
                let lo = fi.convexity_parameter() + fj.convexity_parameter();
                let hi = fi.curvature_upper_bound(center, radius)?
                    + fj.curvature_upper_bound(center, radius)?;
                Ok((lo, hi))
            }
        }
    }
}

/// Per-coordinate couplings `ψ(yℓ, zℓ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Elementwise {
    /// `tanh(zℓ - yℓ)`, odd in the difference.
    Tanh,
    /// `(zℓ - yℓ)/(1 + yℓ²)` for the lower-index endpoint; the other endpoint
    /// uses the negation with swapped arguments.
    Rational,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CouplingKind {
    GradientDiff(LinkPotential),
    Elementwise(Elementwise),
}

/// Anything that can play the role of a pair `(φᵢⱼ, φⱼᵢ)` on an edge.
pub trait PairCoupling {
    /// `(lower, higher)` endpoint indices.
    fn endpoints(&self) -> (usize, usize);

    /// `φ_{from,other}(y, z)` with `y` the state of `from` and `z` the state
    /// of the other endpoint.
    fn couple(&self, from: usize, y: &DVector<f64>, z: &DVector<f64>) -> Result<DVector<f64>>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeCoupling {
    low: usize,
    high: usize,
    kind: CouplingKind,
}

impl EdgeCoupling {
    pub fn new(a: usize, b: usize, kind: CouplingKind) -> Result<Self> {
        if a == b {
            return Err(ZgsError::InvalidCoupling(format!("self-loop at node {a}")));
        }
        Ok(EdgeCoupling {
            low: a.min(b),
            high: a.max(b),
            kind,
        })
    }

    pub fn kind(&self) -> &CouplingKind {
        &self.kind
    }

    /// The link potential, if this is a gradient-difference coupling.
    pub fn link_potential(&self) -> Option<&LinkPotential> {
        match &self.kind {
            CouplingKind::GradientDiff(g) => Some(g),
            CouplingKind::Elementwise(_) => None,
        }
    }

    /// Expected state dimension, if the kind fixes one.
    pub fn dim(&self) -> Option<usize> {
        self.link_potential().map(LinkPotential::dim)
    }

    fn lower_orientation(&self, y: &DVector<f64>, z: &DVector<f64>) -> DVector<f64> {
        match &self.kind {
            CouplingKind::GradientDiff(g) => g.gradient(z) - g.gradient(y),
            CouplingKind::Elementwise(Elementwise::Tanh) => z.zip_map(y, |zl, yl| (zl - yl).tanh()),
            CouplingKind::Elementwise(Elementwise::Rational) => {
                z.zip_map(y, |zl, yl| (zl - yl) / (1.0 + yl * yl))
            }
        }
    }

    /// Orientation selected by `from` without any validation.
    pub(crate) fn couple_unchecked(&self, from: usize, y: &DVector<f64>, z: &DVector<f64>) -> DVector<f64> {
        if from == self.low {
            self.lower_orientation(y, z)
        } else {
            -self.lower_orientation(z, y)
        }
    }
}

impl PairCoupling for EdgeCoupling {
    fn endpoints(&self) -> (usize, usize) {
        (self.low, self.high)
    }

    fn couple(&self, from: usize, y: &DVector<f64>, z: &DVector<f64>) -> Result<DVector<f64>> {
        if from != self.low && from != self.high {
            return Err(ZgsError::NotAnEndpoint {
                node: from,
                a: self.low,
                b: self.high,
            });
        }
        if y.len() != z.len() {
            return Err(ZgsError::DimensionMismatch {
                expected: y.len(),
                got: z.len(),
            });
        }
        if let Some(d) = self.dim() {
            if y.len() != d {
                return Err(ZgsError::DimensionMismatch {
                    expected: d,
                    got: y.len(),
                });
            }
        }
        Ok(self.couple_unchecked(from, y, z))
    }
}

/// Absolute tolerance on `φᵢⱼ(y, z) + φⱼᵢ(z, y)`.
pub const ANTISYMMETRY_TOL: f64 = 1e-12;

/// Outcome of randomized antisymmetry and descent checks.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingReport {
    pub trials: usize,
    /// Largest `‖φᵢⱼ(y,z) + φⱼᵢ(z,y)‖∞` seen.
    pub max_antisymmetry_error: f64,
    /// Largest `(y - z)ᵀφ(y, z) / ‖y - z‖²` seen over both orientations;
    /// negative when descent holds everywhere sampled.
    pub worst_descent_ratio: f64,
    pub antisymmetry_failures: usize,
    pub descent_failures: usize,
}

impl CouplingReport {
    pub fn passed(&self) -> bool {
        self.antisymmetry_failures == 0 && self.descent_failures == 0
    }
}

/// Samples `trials` pairs `(y, z)` uniformly from `[-half_width, half_width]^dim`.
pub fn verify_coupling<C, R>(
    coupling: &C,
    dim: usize,
    trials: usize,
    half_width: f64,
    rng: &mut R,
) -> Result<CouplingReport>
where
    C: PairCoupling + ?Sized,
    R: Rng + ?Sized,
{
    if trials == 0 {
        return Err(ZgsError::InvalidParameter("trials must be >= 1".into()));
    }
    if !(half_width > 0.0) {
        return Err(ZgsError::InvalidParameter(format!(
            "sampling half-width {half_width} must be positive"
        )));
    }
    let (i, j) = coupling.endpoints();
    let mut report = CouplingReport {
        trials,
        max_antisymmetry_error: 0.0,
        worst_descent_ratio: f64::NEG_INFINITY,
        antisymmetry_failures: 0,
        descent_failures: 0,
    };
    for _ in 0..trials {
        let y = DVector::from_fn(dim, |_, _| rng.random_range(-half_width..=half_width));
        let z = DVector::from_fn(dim, |_, _| rng.random_range(-half_width..=half_width));
        let phi_ij = coupling.couple(i, &y, &z)?;
        let phi_ji = coupling.couple(j, &z, &y)?;

        let anti = (&phi_ij + &phi_ji).amax();
        report.max_antisymmetry_error = report.max_antisymmetry_error.max(anti);
        if !(anti <= ANTISYMMETRY_TOL) {
            report.antisymmetry_failures += 1;
        }

        let diff = &y - &z;
        let dist2 = diff.norm_squared();
        if dist2 > 0.0 {
            let inner_ij = diff.dot(&phi_ij);
            let inner_ji = (-&diff).dot(&phi_ji);
            report.worst_descent_ratio = report
                .worst_descent_ratio
                .max(inner_ij / dist2)
                .max(inner_ji / dist2);
            if !(inner_ij < 0.0 && inner_ji < 0.0) {
                report.descent_failures += 1;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn s(x: f64) -> DVector<f64> {
        DVector::from_element(1, x)
    }

    #[test]
    fn couple_examples() {
        let gd = EdgeCoupling::new(0, 1, CouplingKind::GradientDiff(LinkPotential::scaled_identity(1.0, 1).unwrap()))
            .unwrap();
        assert_eq!(gd.couple(0, &s(5.0), &s(2.0)).unwrap()[0], -3.0);
        assert_eq!(gd.couple(1, &s(5.0), &s(2.0)).unwrap()[0], -3.0);

        let tanh = EdgeCoupling::new(0, 1, CouplingKind::Elementwise(Elementwise::Tanh)).unwrap();
        let v = tanh.couple(0, &s(0.0), &s(3f64.ln())).unwrap()[0];
        assert!((v - 0.8).abs() < 1e-15);

        let rational = EdgeCoupling::new(2, 1, CouplingKind::Elementwise(Elementwise::Rational)).unwrap();
        // Lower endpoint (1): (z - y)/(1 + y²).
        assert_eq!(rational.couple(1, &s(1.0), &s(3.0)).unwrap()[0], 1.0);
        // Higher endpoint (2): -(3 - 1)/(1 + 1²), the lower endpoint's value negated.
        assert_eq!(rational.couple(2, &s(3.0), &s(1.0)).unwrap()[0], -1.0);
    }

    #[test]
    fn equal_arguments_give_zero() {
        let y = DVector::from_vec(vec![0.3, -1.2]);
        let kinds = [
            CouplingKind::GradientDiff(LinkPotential::quadratic(DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0])).unwrap()),
            CouplingKind::Elementwise(Elementwise::Tanh),
            CouplingKind::Elementwise(Elementwise::Rational),
        ];
        for kind in kinds {
            let c = EdgeCoupling::new(0, 1, kind).unwrap();
            for from in [0, 1] {
                assert!(c.couple(from, &y, &y).unwrap().iter().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn couple_errors() {
        let c = EdgeCoupling::new(0, 1, CouplingKind::GradientDiff(LinkPotential::scaled_identity(1.0, 2).unwrap()))
            .unwrap();
        assert!(matches!(
            c.couple(2, &s(0.0), &s(0.0)),
            Err(ZgsError::NotAnEndpoint { node: 2, .. })
        ));
        assert!(matches!(
            c.couple(0, &s(0.0), &s(0.0)),
            Err(ZgsError::DimensionMismatch { expected: 2, got: 1 })
        ));
        assert!(EdgeCoupling::new(1, 1, CouplingKind::Elementwise(Elementwise::Tanh)).is_err());
        assert!(LinkPotential::quadratic(DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]))).is_err());
    }

    #[test]
    fn verify_passes_for_constructive_kinds() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = DMatrix::from_row_slice(3, 3, &[3.0, 1.0, 0.0, 1.0, 2.0, 0.5, 0.0, 0.5, 1.0]);
        let kinds = [
            CouplingKind::GradientDiff(LinkPotential::quadratic(a).unwrap()),
            CouplingKind::Elementwise(Elementwise::Tanh),
            CouplingKind::Elementwise(Elementwise::Rational),
        ];
        for kind in kinds {
            let c = EdgeCoupling::new(0, 1, kind).unwrap();
            let r = verify_coupling(&c, 3, 1000, 5.0, &mut rng).unwrap();
            assert!(r.passed(), "{r:?}");
            assert!(r.worst_descent_ratio < 0.0);
        }
    }

    #[test]
    fn gradient_diff_antisymmetry_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let fi = Arc::new(
            ObjectiveFunction::logistic(
                0.7,
                2,
                vec![crate::objective::Sample {
                    features: DVector::from_vec(vec![1.0, -1.0]),
                    label: 1.0,
                }],
            )
            .unwrap(),
        );
        let fj = Arc::new(ObjectiveFunction::scalar_quadratic(1.0, 0.0).unwrap());
        assert!(LinkPotential::sum_of_endpoints(fi.clone(), fj).is_err());
        let fj = Arc::new(
            ObjectiveFunction::centered_quadratic(DMatrix::identity(2, 2) * 2.0, DVector::from_vec(vec![1.0, 1.0]))
                .unwrap(),
        );
        let c = EdgeCoupling::new(
            3,
            5,
            CouplingKind::GradientDiff(LinkPotential::sum_of_endpoints(fi, fj).unwrap()),
        )
        .unwrap();
        let r = verify_coupling(&c, 2, 500, 4.0, &mut rng).unwrap();
        assert_eq!(r.max_antisymmetry_error, 0.0);
        // g = fᵢ + fⱼ is at least (0.7 + 2)-strongly convex.
        assert!(r.worst_descent_ratio <= -2.7 + 1e-9, "{r:?}");
    }

    #[test]
    fn descent_margin_dominated_by_link_curvature() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let g = LinkPotential::quadratic(a).unwrap();
        let (gamma, _) = g.curvature_range(&DVector::zeros(2), 1.0).unwrap();
        let c = EdgeCoupling::new(0, 1, CouplingKind::GradientDiff(g)).unwrap();
        let r = verify_coupling(&c, 2, 1000, 3.0, &mut rng).unwrap();
        assert!(r.worst_descent_ratio <= -gamma + 1e-12);
    }

    /// `φᵢⱼ(y, z) = z - y` and `φⱼᵢ(z, y) = z - y`: the pair sums to `2(z - y)`.
    struct Broken;

    impl PairCoupling for Broken {
        fn endpoints(&self) -> (usize, usize) {
            (0, 1)
        }
        fn couple(&self, from: usize, y: &DVector<f64>, z: &DVector<f64>) -> Result<DVector<f64>> {
            Ok(if from == 0 { z - y } else { y - z })
        }
    }

    #[test]
    fn verify_flags_broken_antisymmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = verify_coupling(&Broken, 2, 100, 1.0, &mut rng).unwrap();
        assert!(!r.passed());
        assert_eq!(r.antisymmetry_failures, 100);
        assert!(verify_coupling(&Broken, 2, 0, 1.0, &mut rng).is_err());
    }
}
