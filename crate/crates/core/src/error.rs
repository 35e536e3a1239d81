use thiserror::Error;

/// Errors produced while building, simulating or analyzing a network problem.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ZgsError {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("graph is not connected")]
    Disconnected,

    #[error("node index {index} out of range 1..={n_nodes}")]
    NodeOutOfRange { index: usize, n_nodes: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid objective: {0}")]
    InvalidObjective(String),

    #[error("invalid coupling: {0}")]
    InvalidCoupling(String),

    #[error("node {node} is not an endpoint of edge {{{a},{b}}}")]
    NotAnEndpoint { node: usize, a: usize, b: usize },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    EigenNoConvergence { sweeps: usize, off_norm: f64 },

    #[error("Hessian solve failed at node {node}: matrix is not positive definite")]
    HessianSolve { node: usize },

    #[error("Newton iteration did not converge in {iterations} iterations (gradient norm {grad_norm:e})")]
    NewtonNoConvergence { iterations: usize, grad_norm: f64 },

    #[error("initial state is off the zero-gradient-sum manifold: residual {residual:e} exceeds {threshold:e}")]
    ManifoldViolation { residual: f64, threshold: f64 },

    #[error("invalid integrator configuration: {0}")]
    InvalidIntegrator(String),

    #[error("step size underflow at t = {t}: h = {h:e} < h_min = {h_min:e}")]
    StepUnderflow { t: f64, h: f64, h_min: f64 },

    #[error("non-finite state encountered at t = {t}")]
    NonFiniteState { t: f64 },

    #[error("rate analysis not applicable: {0}")]
    NotApplicable(String),

    #[error("degenerate matrix pencil: {0}")]
    DegeneratePencil(String),

    #[error("rate bound verification failed: {0}")]
    BoundVerification(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, ZgsError>;
