use alloc::string::String;

/// Failures raised by geometry, meshing, assembly and the solvers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("point ({x}, {y}) lies outside the outer domain")]
    OutsideDomain { x: f64, y: f64 },
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("meshing failed: {0}")]
    MeshFailure(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("element {element} has non-positive jacobian {jacobian}")]
    SingularElement { element: usize, jacobian: f64 },
    #[error("unknown interface {0}")]
    UnknownInterface(usize),
    #[error("incompatible Neumann data: |1·b| = {mismatch:e} exceeds {tolerance:e}·|b|")]
    IncompatibleData { mismatch: f64, tolerance: f64 },
    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("missing auxiliary solution for inclusion {0}")]
    MissingAuxiliary(usize),
    #[error("empty integration region")]
    EmptyRegion,
    #[error("degenerate radius ladder: {0}")]
    DegenerateLadder(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

pub type Result<T> = core::result::Result<T, Error>;
