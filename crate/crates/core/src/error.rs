use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A grid node given by its axis indices `(i, j)`.
pub type Node = (usize, usize);

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid resolution N = {0} is below the minimum of 8")]
    GridTooCoarse(usize),

    #[error("node ({i}, {j}) is outside the grid with N = {n}")]
    IndexOutOfRange { i: isize, j: isize, n: usize },

    #[error("field has {got} samples, expected {expected}")]
    FieldLength { got: usize, expected: usize },

    #[error("non-finite value {value} at node {node:?}")]
    NonFinite { node: Node, value: f64 },

    #[error("level-set gradient vanishes at ghost node {0:?}, both quadrant signs are zero")]
    DegenerateGradient(Node),

    #[error("upwind stencil of node {node:?} leaves the grid (reaches index ({i}, {j}))")]
    StencilOutOfGrid { node: Node, i: isize, j: isize },

    #[error(
        "ghost closure escaped the bounding box at node {0:?}; domain too close to the box edge"
    )]
    ClosureEscaped(Node),

    #[error("boundary projection from node {node:?} did not converge in {iterations} iterations (|phi| = {residual:e})")]
    ProjectionDiverged {
        node: Node,
        iterations: usize,
        residual: f64,
    },

    #[error("boundary projection from node {node:?} left the stencil trust region (theta = ({theta_x}, {theta_y}))")]
    TrustRegion {
        node: Node,
        theta_x: f64,
        theta_y: f64,
    },

    #[error("interior row at node {node:?} references inactive node {inactive:?}")]
    InactiveInStencil { node: Node, inactive: Node },

    #[error("no fully internal extrapolation stencil for node {0:?} within the shift budget")]
    ExtrapolationStencil(Node),

    #[error("no admissible 5-point derivative stencil at node {0:?}")]
    GradientStencil(Node),

    #[error("linear solve failed: {reason} (best relative residual {residual:e})")]
    Solve { reason: String, residual: f64 },

    #[error("domain too close to the bounding box at {} node(s), first {:?}", .0.len(), .0.first())]
    MarginViolation(Vec<Node>),

    #[error("zero denominator in relative error norm")]
    ZeroDenominator,

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
