use thiserror::Error;

#[derive(Debug, Error)]
pub enum FemError {
    #[error("unsupported quadrature degree {0}")]
    UnsupportedQuadrature(usize),

    #[error("vertex index {index} out of range in triangle {triangle}")]
    VertexOutOfRange { triangle: usize, index: usize },

    #[error("triangle {0} is degenerate (zero area)")]
    DegenerateTriangle(usize),

    #[error("triangle {0} is not counterclockwise")]
    Orientation(usize),

    #[error("non-conforming mesh: {0}")]
    NonConforming(String),

    #[error("invalid refinement edge {edge} for triangle {triangle}")]
    InvalidRefinementEdge { triangle: usize, edge: u8 },

    #[error("invalid triangle id {0}")]
    InvalidTriangle(usize),

    #[error("meshes do not refine the same initial triangulation")]
    DifferentRoots,

    #[error("meshes are not nested: {0}")]
    NotNested(String),

    #[error("mesh invariant violated: {0}")]
    InvariantViolation(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("linear solver failed: {0}")]
    Solver(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("data marking stalled after {rounds} rounds (mu^2 = {mu2:e}, target {target:e})")]
    DataMarkStalled { rounds: usize, mu2: f64, target: f64 },

    #[error("partition has non-square cells ({hx} x {hy})")]
    NonSquareCells { hx: f64, hy: f64 },

    #[error("unknown experiment '{0}'")]
    UnknownExperiment(String),
}

pub type Result<T> = std::result::Result<T, FemError>;
