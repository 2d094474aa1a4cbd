use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("edge ({0},{0}) is a loop")]
    LoopEdge(usize),

    #[error("edge ({0},{1}) appears more than once")]
    DuplicateEdge(usize, usize),

    #[error("graph has no vertices")]
    EmptyGraph,

    #[error("vertex {vertex} out of range for a graph on {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("graph is disconnected")]
    Disconnected,

    #[error("graph is a forest (no cycle exists)")]
    Forest,

    #[error("deformation space is infeasible: {0}")]
    InfeasibleSpace(String),

    #[error("vertex weight at {0} is not strictly positive")]
    NonPositiveVertexWeight(usize),

    #[error("expected a vector of length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in input")]
    NonFinite,

    #[error("cycle enumeration exceeded the cap of {0} cycles")]
    CycleBudgetExceeded(usize),

    #[error("enumeration exceeded the cap of {0} items")]
    CapExceeded(usize),

    #[error("eigensolver did not converge")]
    ConvergenceFailure,

    #[error("linear program failed: {0}")]
    LpFailure(String),

    #[error("vector is not a Laplacian eigenvector (residual {0:.3e})")]
    NotEigenvector(f64),

    #[error("gradient is not constant across edges: {0}")]
    GradientNotConstant(String),

    #[error("graph is not regular")]
    NotRegular,

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("edge switch level mismatch: {0}")]
    LevelMismatch(String),

    #[error("edge switch would create an existing edge ({0},{1})")]
    EdgeCollision(usize, usize),

    #[error("no graph with the requested degrees: {0}")]
    InfeasibleDegrees(String),

    #[error("tangent dimension {0} is too large for grid search (max 3)")]
    DimensionTooLarge(usize),

    #[error("numerical routes disagree: {0}")]
    NumericalDisagreement(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Stable snake_case name of the variant.
    pub fn code(&self) -> &'static str {
        match self {
            Error::LoopEdge(_) => "loop_edge",
            Error::DuplicateEdge(..) => "duplicate_edge",
            Error::EmptyGraph => "empty_graph",
            Error::VertexOutOfRange { .. } => "vertex_out_of_range",
            Error::Disconnected => "disconnected",
            Error::Forest => "forest",
            Error::InfeasibleSpace(_) => "infeasible_space",
            Error::NonPositiveVertexWeight(_) => "non_positive_vertex_weight",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::NonFinite => "non_finite",
            Error::CycleBudgetExceeded(_) => "cycle_budget_exceeded",
            Error::CapExceeded(_) => "cap_exceeded",
            Error::ConvergenceFailure => "convergence_failure",
            Error::LpFailure(_) => "lp_failure",
            Error::NotEigenvector(_) => "not_eigenvector",
            Error::GradientNotConstant(_) => "gradient_not_constant",
            Error::NotRegular => "not_regular",
            Error::InvariantViolation(_) => "invariant_violation",
            Error::LevelMismatch(_) => "level_mismatch",
            Error::EdgeCollision(..) => "edge_collision",
            Error::InfeasibleDegrees(_) => "infeasible_degrees",
            Error::DimensionTooLarge(_) => "dimension_too_large",
            Error::NumericalDisagreement(_) => "numerical_disagreement",
            Error::Parse(_) => "parse",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
