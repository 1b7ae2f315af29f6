use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grade {0} exceeds 7")]
    GradeOverflow(usize),
    #[error("index {0} outside 1..=7")]
    IndexOutOfRange(usize),
    #[error("expected {expected} vectors, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("interior product needs a form of grade at least 1")]
    InteriorOfScalar,
    #[error("grade mismatch: {0} vs {1}")]
    GradeMismatch(usize, usize),
    #[error("could not draw a nondegenerate random frame after {0} attempts")]
    DegenerateSample(usize),

    #[error("quaternionic relation violated in the {component} component (residual {residual:.3e})")]
    QuaternionRelation { component: &'static str, residual: f64 },
    #[error("matrix is not skew (residual {0:.3e})")]
    NotSkew(f64),
    #[error("matrix violates g2 relation {relation} (residual {residual:.3e})")]
    NotInG2 { relation: String, residual: f64 },
    #[error("frame invariant violated: {invariant} (residual {residual:.3e})")]
    FrameInvariant { invariant: &'static str, residual: f64 },
    #[error("internal consistency: {0}")]
    Internal(String),

    #[error("node {0:?} is too close to the grid boundary for the finite difference stencil")]
    BoundaryNode(Vec<usize>),
    #[error("lift has the wrong dimension: expected a {expected}D grid")]
    LiftDimension { expected: usize },
    #[error("malformed lift: {0}")]
    MalformedLift(String),

    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("branch point at node {0:?}: |theta_1| below threshold")]
    BranchPoint(Vec<usize>),
    #[error("profile parameter t = {t} is singular ({what})")]
    SingularProfile { t: f64, what: &'static str },
    #[error("matrix is not unitary (residual {0:.3e})")]
    NotUnitary(f64),
    #[error("gauge discontinuity between nodes {a:?} and {b:?} (phase jump {jump:.3})")]
    GaugeDiscontinuity { a: Vec<usize>, b: Vec<usize>, jump: f64 },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Whether the error reflects a violated precondition rather than malformed data.
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::Precondition(_) | Error::BranchPoint(_) | Error::LiftDimension { .. }
        )
    }
}
