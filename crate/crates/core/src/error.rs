use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("evaluation at a singular point x = {x}")]
    EvaluationAtSingularity { x: f64 },
    #[error("derivative order {order} exceeds the configured cap {cap}")]
    OrderOverflow { order: usize, cap: usize },
    #[error("detected {found} sign changes but the declared zero count is {declared}")]
    ZeroCountMismatch { found: usize, declared: usize },
    #[error("polynomial has degree 0 in y")]
    DegenerateInY,
    #[error("continuation path passes within {distance:e} of a singularity")]
    PathNearSingularity { distance: f64 },
    #[error("branch jump during continuation near parameter {at}")]
    BranchJump { at: f64 },
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("chart certificates still fail after {rounds} refinement rounds")]
    BoundViolationAfterMaxDepth { rounds: usize },
    #[error("slab order violated: g1 >= g2 near x = {x}")]
    SlabOrderViolation { x: f64 },
    #[error("singularity detected inside the certification disk of chart {chart}")]
    SingularityInsideDisk { chart: usize },
    #[error("unit refinement diverged on chart {chart}: bound {bound}")]
    RefinementDiverged { chart: usize, bound: f64 },
    #[error("requested degree {degree} exceeds the cap {cap}")]
    DegreeOverflow { degree: usize, cap: usize },
    #[error("curve cannot be evaluated exactly: {0}")]
    InexactCurve(String),
    #[error("rank test failed on ball {ball}")]
    CoverTestFailed { ball: usize },
    #[error("linear program is unbounded")]
    UnboundedLp,
    #[error("curve gradient floor {rho:e} is below 1e-12")]
    SingularCurve { rho: f64 },
    #[error("grid resolution {resolution} is coarser than eps/4 = {limit}")]
    GridTooCoarse { resolution: f64, limit: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("schema version mismatch: expected {expected}, found {found}")]
    SchemaMismatch { expected: u32, found: u32 },
}
