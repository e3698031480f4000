use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors surfaced by the analysis operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate parameter: lift value is numerically the origin at λ = {lambda}")]
    DegenerateParameter { lambda: String },

    #[error("no affine chart keeps both the point and its image bounded")]
    ChartFailure,

    #[error("critical tracks collide at λ = {lambda} (separation {separation:.3e})")]
    Collision { lambda: String, separation: f64 },

    #[error("root-finding budget exceeded: degree {degree} > {budget}")]
    RootBudget { degree: usize, budget: usize },

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error("family is not polynomial: infinity is not totally invariant")]
    NotPolynomial,

    #[error("operation requires phase dimension {expected}, family has k = {actual}")]
    WrongDimension { expected: usize, actual: usize },

    #[error("no clear base point found (best clearance {achieved:.3e} < {required:.3e})")]
    NoClearPoint { achieved: f64, required: f64 },

    #[error("inverse-branch level budget exceeded: {requested} > {budget} branches")]
    LevelBudget { requested: usize, budget: usize },

    #[error("ball extension failed for branch {branch} at level {level}: {detail}")]
    ExtensionFailure {
        branch: usize,
        level: usize,
        detail: String,
    },

    #[error("too few good lines: fraction {fraction:.3} < 1/2")]
    TooFewGoodLines { fraction: f64 },

    #[error("point lies outside the raster")]
    OutOfRaster,

    #[error("cycle continuation failed: {0}")]
    CycleContinuation(String),

    #[error("critical component parametrization failed: {0}")]
    ComponentParametrization(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("per-cell failure budget exceeded: {failed} of {total} cells failed")]
    CellFailureBudget { failed: usize, total: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
