use thiserror::Error;

/// Errors raised by the solvers, simulators and the experiment driver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("generalized eigensolve failed: {0}")]
    Eigen(String),

    #[error("non-finite value {value} encountered at x = {x}")]
    NonFinite { x: f64, value: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error(
        "step operator not invertible for mode {mode}: 1 + tau*(lambda - beta^2/2) = {value:e} <= 0 \
         (lambda = {lambda}, tau = {tau}); use a smaller time step or the V2 scheme"
    )]
    RiccatiGuard {
        mode: usize,
        lambda: f64,
        tau: f64,
        value: f64,
    },

    #[error("brute-force size guard exceeded: (N - l) * dim = {size} > {limit}")]
    SizeGuard { size: usize, limit: usize },

    #[error("coarsening factor {factor} does not divide step count {steps}")]
    Coarsen { factor: usize, steps: usize },

    #[error("the exact coefficient recursion requires beta = 0 (got beta = {beta}); use gd_run_mc")]
    AdditiveNoiseRequired { beta: f64 },

    #[error("kappa = {kappa} is below the admissible bound {bound}")]
    KappaTooSmall { kappa: f64, bound: f64 },

    #[error("not enough sample paths: {got} < {required}")]
    TooFewPaths { got: usize, required: usize },

    #[error("regression needs R <= M (R = {cells}, M = {samples})")]
    TooManyCells { cells: usize, samples: usize },

    #[error("empty trajectory collection")]
    EmptyEnsemble,

    #[error("rate fit needs at least 3 points, got {0}")]
    TooFewPoints(usize),

    #[error("rate fit needs positive resolutions and errors, got ({resolution}, {error})")]
    NonPositive { resolution: f64, error: f64 },

    #[error("meshes are not nested: {coarse} elements do not divide {fine}")]
    NotNested { coarse: usize, fine: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
