use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can surface.
///
/// Variants are grouped by the module that raises them; [`Error::module`]
/// and [`Error::exit_code`] are what the CLI uses to build its error JSON.
#[derive(Debug, Error)]
pub enum Error {
    // kernels
    #[error("matrix is not row-stochastic: row {row} sums to {sum}")]
    NotStochastic { row: usize, sum: f64 },
    #[error("negative or non-finite transition probability at ({row}, {col}): {value}")]
    InvalidEntry { row: usize, col: usize, value: f64 },
    #[error("chain is reducible: {closed_classes} closed communicating classes")]
    Reducible { closed_classes: usize },
    #[error("chain has transient state {state} (stationary mass zero)")]
    TransientState { state: usize },
    #[error("chain is periodic; geometric ergodicity required")]
    Periodic,
    #[error("invalid sojourn parameter: {0}")]
    InvalidSojourn(String),
    #[error("parameter {theta:?} outside domain box (coordinate {coordinate})")]
    OutOfDomain { theta: Vec<f64>, coordinate: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("adaptive quadrature did not converge: {0}")]
    QuadratureFailure(String),

    // simulator
    #[error("horizon {horizon} too short: no complete transition inside the window")]
    HorizonTooShort { horizon: f64 },
    #[error("operation requires the {expected} regime")]
    WrongRegime { expected: &'static str },

    // empirical
    #[error("path contains no transitions")]
    EmptyPath,
    #[error("non-finite value at (x={x}, y={y}, u={u:?})")]
    NonFiniteValue { x: usize, y: usize, u: Option<f64> },

    // estimators / optimisation
    #[error("Newton iteration did not converge after {iterations} iterations (|grad| = {grad_norm:e})")]
    NoConvergence { iterations: usize, grad_norm: f64 },
    #[error("iterate pinned to domain boundary at coordinate {coordinate}")]
    BoundaryHit { coordinate: usize, theta: Vec<f64> },
    #[error("Hessian is singular or not negative definite at the solution")]
    SingularHessian,
    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    // oracle
    #[error("population integral diverges: {0}")]
    DivergentIntegral(String),
    #[error("multiple maxima: best {best:?} ({best_value}), rival {rival:?} ({rival_value})")]
    MultipleMaxima {
        best: Vec<f64>,
        best_value: f64,
        rival: Vec<f64>,
        rival_value: f64,
    },

    // asymptotics
    #[error("singular matrix: {0}")]
    SingularMatrix(String),
    #[error("information identity violated: max |(-E[hess]) - E[score score^T]| = {residual:e}")]
    IdentityViolation { residual: f64 },
    #[error("bread matrix is singular")]
    SingularBread,
    #[error("state {state} never visited")]
    UnvisitedState { state: usize },

    // experiments
    #[error("oracle failed: {0}")]
    OracleFailure(String),
    #[error("{failures} of {replications} replications failed to converge")]
    ExcessiveFailures { failures: usize, replications: usize },
    #[error("perturbation invalid: clipping changed mass by {mass_change:e}")]
    PerturbationInvalid { mass_change: f64 },

    // cli / io
    #[error("config invalid: {0}")]
    ConfigInvalid(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Module that raised the error.
    pub fn module(&self) -> &'static str {
        use Error::*;
        match self {
            NotStochastic { .. } | InvalidEntry { .. } | Reducible { .. } | TransientState { .. }
            | Periodic | InvalidSojourn(_) | OutOfDomain { .. } | DimensionMismatch { .. }
            | QuadratureFailure(_) => "kernels",
            HorizonTooShort { .. } | WrongRegime { .. } => "simulator",
            EmptyPath | NonFiniteValue { .. } => "empirical",
            NoConvergence { .. } | BoundaryHit { .. } | SingularHessian | DegenerateSeries(_) => {
                "estimators"
            }
            DivergentIntegral(_) | MultipleMaxima { .. } => "oracle",
            SingularMatrix(_) | IdentityViolation { .. } | SingularBread | UnvisitedState { .. } => {
                "asymptotics"
            }
            OracleFailure(_) | ExcessiveFailures { .. } | PerturbationInvalid { .. } => {
                "experiments"
            }
            ConfigInvalid(_) | Io(_) | Csv(_) | Json(_) => "cli",
        }
    }

    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        use Error::*;
        match self {
            NotStochastic { .. } => "NotStochastic",
            InvalidEntry { .. } => "InvalidEntry",
            Reducible { .. } => "Reducible",
            TransientState { .. } => "TransientState",
            Periodic => "Periodic",
            InvalidSojourn(_) => "InvalidSojourn",
            OutOfDomain { .. } => "OutOfDomain",
            DimensionMismatch { .. } => "DimensionMismatch",
            QuadratureFailure(_) => "QuadratureFailure",
            HorizonTooShort { .. } => "HorizonTooShort",
            WrongRegime { .. } => "WrongRegime",
            EmptyPath => "EmptyPath",
            NonFiniteValue { .. } => "NonFiniteValue",
            NoConvergence { .. } => "NoConvergence",
            BoundaryHit { .. } => "BoundaryHit",
            SingularHessian => "SingularHessian",
            DegenerateSeries(_) => "DegenerateSeries",
            DivergentIntegral(_) => "DivergentIntegral",
            MultipleMaxima { .. } => "MultipleMaxima",
            SingularMatrix(_) => "SingularMatrix",
            IdentityViolation { .. } => "IdentityViolation",
            SingularBread => "SingularBread",
            UnvisitedState { .. } => "UnvisitedState",
            OracleFailure(_) => "OracleFailure",
            ExcessiveFailures { .. } => "ExcessiveFailures",
            PerturbationInvalid { .. } => "PerturbationInvalid",
            ConfigInvalid(_) => "ConfigInvalid",
            Io(_) => "Io",
            Csv(_) => "Csv",
            Json(_) => "Json",
        }
    }

    /// Process exit code: 2 config, 3 numerical, 4 convergence.
    pub fn exit_code(&self) -> i32 {
        use Error::*;
        match self {
            ConfigInvalid(_) | Io(_) | Csv(_) | Json(_) => 2,
            NoConvergence { .. } | BoundaryHit { .. } | ExcessiveFailures { .. } => 4,
            _ => 3,
        }
    }
}
