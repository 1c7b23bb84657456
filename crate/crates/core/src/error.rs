use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("axis {axis} out of range for a {dims}-dimensional grid")]
    AxisOutOfRange { axis: usize, dims: usize },

    #[error("grid too small: axis {axis} has {points} points, need at least {required}")]
    GridTooSmall {
        axis: usize,
        points: usize,
        required: usize,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("division by zero at point {point:?}")]
    DivisionByZero { point: Vec<f64> },

    #[error("non-finite value at point {point:?}")]
    NonFinite { point: Vec<f64> },

    #[error("expression references coordinate {index} but only {available} are bound")]
    UnboundVariable { index: usize, available: usize },

    #[error("derivative order {order} exceeds the supported maximum {max}")]
    DerivativeOrder { order: usize, max: usize },

    #[error("convergence study needs at least 3 levels, got {0}")]
    TooFewLevels(usize),

    #[error("grid spacings must be strictly decreasing")]
    SpacingNotDecreasing,

    #[error("monotonicity violated: derivative along axis {axis} is {value:e} at {point:?}")]
    Monotonicity { axis: usize, value: f64, point: Vec<f64> },

    #[error("gradient vanishes (|∇u| = {norm:e}) at {point:?}")]
    VanishingGradient { norm: f64, point: Vec<f64> },

    #[error("denominator {name} = {value:e} too close to zero at {point:?}")]
    SmallDenominator { name: String, value: f64, point: Vec<f64> },

    #[error("unsupported dimension {dims}: {reason}")]
    UnsupportedDimension { dims: usize, reason: String },

    #[error("potential vanishes on the solution range: 2W({u}) = {value:e}")]
    PotentialVanishes { u: f64, value: f64 },

    #[error("potential is negative on the solution range: W({u}) = {value:e}")]
    NegativePotential { u: f64, value: f64 },

    #[error("solution blew up at t = {t}")]
    BlowUp { t: f64 },

    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("stream function is path dependent (mismatch {mismatch:e} > {tol:e}); the flux is not curl-free in the (ψ_y, -ψ_x) sense")]
    PathDependence { mismatch: f64, tol: f64 },

    #[error("divergence of the level-set field is {value:e} (> {tol:e}); no stream function exists")]
    NotDivergenceFree { value: f64, tol: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("field is not periodic on axis {0}")]
    NotPeriodic(usize),

    #[error("axis {axis} has {points} points; spectral routines need a power of two")]
    NotPowerOfTwo { axis: usize, points: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{name} vanishes at t = {t} (value {value:e})")]
    Degenerate { name: String, t: f64, value: f64 },

    #[error("profile pre-flight failed: {equation} residual {residual:e} exceeds {tol:e}")]
    ProfilePreflight { equation: String, residual: f64, tol: f64 },

    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("malformed expression: {0}")]
    Expression(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
