use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("slope bracket [{lo}, {hi}] does not separate: both ends are {fate}")]
    BracketNotSeparating { lo: f64, hi: f64, fate: String },
    #[error("trajectory with slope {slope} failed at s = {s} before it could be classified")]
    BlowupBeforeClassification { slope: f64, s: f64 },
    #[error("newton iteration diverged after {} steps", trace.len())]
    NewtonDiverged { trace: Vec<f64> },
    #[error("newton did not reach tolerance in {iters} iterations (residual {residual:e})")]
    MaxItersExceeded { iters: usize, residual: f64 },
    #[error("point {at} outside the domain [{lo}, {hi}]")]
    OutOfDomain { at: f64, lo: f64, hi: f64 },
    #[error("profiles live on different grids")]
    GridMismatch,
    #[error("outer radicand {value:e} is not positive at x = {x}")]
    NegativeRadicand { x: f64, value: f64 },
    #[error("infeasible configuration: {0}")]
    ConfigInfeasible(String),
    #[error("empty region: {0}")]
    RegionEmpty(String),
    #[error("eigenvalue {index} moved by {shift:e} when the truncation was extended")]
    TruncationSensitive { index: usize, shift: f64 },
    #[error("mesh too coarse: {0}")]
    MeshTooCoarse(String),
    #[error("log-log fit unstable (r^2 = {r_squared})")]
    FitUnstable { r_squared: f64 },
    #[error("operator nearly singular: eigenvalue {eigenvalue:e}")]
    NearSingular { eigenvalue: f64 },
    #[error("ratio undefined at s = {s}: denominator not positive")]
    DivisionUnstable { s: f64 },
    #[error("integrand {integrand:e} at the truncation point is not negligible")]
    TailNotNegligible { integrand: f64 },
    #[error("trajectory with slope {slope} unclassified by s = {s_end}")]
    ClassificationAmbiguous { slope: f64, s_end: f64 },
    #[error("fit needs at least 4 points, got {0}")]
    NoFitPossible(usize),
    #[error("fit input has a non-positive value ({value}) at A = {a}")]
    NonPositiveValue { a: f64, value: f64 },
    #[error("computed profile violates an invariant: {0}")]
    InvariantViolated(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
