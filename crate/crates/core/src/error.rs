use alloc::string::String;
use core::fmt;

/// Errors produced by the core algorithms.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A payoff lies outside the admissible range.
    PayoffOutOfRange { value: i32, max: i32 },
    /// A player's four payoffs contain a tie, so no strict ordering exists.
    TiesNotClassifiable,
    /// The model specification is internally inconsistent.
    InvalidSpec(String),
    /// Neither a pure nor an interior mixed equilibrium exists.
    NoEquilibrium,
    /// An iterative solver stopped before meeting its tolerance.
    NoConvergence { iterations: usize, residual: f64 },
    EmptyDataset,
    /// An objective or loss evaluated to NaN or infinity.
    NonFinite,
    /// A partition left a fold without records.
    InsufficientData(String),
    /// Training loss became non-finite.
    Divergence { epoch: usize },
    /// A game category could not be filled within the draw budget.
    QuotaInfeasible { category: String, found: usize, wanted: usize },
    UnknownGame(String),
    /// A correlation input has zero variance.
    ZeroVariance,
    InvalidInput(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::PayoffOutOfRange { value, max } => {
                write!(f, "payoff {value} outside [1, {max}]")
            }
            Error::TiesNotClassifiable => write!(f, "payoffs contain a tie; topology undefined"),
            Error::InvalidSpec(msg) => write!(f, "invalid model spec: {msg}"),
            Error::NoEquilibrium => write!(f, "game has no pure or interior mixed equilibrium"),
            Error::NoConvergence { iterations, residual } => write!(
                f,
                "no convergence after {iterations} iterations (residual {residual:e})"
            ),
            Error::EmptyDataset => write!(f, "dataset is empty"),
            Error::NonFinite => write!(f, "objective returned a non-finite value"),
            Error::InsufficientData(msg) => write!(f, "insufficient data: {msg}"),
            Error::Divergence { epoch } => write!(f, "training diverged at epoch {epoch}"),
            Error::QuotaInfeasible { category, found, wanted } => write!(
                f,
                "could only generate {found} of {wanted} games for {category}"
            ),
            Error::UnknownGame(id) => write!(f, "unknown game id {id:?}"),
            Error::ZeroVariance => write!(f, "series has zero variance"),
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
