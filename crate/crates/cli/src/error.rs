use serde::Serialize;
use thiserror::Error;

/// Process exit codes.
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_NUMERICAL: u8 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}: {message}")]
    Range { line: u64, message: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Core(#[from] gamecx::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Parse { .. } => "parse",
            CliError::Range { .. } => "range",
            CliError::Io { .. } => "io",
            CliError::Data(_) => "data",
            CliError::Json(_) => "json",
            CliError::Csv(_) => "csv",
            CliError::Core(e) => match e {
                gamecx::Error::PayoffOutOfRange { .. } => "payoff_out_of_range",
                gamecx::Error::TiesNotClassifiable => "ties_not_classifiable",
                gamecx::Error::InvalidSpec(_) => "invalid_spec",
                gamecx::Error::NoEquilibrium => "no_equilibrium",
                gamecx::Error::NoConvergence { .. } => "no_convergence",
                gamecx::Error::EmptyDataset => "empty_dataset",
                gamecx::Error::NonFinite => "non_finite",
                gamecx::Error::InsufficientData(_) => "insufficient_data",
                gamecx::Error::Divergence { .. } => "divergence",
                gamecx::Error::QuotaInfeasible { .. } => "quota_infeasible",
                gamecx::Error::UnknownGame(_) => "unknown_game",
                gamecx::Error::ZeroVariance => "zero_variance",
                gamecx::Error::InvalidInput(_) => "invalid_input",
            },
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(e) => match e {
                gamecx::Error::InvalidSpec(_) => EXIT_USAGE,
                gamecx::Error::NoEquilibrium
                | gamecx::Error::NoConvergence { .. }
                | gamecx::Error::NonFinite
                | gamecx::Error::Divergence { .. }
                | gamecx::Error::ZeroVariance => EXIT_NUMERICAL,
                _ => EXIT_DATA,
            },
            _ => EXIT_DATA,
        }
    }

    /// One-line JSON record for stderr.
    pub fn record(&self) -> String {
        #[derive(Serialize)]
        struct Record<'a> {
            error: &'a str,
            exit_code: u8,
            message: String,
            #[serde(skip_serializing_if = "Option::is_none")]
            line: Option<u64>,
        }
        let line = match self {
            CliError::Parse { line, .. } | CliError::Range { line, .. } => Some(*line),
            _ => None,
        };
        let r = Record { error: self.kind(), exit_code: self.exit_code(), message: self.to_string(), line };
        serde_json::to_string(&r).unwrap_or_else(|_| format!("{{\"error\":\"{}\"}}", self.kind()))
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
