use thiserror::Error;

use crate::config::ConfigError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid covariance: {0}")]
    InvalidCovariance(String),

    #[error("dimension mismatch: drift has {drift} entries but covariance is {rows}x{cols}")]
    DimensionMismatch {
        drift: usize,
        rows: usize,
        cols: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// The client is not willing to borrow even at the broker's cost of funds.
    #[error(
        "corner: no mutually beneficial loan (1'Sigma^-1(mu - r1) = {leverage_index:.6} <= gamma = {gamma})"
    )]
    NoMutuallyBeneficialLoan { leverage_index: f64, gamma: f64 },

    #[error(
        "threat dominates cooperation (growth surplus {surplus_growth:.6e}, profit surplus {surplus_profit:.6e})"
    )]
    ThreatDominates {
        surplus_growth: f64,
        surplus_profit: f64,
    },

    #[error("no viable loan market (choke rate {choke_rate:.6} <= call rate {call_rate:.6})")]
    NoViableLoanMarket { choke_rate: f64, call_rate: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Config(#[from] ConfigError),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NoMutuallyBeneficialLoan { .. }
            | Error::ThreatDominates { .. }
            | Error::NoViableLoanMarket { .. } => 3,
            Error::Numeric(_) => 4,
            _ => 2,
        }
    }

    pub fn is_infeasible(&self) -> bool {
        self.exit_code() == 3
    }
}
