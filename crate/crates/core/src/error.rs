use thiserror::Error;

use crate::bo::Trajectory;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} must be {requirement}, got {value}")]
    Domain {
        what: &'static str,
        requirement: &'static str,
        value: f64,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("covariance matrix is not positive definite even with jitter {max_jitter:e}")]
    IllConditioned { max_jitter: f64 },

    #[error("infeasible optimum-location setting: {0}")]
    InfeasibleSetting(String),

    #[error("symmetric eigensolver did not converge after {attempts} attempts")]
    EigenFailure { attempts: usize },

    #[error("need at least {needed} eigenvalues above the floor, found {found}")]
    TooFewEigenvalues { needed: usize, found: usize },

    #[error("summaries need trajectories of equal length ({0})")]
    MismatchedTrajectories(String),

    /// The black box failed mid-run. Everything evaluated before the failure
    /// is kept in `partial`.
    #[error("black-box evaluation failed at record {}: {message}", partial.records.len())]
    BlackBox {
        message: String,
        partial: Box<Trajectory>,
    },
}

impl Error {
    pub(crate) fn domain(what: &'static str, requirement: &'static str, value: f64) -> Self {
        Error::Domain {
            what,
            requirement,
            value,
        }
    }

    pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
        if expected == got {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, got })
        }
    }
}
