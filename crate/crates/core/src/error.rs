// SPDX-License-Identifier: MIT OR Apache-2.0

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("series too short: need at least {min} observations, got {n}")]
    TooShort { n: usize, min: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    /// Input for which the statistic is undefined, e.g. a constant series.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{operation} requires the standard CUSUM variant")]
    VariantMismatch { operation: &'static str },

    #[error("adaptive quadrature did not converge on [{lo}, {hi}]")]
    Quadrature { lo: f64, hi: f64 },

    #[error("symmetric eigensolver did not converge after {iterations} iterations")]
    EigenNonConvergence { iterations: usize },

    #[error("design matrix is rank deficient (condition number {condition:e})")]
    RankDeficient { condition: f64 },

    #[error(
        "Gauss-Newton did not converge after {iterations} iterations \
         (objective {objective:e}, last iterate {last:?})"
    )]
    NonConvergence {
        iterations: usize,
        objective: f64,
        last: Vec<f64>,
    },

    #[error("spectrum has no weights")]
    EmptySpectrum,
}

impl Error {
    pub fn is_degenerate(&self) -> bool {
        matches!(self, Error::Degenerate(_))
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
