use thiserror::Error;

use crate::support::SupportSet;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The column submatrix for `support` is numerically rank deficient.
    #[error("rank-deficient least squares on support {support:?}{}", iteration_suffix(*.iteration))]
    Singular {
        support: SupportSet,
        iteration: Option<usize>,
    },

    #[error(
        "exhaustive enumeration needs {combinations} supports but the budget is {budget}; \
         use the sampled lower bound instead"
    )]
    Capacity { combinations: u128, budget: u64 },

    #[error("domain error: {0}")]
    Domain(String),
}

fn iteration_suffix(iteration: Option<usize>) -> String {
    match iteration {
        Some(n) => format!(" at iteration {n}"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn at_iteration(self, n: usize) -> Self {
        match self {
            Error::Singular { support, .. } => Error::Singular {
                support,
                iteration: Some(n),
            },
            other => other,
        }
    }
}
