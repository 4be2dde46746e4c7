use std::fmt;

use thiserror::Error;

/// One of the two complex channels of the e1/e2 split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    E1,
    E2,
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Channel::E1 => f.write_str("e1"),
            Channel::E2 => f.write_str("e2"),
        }
    }
}

#[derive(Debug, Error)]
pub enum RbError {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("SVD did not converge on the {0} channel")]
    SvdNonConvergence(Channel),

    #[error("non-finite values after the {update} update at iteration {iteration}")]
    NonFinite { update: &'static str, iteration: usize },

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl RbError {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        RbError::Dimension(msg.into())
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        RbError::InvalidArgument(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, RbError>;
