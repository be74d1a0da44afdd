use thiserror::Error;

use crate::value::ValueInterval;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid model: {field}: {message}")]
    InvalidModel { field: String, message: String },

    #[error("invalid discount function: {0}")]
    InvalidDiscount(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state subset is empty")]
    EmptySubset,

    #[error("unknown state label `{0}`")]
    UnknownLabel(String),

    #[error("horizon cap {t_max} reached before tolerance was met; best enclosure {interval}")]
    HorizonExhausted {
        t_max: usize,
        interval: ValueInterval,
    },

    #[error("enumeration too large: {needed} candidates exceed the cap of {cap}")]
    EnumerationTooLarge { needed: u128, cap: u128 },

    #[error("membership of state `{state}` is undecidable: f = {reward}, bound {interval}")]
    IndeterminateMembership {
        state: String,
        reward: f64,
        interval: ValueInterval,
    },

    #[error("catalog contains {0} undecided regions")]
    IndeterminateCatalog(usize),

    #[error("catalog is empty")]
    EmptyCatalog,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn model(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidModel {
            field: field.into(),
            message: message.into(),
        }
    }
}
