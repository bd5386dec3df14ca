//! Application problems expressed as covering streams.

pub mod caching;
pub mod facility;
pub mod setcover;

use thiserror::Error;

use crate::engine::EngineError;
use crate::model::ModelError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdapterError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("element {element} belongs to no set")]
    UncoverableElement { element: usize },
    #[error("element {element} out of range for {m} elements")]
    UnknownElement { element: usize, m: usize },
    #[error("set {set} out of range for {n} sets")]
    UnknownSet { set: usize, n: usize },
    #[error("weight of {what} {index} must be finite and {rule}, got {value}")]
    InvalidWeight {
        what: &'static str,
        index: usize,
        rule: &'static str,
        value: f64,
    },
    #[error("page {page} out of range for {pages} pages")]
    UnknownPage { page: usize, pages: usize },
    #[error("cache size must be at least 1")]
    EmptyCache,
    #[error("request {position} exceeds the declared trace length {capacity}")]
    TraceOverflow { position: usize, capacity: usize },
    #[error("distance matrix is not a metric: {detail}")]
    NotMetric { detail: String },
    #[error("point {point} out of range for {points} points")]
    UnknownPoint { point: usize, points: usize },
    #[error("fractional vector has {found} entries, expected {expected}")]
    FractionalLength { expected: usize, found: usize },
    #[error("element bound {bound} is below the element count {m}")]
    ElementBound { bound: usize, m: usize },
}

pub(crate) fn check_weights(
    what: &'static str,
    weights: &[f64],
    allow_zero: bool,
) -> Result<(), AdapterError> {
    for (index, &value) in weights.iter().enumerate() {
        let ok = value.is_finite() && if allow_zero { value >= 0.0 } else { value > 0.0 };
        if !ok {
            return Err(AdapterError::InvalidWeight {
                what,
                index,
                rule: if allow_zero { "non-negative" } else { "positive" },
                value,
            });
        }
    }
    Ok(())
}
