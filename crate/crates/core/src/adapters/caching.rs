//! Weighted caching as fractional covering.
//!
//! Every request opens a fresh epoch variable `x_p(r)` for the requested page
//! (the fraction of `p` evicted before its next request); the variable's
//! index is the request position. Once more than `h` distinct pages have
//! been seen, request `j` emits
//! `Σ_{p ∈ B(j), p ≠ p_j} x_p(r(p, j)) / (|B(j)| - h) >= 1`.

use std::collections::BTreeSet;

use super::{check_weights, AdapterError};
use crate::engine::{CoveringState, EngineError};
use crate::model::SparseConstraint;

/// `(page, epoch)` of one covering variable; epochs count from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpochVar {
    pub page: usize,
    pub epoch: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CacheModel {
    weights: Vec<f64>,
    h: usize,
    capacity: usize,
    requests: Vec<usize>,
    current: Vec<Option<usize>>,
    seen: BTreeSet<usize>,
    registry: Vec<EpochVar>,
}

impl CacheModel {
    /// `capacity` is the trace length, which fixes the number of variables.
    pub fn new(weights: Vec<f64>, h: usize, capacity: usize) -> Result<Self, AdapterError> {
        check_weights("page", &weights, true)?;
        if h == 0 {
            return Err(AdapterError::EmptyCache);
        }
        let pages = weights.len();
        Ok(Self {
            weights,
            h,
            capacity,
            requests: vec![0; pages],
            current: vec![None; pages],
            seen: BTreeSet::new(),
            registry: Vec::with_capacity(capacity),
        })
    }

    pub fn pages(&self) -> usize {
        self.weights.len()
    }

    pub fn cache_size(&self) -> usize {
        self.h
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `r(p, j)` after the requests processed so far.
    pub fn request_count(&self, page: usize) -> usize {
        self.requests[page]
    }

    /// Index of the live epoch variable of `page`.
    pub fn current_epoch(&self, page: usize) -> Option<usize> {
        self.current[page]
    }

    /// `B(j)`, the pages requested so far.
    pub fn requested(&self) -> &BTreeSet<usize> {
        &self.seen
    }

    /// Variable registry indexed by covering-variable index.
    pub fn registry(&self) -> &[EpochVar] {
        &self.registry
    }

    /// Processes request `page`, returning the covering row it emits (if any).
    pub fn request(&mut self, page: usize) -> Result<Option<SparseConstraint>, AdapterError> {
        let pages = self.pages();
        if page >= pages {
            return Err(AdapterError::UnknownPage { page, pages });
        }
        let position = self.registry.len();
        if position >= self.capacity {
            return Err(AdapterError::TraceOverflow {
                position,
                capacity: self.capacity,
            });
        }
        self.requests[page] += 1;
        self.registry.push(EpochVar {
            page,
            epoch: self.requests[page],
        });
        self.current[page] = Some(position);
        self.seen.insert(page);
        let size = self.seen.len();
        if size <= self.h {
            return Ok(None);
        }
        let coeff = 1.0 / (size - self.h) as f64;
        let coeffs = self
            .seen
            .iter()
            .filter(|&&q| q != page)
            .map(|&q| (self.current[q].expect("requested page has an epoch"), coeff))
            .collect();
        Ok(Some(SparseConstraint::new(position, coeffs, self.capacity)?))
    }

    /// Eviction cost of each request position's variable.
    pub fn variable_costs(&self, trace: &[usize]) -> Result<Vec<f64>, AdapterError> {
        trace
            .iter()
            .map(|&p| {
                self.weights.get(p).copied().ok_or(AdapterError::UnknownPage {
                    page: p,
                    pages: self.pages(),
                })
            })
            .collect()
    }
}

/// Engine state for a trace: zero-weight pages are evicted for free, so their
/// variables start frozen at 1/2.
pub fn caching_state(model: &CacheModel, trace: &[usize]) -> Result<CoveringState, AdapterError> {
    let costs = model.variable_costs(trace)?;
    CoveringState::with_free_variables(costs).map_err(|e: EngineError| e.into())
}

/// All rows emitted by a trace, with their request positions.
pub fn caching_constraints(
    weights: Vec<f64>,
    h: usize,
    trace: &[usize],
) -> Result<(CacheModel, Vec<SparseConstraint>), AdapterError> {
    let mut model = CacheModel::new(weights, h, trace.len())?;
    let mut rows = Vec::new();
    for &p in trace {
        if let Some(row) = model.request(p)? {
            rows.push(row);
        }
    }
    Ok((model, rows))
}
