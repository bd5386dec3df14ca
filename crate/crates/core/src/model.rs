//! Covering constraints, sparse assignments and suggestion sets.
//!
//! Every constraint is stored in normalized form `Σ a_i x_i >= 1`. A raw row
//! `Σ a_i x_i >= b` with `b > 0` is divided through by `b` on construction.

use thiserror::Error;

use crate::tolerance::Tolerances;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("constraint {step} has no positive coefficients")]
    EmptyConstraint { step: usize },
    #[error("constraint {step}: right-hand side must be positive and finite, got {rhs}")]
    NonPositiveRhs { step: usize, rhs: f64 },
    #[error("constraint {step}: coefficient for variable {index} must be finite and non-negative, got {value}")]
    InvalidCoefficient { step: usize, index: usize, value: f64 },
    #[error("variable {index} appears twice")]
    DuplicateIndex { index: usize },
    #[error("variable {index} out of range for {n} variables")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("assignment value for variable {index} must lie in [0, 1], got {value}")]
    InvalidValue { index: usize, value: f64 },
    #[error("suggestion covers constraint {step} only to {value} (< 1)")]
    InfeasibleSuggestion { step: usize, value: f64 },
    #[error("step {step} carries no suggestions")]
    NoSuggestions { step: usize },
}

/// `Σ a_i x_i >= 1` over a sparse support.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseConstraint {
    step: usize,
    coeffs: Vec<(usize, f64)>,
}

impl SparseConstraint {
    /// Builds an already-normalized row. Zero coefficients are dropped.
    pub fn new(step: usize, coeffs: Vec<(usize, f64)>, n: usize) -> Result<Self, ModelError> {
        Self::from_raw(step, coeffs, 1.0, n)
    }

    /// Builds `Σ a_i x_i >= rhs` and stores it divided by `rhs`.
    pub fn from_raw(
        step: usize,
        coeffs: Vec<(usize, f64)>,
        rhs: f64,
        n: usize,
    ) -> Result<Self, ModelError> {
        if !(rhs.is_finite() && rhs > 0.0) {
            return Err(ModelError::NonPositiveRhs { step, rhs });
        }
        let mut out = Vec::with_capacity(coeffs.len());
        for (index, value) in coeffs {
            if index >= n {
                return Err(ModelError::IndexOutOfRange { index, n });
            }
            if !(value.is_finite() && value >= 0.0) {
                return Err(ModelError::InvalidCoefficient { step, index, value });
            }
            if value > 0.0 {
                out.push((index, value / rhs));
            }
        }
        out.sort_by_key(|&(i, _)| i);
        if let Some(w) = out.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(ModelError::DuplicateIndex { index: w[0].0 });
        }
        if out.is_empty() {
            return Err(ModelError::EmptyConstraint { step });
        }
        Ok(Self { step, coeffs: out })
    }

    pub fn step(&self) -> usize {
        self.step
    }

    /// `(index, a_i)` pairs sorted by index, all `a_i > 0`.
    pub fn coeffs(&self) -> &[(usize, f64)] {
        &self.coeffs
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.coeffs.iter().map(|&(i, _)| i)
    }

    pub fn coeff(&self, index: usize) -> f64 {
        self.coeffs
            .binary_search_by_key(&index, |&(i, _)| i)
            .map(|pos| self.coeffs[pos].1)
            .unwrap_or(0.0)
    }

    /// Number of nonzero coefficients.
    pub fn nonzeros(&self) -> usize {
        self.coeffs.len()
    }

    /// Constraint value of a dense vector.
    pub fn value(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(i, a)| a * x[i]).sum()
    }

    /// Constraint value of a sparse assignment.
    pub fn value_of(&self, assignment: &Assignment) -> f64 {
        self.coeffs
            .iter()
            .map(|&(i, a)| a * assignment.get(i))
            .sum()
    }

    /// Largest value reachable with every variable at 1.
    pub fn max_value(&self) -> f64 {
        self.coeffs.iter().map(|&(_, a)| a).sum()
    }
}

/// Sparse vector with entries in `[0, 1]`, sorted by index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Assignment {
    entries: Vec<(usize, f64)>,
}

impl Assignment {
    pub fn new(entries: Vec<(usize, f64)>) -> Result<Self, ModelError> {
        let mut entries = entries;
        for &(index, value) in &entries {
            if !(value.is_finite() && (0.0..=1.0).contains(&value)) {
                return Err(ModelError::InvalidValue { index, value });
            }
        }
        entries.sort_by_key(|&(i, _)| i);
        if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(ModelError::DuplicateIndex { index: w[0].0 });
        }
        Ok(Self { entries })
    }

    /// Sparse view of a dense vector. Zeros are omitted.
    pub fn from_dense(x: &[f64]) -> Result<Self, ModelError> {
        Self::new(
            x.iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(i, &v)| (i, v))
                .collect(),
        )
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map(|pos| self.entries[pos].1)
            .unwrap_or(0.0)
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.last().map(|&(i, _)| i)
    }

    pub fn to_dense(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for &(i, v) in &self.entries {
            out[i] = v;
        }
        out
    }

    /// Keeps only the entries on the constraint's support.
    pub fn restricted_to(&self, constraint: &SparseConstraint) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .copied()
                .filter(|&(i, _)| constraint.coeff(i) > 0.0)
                .collect(),
        }
    }

    fn scaled(&self, factor: f64) -> Self {
        Self {
            entries: self.entries.iter().map(|&(i, v)| (i, v * factor)).collect(),
        }
    }
}

/// Downscales `suggestion` uniformly so that it covers `constraint` exactly once.
///
/// Values within `tol.tight` of 1 are returned unchanged.
pub fn tighten(
    constraint: &SparseConstraint,
    suggestion: &Assignment,
    tol: &Tolerances,
) -> Result<Assignment, ModelError> {
    let value = constraint.value_of(suggestion);
    if value < 1.0 - tol.tight {
        return Err(ModelError::InfeasibleSuggestion {
            step: constraint.step(),
            value,
        });
    }
    if value <= 1.0 + tol.tight {
        return Ok(suggestion.clone());
    }
    Ok(suggestion.scaled(1.0 / value))
}

/// The `k` tightened suggestions for one step together with their sum.
#[derive(Debug, Clone, PartialEq)]
pub struct SuggestionSet {
    suggestions: Vec<Assignment>,
    aggregate: Vec<(usize, f64)>,
}

impl SuggestionSet {
    /// Tightens every raw suggestion against `constraint`.
    pub fn tightened(
        constraint: &SparseConstraint,
        raw: &[Assignment],
        tol: &Tolerances,
    ) -> Result<Self, ModelError> {
        if raw.is_empty() {
            return Err(ModelError::NoSuggestions {
                step: constraint.step(),
            });
        }
        let suggestions = raw
            .iter()
            .map(|s| tighten(constraint, s, tol))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_tight(suggestions))
    }

    /// Wraps suggestions that are already tight.
    pub fn from_tight(suggestions: Vec<Assignment>) -> Self {
        let aggregate = aggregate(suggestions.iter());
        Self {
            suggestions,
            aggregate,
        }
    }

    pub fn k(&self) -> usize {
        self.suggestions.len()
    }

    pub fn delta(&self) -> f64 {
        1.0 / self.k() as f64
    }

    pub fn suggestions(&self) -> &[Assignment] {
        &self.suggestions
    }

    /// `Γ_i = Σ_s x_i(s)`.
    pub fn aggregate(&self, index: usize) -> f64 {
        self.aggregate
            .binary_search_by_key(&index, |&(i, _)| i)
            .map(|pos| self.aggregate[pos].1)
            .unwrap_or(0.0)
    }
}

pub(crate) fn aggregate<'a>(items: impl Iterator<Item = &'a Assignment>) -> Vec<(usize, f64)> {
    let mut sum: std::collections::BTreeMap<usize, f64> = Default::default();
    for s in items {
        for &(i, v) in s.entries() {
            *sum.entry(i).or_default() += v;
        }
    }
    sum.into_iter().collect()
}
