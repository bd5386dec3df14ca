//! Benchmark oracles and verifiers.
//!
//! STATIC is the cheapest single expert followed at every step; DYNAMIC lets
//! the benchmark pick a (possibly different) suggestion at every step and pay
//! for the pointwise maximum. Both are computed exactly by enumeration, which
//! is only meant for small instances. The potential evaluators and ledger
//! verifiers replay engine traces against a DYNAMIC certificate.

mod oracle;
mod potential;
mod verify;

pub use oracle::{
    dynamic_benchmark, dynamic_benchmark_box, static_benchmark, static_benchmark_box,
    BoxCertificate, DynamicCertificate, StaticResult, DEFAULT_BUDGET,
};
pub use potential::{potential, potential_box, potential_term};
pub use verify::{
    competitive_limit, verify_box_ledger, verify_competitive_bound, verify_ledger, BoundCheck,
    LedgerCheck, LedgerReport, LedgerViolation,
};

use thiserror::Error;

use crate::box_engine::BoxSuggestionSet;
use crate::model::{SparseConstraint, SuggestionSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchmarkError {
    #[error("DYNAMIC needs {sequences} choice sequences, over the budget of {budget}; STATIC = {static_upper_bound} is an upper bound")]
    BudgetExceeded {
        sequences: u128,
        budget: u128,
        static_upper_bound: f64,
    },
    #[error("step {step} has {found} suggestions, expected {expected}")]
    InconsistentK {
        step: usize,
        expected: usize,
        found: usize,
    },
    #[error("history has {expected} steps but the trace has {found}")]
    TraceMismatch { expected: usize, found: usize },
    #[error("ledger violated at step {step}, phase {phase}: {detail}")]
    LedgerViolation {
        step: usize,
        phase: usize,
        detail: String,
    },
    #[error("output cost {output_cost} exceeds the competitive limit {limit}")]
    BoundViolation { output_cost: f64, limit: f64 },
}

/// Tightened suggestions of a full covering run.
#[derive(Debug, Clone, PartialEq)]
pub struct SuggestionHistory {
    n: usize,
    k: Option<usize>,
    costs: Vec<f64>,
    steps: Vec<(SparseConstraint, SuggestionSet)>,
}

impl SuggestionHistory {
    pub fn new(costs: Vec<f64>) -> Self {
        Self {
            n: costs.len(),
            k: None,
            costs,
            steps: Vec::new(),
        }
    }

    pub fn push(
        &mut self,
        constraint: SparseConstraint,
        suggestions: SuggestionSet,
    ) -> Result<(), BenchmarkError> {
        check_k(&mut self.k, constraint.step(), suggestions.k())?;
        self.steps.push((constraint, suggestions));
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Suggestions per step (0 for an empty history).
    pub fn k(&self) -> usize {
        self.k.unwrap_or(0)
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn steps(&self) -> &[(SparseConstraint, SuggestionSet)] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxHistoryStep {
    pub constraint: SparseConstraint,
    pub d: Vec<(usize, f64)>,
    pub suggestions: BoxSuggestionSet,
}

impl BoxHistoryStep {
    pub fn d_of(&self, index: usize) -> f64 {
        self.d
            .iter()
            .find(|&&(i, _)| i == index)
            .map(|&(_, d)| d)
            .unwrap_or(0.0)
    }
}

/// Tightened suggestions of a box-constrained run.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxHistory {
    n: usize,
    k: Option<usize>,
    costs: Vec<f64>,
    steps: Vec<BoxHistoryStep>,
}

impl BoxHistory {
    pub fn new(costs: Vec<f64>) -> Self {
        Self {
            n: costs.len(),
            k: None,
            costs,
            steps: Vec::new(),
        }
    }

    pub fn push(
        &mut self,
        constraint: SparseConstraint,
        d: Vec<(usize, f64)>,
        suggestions: BoxSuggestionSet,
    ) -> Result<(), BenchmarkError> {
        check_k(&mut self.k, constraint.step(), suggestions.k())?;
        self.steps.push(BoxHistoryStep {
            constraint,
            d,
            suggestions,
        });
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k.unwrap_or(0)
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn steps(&self) -> &[BoxHistoryStep] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

fn check_k(k: &mut Option<usize>, step: usize, found: usize) -> Result<(), BenchmarkError> {
    match *k {
        Some(expected) if expected != found => Err(BenchmarkError::InconsistentK {
            step,
            expected,
            found,
        }),
        _ => {
            *k = Some(found);
            Ok(())
        }
    }
}
