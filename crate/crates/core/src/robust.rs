//! Prediction-free baseline and the robust combination of two solvers.
//!
//! The robust run drives three engines per constraint: the suggestion-driven
//! engine (A), the baseline (B), and a meta engine (M) with k = 2 whose two
//! suggestions are A's and B's current published values on the row.

use crate::benchmarks::{competitive_limit, BenchmarkError, SuggestionHistory};
use crate::engine::{
    output_solution, raise_until_half, CoveringEngine, CoveringState, EngineError, Phase,
    RunTrace, StepTrace,
};
use crate::model::{Assignment, SparseConstraint, SuggestionSet};
use crate::tolerance::Tolerances;

/// Baseline update: offsets `1/d_j`, with `d_j` the number of nonzeros of the row.
pub fn baseline_step(
    state: &mut CoveringState,
    constraint: &SparseConstraint,
    tol: &Tolerances,
) -> Result<Vec<Phase>, EngineError> {
    let offset = 1.0 / constraint.nonzeros().max(1) as f64;
    raise_until_half(state, constraint, |_| offset, tol)
}

/// Baseline driver with the same trace format as [`CoveringEngine`].
#[derive(Debug, Clone)]
pub struct BaselineEngine {
    inner: CoveringEngine,
}

impl BaselineEngine {
    pub fn new(costs: Vec<f64>, tol: Tolerances) -> Result<Self, EngineError> {
        Ok(Self {
            inner: CoveringEngine::new(costs, tol)?,
        })
    }

    pub fn from_state(state: CoveringState, tol: Tolerances) -> Self {
        Self {
            inner: CoveringEngine::from_state(state, tol),
        }
    }

    pub fn process(&mut self, constraint: &SparseConstraint) -> Result<&StepTrace, EngineError> {
        let tol = *self.inner.tolerances();
        let phases = baseline_step(self.inner.state_mut(), constraint, &tol)?;
        Ok(self.inner.record(constraint, phases))
    }

    pub fn state(&self) -> &CoveringState {
        self.inner.state()
    }

    pub fn output(&self) -> Vec<f64> {
        self.inner.output()
    }

    pub fn output_cost(&self) -> f64 {
        self.inner.output_cost()
    }

    pub fn trace(&self) -> &RunTrace {
        self.inner.trace()
    }
}

/// `6 ln 3`, the k = 2 competitive factor of the meta engine.
pub fn robust_factor() -> f64 {
    competitive_limit(2)
}

/// Published costs after a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepCosts {
    pub step: usize,
    pub cost_a: f64,
    pub cost_b: f64,
    pub cost_m: f64,
}

#[derive(Debug, Clone)]
pub struct RobustEngine {
    a: CoveringEngine,
    b: BaselineEngine,
    m: CoveringEngine,
    /// M's tightened suggestion pairs, usable as a benchmark history.
    meta_history: SuggestionHistory,
    steps: Vec<StepCosts>,
}

/// Published values of `engine` on the row support, then tightened.
///
/// The row of the published vector is at least `1 - 2ε_sat` (an engine stops
/// within `ε_sat` of one half), so the tightening threshold is relaxed by
/// that much.
fn meta_suggestion(
    x: &[f64],
    constraint: &SparseConstraint,
    tol: &Tolerances,
) -> Result<Assignment, EngineError> {
    let published = Assignment::new(
        constraint
            .support()
            .map(|i| (i, (2.0 * x[i]).clamp(0.0, 1.0)))
            .filter(|&(_, v)| v > 0.0)
            .collect(),
    )?;
    let relaxed = Tolerances {
        tight: tol.tight + 2.0 * tol.sat,
        ..*tol
    };
    Ok(crate::model::tighten(constraint, &published, &relaxed)?)
}

impl RobustEngine {
    pub fn new(costs: Vec<f64>, tol: Tolerances) -> Result<Self, EngineError> {
        Ok(Self::from_state(CoveringState::new(costs)?, tol))
    }

    /// All three engines start from copies of `state`.
    pub fn from_state(state: CoveringState, tol: Tolerances) -> Self {
        let costs = state.costs().to_vec();
        Self {
            a: CoveringEngine::from_state(state.clone(), tol),
            b: BaselineEngine::from_state(state.clone(), tol),
            m: CoveringEngine::from_state(state, tol),
            meta_history: SuggestionHistory::new(costs),
            steps: Vec::new(),
        }
    }

    /// Advances A, B and M on one constraint (in that order).
    pub fn process(
        &mut self,
        constraint: &SparseConstraint,
        suggestions: &SuggestionSet,
    ) -> Result<StepCosts, EngineError> {
        self.a.process(constraint, suggestions)?;
        self.b.process(constraint)?;
        let tol = *self.m.tolerances();
        let pair = vec![
            meta_suggestion(self.a.state().x(), constraint, &tol)?,
            meta_suggestion(self.b.state().x(), constraint, &tol)?,
        ];
        let set = SuggestionSet::from_tight(pair);
        self.m.process(constraint, &set)?;
        self.meta_history
            .push(constraint.clone(), set)
            .expect("meta engine always has two suggestions");
        let costs = StepCosts {
            step: constraint.step(),
            cost_a: self.a.output_cost(),
            cost_b: self.b.output_cost(),
            cost_m: self.m.output_cost(),
        };
        self.steps.push(costs);
        Ok(costs)
    }

    pub fn process_raw(
        &mut self,
        constraint: &SparseConstraint,
        raw: &[Assignment],
    ) -> Result<StepCosts, EngineError> {
        let set = SuggestionSet::tightened(constraint, raw, self.m.tolerances())?;
        self.process(constraint, &set)
    }

    pub fn engine_a(&self) -> &CoveringEngine {
        &self.a
    }

    pub fn engine_b(&self) -> &BaselineEngine {
        &self.b
    }

    pub fn engine_m(&self) -> &CoveringEngine {
        &self.m
    }

    pub fn meta_history(&self) -> &SuggestionHistory {
        &self.meta_history
    }

    pub fn step_costs(&self) -> &[StepCosts] {
        &self.steps
    }

    pub fn outcome(&self) -> RobustOutcome {
        RobustOutcome {
            solution: output_solution(self.m.state()),
            cost: self.m.output_cost(),
            cost_a: self.a.output_cost(),
            cost_b: self.b.output_cost(),
            steps: self.steps.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustOutcome {
    /// M's doubled output.
    pub solution: Vec<f64>,
    pub cost: f64,
    pub cost_a: f64,
    pub cost_b: f64,
    pub steps: Vec<StepCosts>,
}

impl RobustOutcome {
    /// `cost <= 6 ln 3 · min(cost_a, cost_b)`, with the ledger's relative slack.
    pub fn check_guarantee(&self, tol: &Tolerances) -> Result<f64, BenchmarkError> {
        let limit = robust_factor() * self.cost_a.min(self.cost_b);
        if self.cost > limit + tol.ledger_slack(self.cost, limit) {
            return Err(BenchmarkError::BoundViolation {
                output_cost: self.cost,
                limit,
            });
        }
        Ok(limit)
    }
}

/// Runs the three engines over aligned streams of rows and raw suggestions.
pub fn robust_run<'a, I>(costs: Vec<f64>, stream: I, tol: Tolerances) -> Result<RobustOutcome, EngineError>
where
    I: IntoIterator<Item = (&'a SparseConstraint, &'a [Assignment])>,
{
    let mut engine = RobustEngine::new(costs, tol)?;
    for (constraint, raw) in stream {
        engine.process_raw(constraint, raw)?;
    }
    Ok(engine.outcome())
}
