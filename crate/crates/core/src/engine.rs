//! Fractional online covering driven by k suggestions per constraint.
//!
//! On each constraint the engine raises every unfrozen variable on the
//! support along `dx_i/dt = (a_i / c_i)(x_i + δ Γ_i)` until the row reaches
//! 1/2, freezing variables at 1/2. The dynamics are integrated exactly, one
//! phase at a time: inside a phase the active set is fixed and each variable
//! follows `x_i(t) = (x_i⁰ + o_i) e^{r_i t} - o_i`. A phase ends when a
//! variable hits its cap or the row hits its target. The published solution
//! is `2x`, which covers every processed row.

use thiserror::Error;

use crate::model::{Assignment, ModelError, SparseConstraint, SuggestionSet};
use crate::tolerance::Tolerances;

/// Internal variables never exceed this value.
pub const HALF: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("cost of variable {index} must be positive and finite, got {value}")]
    InvalidCost { index: usize, value: f64 },
    #[error("variable {index} out of range for {n} variables")]
    DimensionMismatch { index: usize, n: usize },
    #[error("no active variable can grow (step {step:?})")]
    StalledPhase { step: Option<usize> },
    #[error("constraint {step} cannot reach 1/2 with every variable at 1/2 (reachable value {reachable})")]
    UnsatisfiableConstraint { step: usize, reachable: f64 },
    #[error("step {step}: assignment cost for variable {index} is missing")]
    MissingAssignmentCost { step: usize, index: usize },
    #[error("step {step}: assignment cost for variable {index} must be finite and non-negative, got {value}")]
    InvalidAssignmentCost { step: usize, index: usize, value: f64 },
}

/// What ended a phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseEvent {
    /// The variable reached 1/2 and stops growing.
    VariableFrozen(usize),
    /// The row reached 1/2; the step is over.
    ConstraintHalfSatisfied,
    /// An assignment variable caught up with its facility variable.
    BoxTied(usize),
}

impl PhaseEvent {
    pub fn kind(&self) -> &'static str {
        match self {
            PhaseEvent::VariableFrozen(_) => "variable_frozen",
            PhaseEvent::ConstraintHalfSatisfied => "constraint_half_satisfied",
            PhaseEvent::BoxTied(_) => "box_tied",
        }
    }

    pub fn variable(&self) -> Option<usize> {
        match *self {
            PhaseEvent::VariableFrozen(i) | PhaseEvent::BoxTied(i) => Some(i),
            PhaseEvent::ConstraintHalfSatisfied => None,
        }
    }
}

/// One variable taking part in a phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthVar {
    pub index: usize,
    /// Row coefficient `a_i`.
    pub coeff: f64,
    /// Exponential rate `r_i`.
    pub rate: f64,
    /// Additive offset `o_i`.
    pub offset: f64,
    pub start: f64,
    /// Value at which the variable stops growing in this regime.
    pub cap: f64,
}

impl GrowthVar {
    fn grows(&self) -> bool {
        self.rate > 0.0 && self.start + self.offset > 0.0 && self.start < self.cap
    }

    /// Closed-form value after `t`, clamped to the cap.
    pub fn value_at(&self, t: f64) -> f64 {
        if !self.grows() {
            return self.start;
        }
        let v = self.start + (self.start + self.offset) * (self.rate * t).exp_m1();
        v.clamp(self.start, self.cap)
    }

    /// Time to reach the cap, `ln((cap + o)/(x⁰ + o)) / r`.
    pub fn time_to_cap(&self) -> f64 {
        if !self.grows() {
            return f64::INFINITY;
        }
        ((self.cap - self.start) / (self.start + self.offset)).ln_1p() / self.rate
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseOutcome {
    pub duration: f64,
    pub event: PhaseEvent,
    /// End values, aligned with the input variables.
    pub end: Vec<f64>,
}

/// Runs one phase of the exponential dynamics.
///
/// `target` is the value `Σ a_i x_i` over `vars` that ends the step. The phase
/// stops at the earlier of the first cap hit and the time the row reaches the
/// target; coincidences within `tol.sat` count as the row being satisfied.
pub fn phase_advance(
    vars: &[GrowthVar],
    target: f64,
    tol: &Tolerances,
) -> Result<PhaseOutcome, EngineError> {
    let row_at = |t: f64| -> f64 { vars.iter().map(|v| v.coeff * v.value_at(t)).sum() };
    let starts: Vec<f64> = vars.iter().map(|v| v.start).collect();
    if row_at(0.0) >= target {
        return Ok(PhaseOutcome {
            duration: 0.0,
            event: PhaseEvent::ConstraintHalfSatisfied,
            end: starts,
        });
    }
    let (first, t_cap) = vars
        .iter()
        .enumerate()
        .map(|(pos, v)| (pos, v.time_to_cap()))
        .fold((None, f64::INFINITY), |(best, bt), (pos, t)| {
            if t < bt {
                (Some(pos), t)
            } else {
                (best, bt)
            }
        });
    let Some(first) = first else {
        return Err(EngineError::StalledPhase { step: None });
    };

    let at_cap = row_at(t_cap);
    let (duration, event) = if at_cap >= target {
        let mut lo = 0.0;
        let mut hi = t_cap;
        for _ in 0..tol.max_bisection_iters {
            if hi - lo <= tol.time {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if row_at(mid) >= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        (hi, PhaseEvent::ConstraintHalfSatisfied)
    } else if at_cap >= target - tol.sat {
        (t_cap, PhaseEvent::ConstraintHalfSatisfied)
    } else {
        (t_cap, PhaseEvent::VariableFrozen(vars[first].index))
    };

    let end = vars
        .iter()
        .map(|v| {
            if t_cap.is_finite() && v.time_to_cap() - duration <= tol.time {
                v.cap
            } else {
                v.value_at(duration)
            }
        })
        .collect();
    Ok(PhaseOutcome {
        duration,
        event,
        end,
    })
}

/// Monotone internal solution `x ∈ [0, 1/2]^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoveringState {
    x: Vec<f64>,
    costs: Vec<f64>,
    internal_cost: f64,
}

impl CoveringState {
    pub fn new(costs: Vec<f64>) -> Result<Self, EngineError> {
        if let Some((index, &value)) = costs
            .iter()
            .enumerate()
            .find(|(_, c)| !(c.is_finite() && **c > 0.0))
        {
            return Err(EngineError::InvalidCost { index, value });
        }
        Ok(Self {
            x: vec![0.0; costs.len()],
            costs,
            internal_cost: 0.0,
        })
    }

    /// Like [`CoveringState::new`], but zero-cost variables are accepted and
    /// start frozen at 1/2 (so the published value is 1 at no cost).
    pub fn with_free_variables(costs: Vec<f64>) -> Result<Self, EngineError> {
        if let Some((index, &value)) = costs
            .iter()
            .enumerate()
            .find(|(_, c)| !(c.is_finite() && **c >= 0.0))
        {
            return Err(EngineError::InvalidCost { index, value });
        }
        let x = costs
            .iter()
            .map(|&c| if c == 0.0 { HALF } else { 0.0 })
            .collect();
        Ok(Self {
            x,
            costs,
            internal_cost: 0.0,
        })
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    /// `Σ c_i x_i`.
    pub fn internal_cost(&self) -> f64 {
        self.internal_cost
    }

    fn check_indices(&self, constraint: &SparseConstraint) -> Result<(), EngineError> {
        match constraint.support().find(|&i| i >= self.n()) {
            Some(index) => Err(EngineError::DimensionMismatch { index, n: self.n() }),
            None => Ok(()),
        }
    }
}

/// One phase as recorded in a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Phase {
    pub duration: f64,
    pub event: PhaseEvent,
    pub active: Vec<usize>,
    pub start: Vec<f64>,
    pub end: Vec<f64>,
    pub cost_increment: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepTrace {
    pub step: usize,
    pub phases: Vec<Phase>,
    /// Published values `2x_i` on the step's support after the step.
    pub output: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunTrace {
    pub n: usize,
    pub steps: Vec<StepTrace>,
}

impl RunTrace {
    pub fn phase_count(&self) -> usize {
        self.steps.iter().map(|s| s.phases.len()).sum()
    }
}

/// Raises the support of `constraint` with per-variable offsets until the
/// row reaches 1/2. Shared by the suggestion-driven and the baseline engine.
pub(crate) fn raise_until_half(
    state: &mut CoveringState,
    constraint: &SparseConstraint,
    offset: impl Fn(usize) -> f64,
    tol: &Tolerances,
) -> Result<Vec<Phase>, EngineError> {
    state.check_indices(constraint)?;
    let step = constraint.step();
    if constraint.value(&state.x) >= HALF {
        return Ok(Vec::new());
    }
    let reachable = HALF * constraint.max_value();
    if reachable < HALF - tol.sat {
        return Err(EngineError::UnsatisfiableConstraint { step, reachable });
    }

    let mut phases = Vec::new();
    loop {
        let value = constraint.value(&state.x);
        if value >= HALF {
            break;
        }
        let mut vars = Vec::new();
        let mut frozen_value = 0.0;
        for &(i, a) in constraint.coeffs() {
            if state.x[i] < HALF {
                vars.push(GrowthVar {
                    index: i,
                    coeff: a,
                    rate: a / state.costs[i],
                    offset: offset(i),
                    start: state.x[i],
                    cap: HALF,
                });
            } else {
                frozen_value += a * state.x[i];
            }
        }
        if vars.is_empty() {
            if value >= HALF - tol.sat {
                break;
            }
            return Err(EngineError::UnsatisfiableConstraint { step, reachable: value });
        }
        let outcome = phase_advance(&vars, HALF - frozen_value, tol)
            .map_err(|e| match e {
                EngineError::StalledPhase { .. } => EngineError::StalledPhase { step: Some(step) },
                other => other,
            })?;
        let mut cost_increment = 0.0;
        for (v, &end) in vars.iter().zip(&outcome.end) {
            let end = end.max(v.start);
            cost_increment += state.costs[v.index] * (end - v.start);
            state.x[v.index] = end;
        }
        state.internal_cost += cost_increment;
        let done = outcome.event == PhaseEvent::ConstraintHalfSatisfied;
        phases.push(Phase {
            duration: outcome.duration,
            event: outcome.event,
            active: vars.iter().map(|v| v.index).collect(),
            start: vars.iter().map(|v| v.start).collect(),
            end: vars.iter().map(|v| state.x[v.index]).collect(),
            cost_increment,
        });
        if done {
            break;
        }
    }
    Ok(phases)
}

/// Processes one constraint with its tightened suggestions.
pub fn process_constraint(
    state: &mut CoveringState,
    constraint: &SparseConstraint,
    suggestions: &SuggestionSet,
    tol: &Tolerances,
) -> Result<Vec<Phase>, EngineError> {
    for s in suggestions.suggestions() {
        if let Some(index) = s.max_index().filter(|&i| i >= state.n()) {
            return Err(EngineError::DimensionMismatch { index, n: state.n() });
        }
    }
    let delta = suggestions.delta();
    raise_until_half(state, constraint, |i| delta * suggestions.aggregate(i), tol)
}

/// Published solution `min(2x, 1)`.
pub fn output_solution(state: &CoveringState) -> Vec<f64> {
    state.x.iter().map(|&v| (2.0 * v).clamp(0.0, 1.0)).collect()
}

/// Stateful driver that owns a [`CoveringState`] and records a [`RunTrace`].
#[derive(Debug, Clone)]
pub struct CoveringEngine {
    state: CoveringState,
    tol: Tolerances,
    trace: RunTrace,
}

impl CoveringEngine {
    pub fn new(costs: Vec<f64>, tol: Tolerances) -> Result<Self, EngineError> {
        Ok(Self::from_state(CoveringState::new(costs)?, tol))
    }

    pub fn from_state(state: CoveringState, tol: Tolerances) -> Self {
        let n = state.n();
        Self {
            state,
            tol,
            trace: RunTrace {
                n,
                steps: Vec::new(),
            },
        }
    }

    /// Tightens `raw` and processes the constraint.
    pub fn process_raw(
        &mut self,
        constraint: &SparseConstraint,
        raw: &[Assignment],
    ) -> Result<&StepTrace, EngineError> {
        let set = SuggestionSet::tightened(constraint, raw, &self.tol)?;
        self.process(constraint, &set)
    }

    pub fn process(
        &mut self,
        constraint: &SparseConstraint,
        suggestions: &SuggestionSet,
    ) -> Result<&StepTrace, EngineError> {
        let phases = process_constraint(&mut self.state, constraint, suggestions, &self.tol)?;
        Ok(self.record(constraint, phases))
    }

    pub(crate) fn record(&mut self, constraint: &SparseConstraint, phases: Vec<Phase>) -> &StepTrace {
        let output = constraint
            .support()
            .map(|i| (i, (2.0 * self.state.x[i]).min(1.0)))
            .collect();
        self.trace.steps.push(StepTrace {
            step: constraint.step(),
            phases,
            output,
        });
        self.trace.steps.last().expect("just pushed")
    }

    pub(crate) fn state_mut(&mut self) -> &mut CoveringState {
        &mut self.state
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    pub fn state(&self) -> &CoveringState {
        &self.state
    }

    pub fn output(&self) -> Vec<f64> {
        output_solution(&self.state)
    }

    pub fn output_cost(&self) -> f64 {
        self.output()
            .iter()
            .zip(self.state.costs())
            .map(|(x, c)| x * c)
            .sum()
    }

    pub fn trace(&self) -> &RunTrace {
        &self.trace
    }

    pub fn into_trace(self) -> RunTrace {
        self.trace
    }
}
