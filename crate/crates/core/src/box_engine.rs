//! Online covering with box constraints `x_ij <= y_i`.
//!
//! The global variables `y_i` (facility openings, cost `c_i`) are monotone
//! across the run. Each step `j` brings fresh assignment variables `x_ij`
//! (cost `d_ij`) that start at 0. While `x_ij < y_i` only the assignment
//! grows, at rate `(a_ij / d_ij)(x_ij + δ Γ_ij)`. Once it catches up the pair
//! is tied and both grow at `(a_ij / (d_ij + c_i))(x_ij + δ Γ_ij)`.
//! Zero-cost assignments are raised instantly, up to `y_i`, 1/2, or the
//! point where the row is half covered, before any timed phase.

use std::collections::BTreeMap;

use crate::engine::{phase_advance, EngineError, GrowthVar, PhaseEvent, HALF};
use crate::model::{aggregate, tighten, Assignment, ModelError, SparseConstraint};
use crate::tolerance::Tolerances;

/// One suggested `(y, x_·j)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSuggestion {
    pub y: Assignment,
    pub x: Assignment,
}

/// Tightened box suggestions for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSuggestionSet {
    suggestions: Vec<BoxSuggestion>,
    aggregate: Vec<(usize, f64)>,
}

impl BoxSuggestionSet {
    /// Downscales each `x` part to a tight cover and lifts `y` to at least `x`.
    pub fn tightened(
        constraint: &SparseConstraint,
        raw: &[BoxSuggestion],
        tol: &Tolerances,
    ) -> Result<Self, ModelError> {
        if raw.is_empty() {
            return Err(ModelError::NoSuggestions {
                step: constraint.step(),
            });
        }
        let mut suggestions = Vec::with_capacity(raw.len());
        for s in raw {
            let x = tighten(constraint, &s.x, tol)?;
            let mut y: BTreeMap<usize, f64> = s.y.entries().iter().copied().collect();
            for &(i, v) in x.entries() {
                let e = y.entry(i).or_insert(0.0);
                *e = e.max(v);
            }
            let y = Assignment::new(y.into_iter().filter(|&(_, v)| v > 0.0).collect())?;
            suggestions.push(BoxSuggestion { y, x });
        }
        let aggregate = aggregate(suggestions.iter().map(|s| &s.x));
        Ok(Self {
            suggestions,
            aggregate,
        })
    }

    pub fn k(&self) -> usize {
        self.suggestions.len()
    }

    pub fn delta(&self) -> f64 {
        1.0 / self.k() as f64
    }

    pub fn suggestions(&self) -> &[BoxSuggestion] {
        &self.suggestions
    }

    pub fn aggregate(&self, index: usize) -> f64 {
        self.aggregate
            .binary_search_by_key(&index, |&(i, _)| i)
            .map(|pos| self.aggregate[pos].1)
            .unwrap_or(0.0)
    }
}

/// Completed assignment variables of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxStep {
    pub step: usize,
    /// `(i, d_ij)` aligned with the constraint support.
    pub d: Vec<(usize, f64)>,
    /// `(i, x_ij)` aligned with the constraint support.
    pub x: Vec<(usize, f64)>,
}

impl BoxStep {
    pub fn assignment_cost(&self) -> f64 {
        self.d.iter().zip(&self.x).map(|(d, x)| d.1 * x.1).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxState {
    y: Vec<f64>,
    costs: Vec<f64>,
    steps: Vec<BoxStep>,
    internal_cost: f64,
}

impl BoxState {
    pub fn new(costs: Vec<f64>) -> Result<Self, EngineError> {
        if let Some((index, &value)) = costs
            .iter()
            .enumerate()
            .find(|(_, c)| !(c.is_finite() && **c > 0.0))
        {
            return Err(EngineError::InvalidCost { index, value });
        }
        Ok(Self {
            y: vec![0.0; costs.len()],
            costs,
            steps: Vec::new(),
            internal_cost: 0.0,
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn steps(&self) -> &[BoxStep] {
        &self.steps
    }

    /// `Σ c_i y_i + Σ_j Σ_i d_ij x_ij`.
    pub fn internal_cost(&self) -> f64 {
        self.internal_cost
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxPhase {
    pub duration: f64,
    pub event: PhaseEvent,
    /// Support positions of the variables that moved, as facility indices.
    pub active: Vec<usize>,
    pub x_start: Vec<f64>,
    pub x_end: Vec<f64>,
    pub y_start: Vec<f64>,
    pub y_end: Vec<f64>,
    /// Whether the pair grew in the coupled regime.
    pub tied: Vec<bool>,
    pub cost_increment: f64,
}

struct Slot {
    index: usize,
    a: f64,
    d: f64,
    x: f64,
    tied: bool,
}

/// Processes one box-constrained step.
pub fn process_box_constraint(
    state: &mut BoxState,
    constraint: &SparseConstraint,
    d: &[(usize, f64)],
    suggestions: &BoxSuggestionSet,
    tol: &Tolerances,
) -> Result<Vec<BoxPhase>, EngineError> {
    let step = constraint.step();
    let n = state.n();
    if let Some(index) = constraint.support().find(|&i| i >= n) {
        return Err(EngineError::DimensionMismatch { index, n });
    }
    for s in suggestions.suggestions() {
        if let Some(index) = s.x.max_index().max(s.y.max_index()).filter(|&i| i >= n) {
            return Err(EngineError::DimensionMismatch { index, n });
        }
    }
    let d_of: BTreeMap<usize, f64> = d.iter().copied().collect();
    let mut slots = Vec::with_capacity(constraint.nonzeros());
    for &(index, a) in constraint.coeffs() {
        let d = *d_of
            .get(&index)
            .ok_or(EngineError::MissingAssignmentCost { step, index })?;
        if !(d.is_finite() && d >= 0.0) {
            return Err(EngineError::InvalidAssignmentCost { step, index, value: d });
        }
        slots.push(Slot {
            index,
            a,
            d,
            x: 0.0,
            tied: false,
        });
    }
    let reachable = HALF * constraint.max_value();
    if reachable < HALF - tol.sat {
        return Err(EngineError::UnsatisfiableConstraint { step, reachable });
    }

    let delta = suggestions.delta();
    let row = |slots: &[Slot]| -> f64 { slots.iter().map(|s| s.a * s.x).sum() };
    let mut phases = Vec::new();

    // Instant raise of zero-cost assignments.
    for p in 0..slots.len() {
        let remaining = HALF - row(&slots);
        if remaining <= 0.0 {
            break;
        }
        let s = &slots[p];
        let y = state.y[s.index];
        if s.d != 0.0 || s.x >= y.min(HALF) {
            continue;
        }
        let to_target = s.x + remaining / s.a;
        let new = y.min(HALF).min(to_target);
        let event = if new >= to_target {
            PhaseEvent::ConstraintHalfSatisfied
        } else if new >= HALF {
            PhaseEvent::VariableFrozen(s.index)
        } else {
            PhaseEvent::BoxTied(s.index)
        };
        let start = s.x;
        let slot = &mut slots[p];
        slot.x = new;
        if new >= y {
            slot.tied = true;
        }
        phases.push(BoxPhase {
            duration: 0.0,
            event,
            active: vec![slot.index],
            x_start: vec![start],
            x_end: vec![new],
            y_start: vec![y],
            y_end: vec![y],
            tied: vec![false],
            cost_increment: 0.0,
        });
    }

    loop {
        let value = row(&slots);
        if value >= HALF || phases.last().is_some_and(|p: &BoxPhase| p.event == PhaseEvent::ConstraintHalfSatisfied) {
            break;
        }
        for s in slots.iter_mut().filter(|s| !s.tied) {
            let y = state.y[s.index];
            if y - s.x <= tol.sat {
                s.tied = true;
            }
        }
        let mut members = Vec::new();
        let mut vars = Vec::new();
        let mut frozen_value = 0.0;
        for (p, s) in slots.iter().enumerate() {
            if s.x >= HALF {
                frozen_value += s.a * s.x;
                continue;
            }
            let c = state.costs[s.index];
            let (rate, cap) = if s.tied {
                (s.a / (s.d + c), HALF)
            } else {
                (s.a / s.d, state.y[s.index].min(HALF))
            };
            members.push(p);
            vars.push(GrowthVar {
                index: s.index,
                coeff: s.a,
                rate,
                offset: delta * suggestions.aggregate(s.index),
                start: s.x,
                cap,
            });
        }
        if vars.is_empty() {
            if value >= HALF - tol.sat {
                break;
            }
            return Err(EngineError::UnsatisfiableConstraint { step, reachable: value });
        }
        let outcome = phase_advance(&vars, HALF - frozen_value, tol).map_err(|e| match e {
            EngineError::StalledPhase { .. } => EngineError::StalledPhase { step: Some(step) },
            other => other,
        })?;

        let mut cost_increment = 0.0;
        let mut phase = BoxPhase {
            duration: outcome.duration,
            event: outcome.event,
            active: Vec::with_capacity(vars.len()),
            x_start: Vec::with_capacity(vars.len()),
            x_end: Vec::with_capacity(vars.len()),
            y_start: Vec::with_capacity(vars.len()),
            y_end: Vec::with_capacity(vars.len()),
            tied: Vec::with_capacity(vars.len()),
            cost_increment: 0.0,
        };
        for ((&p, v), &end) in members.iter().zip(&vars).zip(&outcome.end) {
            let slot = &mut slots[p];
            let i = slot.index;
            let end = end.max(v.start);
            let dx = end - v.start;
            let y_start = state.y[i];
            phase.tied.push(slot.tied);
            if slot.tied {
                state.y[i] = (y_start + dx).min(HALF);
                cost_increment += state.costs[i] * (state.y[i] - y_start);
            } else if end >= state.y[i] - tol.sat {
                slot.tied = true;
            }
            cost_increment += slot.d * dx;
            slot.x = end;
            phase.active.push(i);
            phase.x_start.push(v.start);
            phase.x_end.push(end);
            phase.y_start.push(y_start);
            phase.y_end.push(state.y[i]);
        }
        if let PhaseEvent::VariableFrozen(i) = outcome.event {
            let pos = vars.iter().position(|v| v.index == i).expect("event names an active variable");
            if !phase.tied[pos] && vars[pos].cap < HALF {
                phase.event = PhaseEvent::BoxTied(i);
            }
        }
        phase.cost_increment = cost_increment;
        state.internal_cost += cost_increment;
        let done = phase.event == PhaseEvent::ConstraintHalfSatisfied;
        phases.push(phase);
        if done {
            break;
        }
    }

    state.steps.push(BoxStep {
        step,
        d: slots.iter().map(|s| (s.index, s.d)).collect(),
        x: slots.iter().map(|s| (s.index, s.x)).collect(),
    });
    Ok(phases)
}

/// Doubled facility and assignment values, clamped to 1.
pub fn output_box_solution(state: &BoxState) -> (Vec<f64>, Vec<Vec<(usize, f64)>>) {
    let y = state.y.iter().map(|&v| (2.0 * v).clamp(0.0, 1.0)).collect();
    let x = state
        .steps
        .iter()
        .map(|s| s.x.iter().map(|&(i, v)| (i, (2.0 * v).clamp(0.0, 1.0))).collect())
        .collect();
    (y, x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxStepTrace {
    pub step: usize,
    pub phases: Vec<BoxPhase>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoxRunTrace {
    pub n: usize,
    pub steps: Vec<BoxStepTrace>,
}

impl BoxRunTrace {
    pub fn phase_count(&self) -> usize {
        self.steps.iter().map(|s| s.phases.len()).sum()
    }
}

#[derive(Debug, Clone)]
pub struct BoxEngine {
    state: BoxState,
    tol: Tolerances,
    trace: BoxRunTrace,
}

impl BoxEngine {
    pub fn new(costs: Vec<f64>, tol: Tolerances) -> Result<Self, EngineError> {
        let state = BoxState::new(costs)?;
        let n = state.n();
        Ok(Self {
            state,
            tol,
            trace: BoxRunTrace {
                n,
                steps: Vec::new(),
            },
        })
    }

    pub fn process_raw(
        &mut self,
        constraint: &SparseConstraint,
        d: &[(usize, f64)],
        raw: &[BoxSuggestion],
    ) -> Result<&BoxStepTrace, EngineError> {
        let set = BoxSuggestionSet::tightened(constraint, raw, &self.tol)?;
        self.process(constraint, d, &set)
    }

    pub fn process(
        &mut self,
        constraint: &SparseConstraint,
        d: &[(usize, f64)],
        suggestions: &BoxSuggestionSet,
    ) -> Result<&BoxStepTrace, EngineError> {
        let phases = process_box_constraint(&mut self.state, constraint, d, suggestions, &self.tol)?;
        self.trace.steps.push(BoxStepTrace {
            step: constraint.step(),
            phases,
        });
        Ok(self.trace.steps.last().expect("just pushed"))
    }

    pub fn state(&self) -> &BoxState {
        &self.state
    }

    pub fn output(&self) -> (Vec<f64>, Vec<Vec<(usize, f64)>>) {
        output_box_solution(&self.state)
    }

    pub fn output_cost(&self) -> f64 {
        let (y, x) = self.output();
        let open: f64 = y.iter().zip(self.state.costs()).map(|(y, c)| y * c).sum();
        let assign: f64 = self
            .state
            .steps()
            .iter()
            .zip(&x)
            .map(|(s, xs)| s.d.iter().zip(xs).map(|(d, x)| d.1 * x.1).sum::<f64>())
            .sum();
        open + assign
    }

    pub fn trace(&self) -> &BoxRunTrace {
        &self.trace
    }
}
