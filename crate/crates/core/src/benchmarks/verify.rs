use super::potential::{potential, potential_box};
use super::{BenchmarkError, BoxCertificate, BoxHistory, DynamicCertificate};
use crate::box_engine::BoxRunTrace;
use crate::engine::RunTrace;
use crate::tolerance::Tolerances;

/// Internal cost grows at rate at most 3/2 and the potential falls at rate at
/// least 1/2, so every phase pays at most 3 units of cost per unit of
/// potential released.
const COST_PER_POTENTIAL: f64 = 3.0;
const MAX_COST_RATE: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LedgerCheck {
    /// `Δcost <= 3 (φ_before - φ_after)`.
    PotentialPaysCost,
    /// `Δcost <= 3/2 · duration`.
    CostRate,
    /// `φ >= 0` at the phase end.
    NonNegative,
    /// Total internal cost `<= 3 φ_initial`.
    Total,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerViolation {
    pub step: usize,
    pub phase: usize,
    pub check: LedgerCheck,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LedgerReport {
    pub phases: usize,
    pub phi_initial: f64,
    pub phi_final: f64,
    pub total_cost: f64,
    /// Smallest `3(-Δφ) - Δcost` over all phases (`+∞` with no phases).
    pub worst_margin: f64,
    /// `(step, phase)` of the worst margin.
    pub worst_phase: Option<(usize, usize)>,
    /// Per-boundary potential values, one per phase end.
    pub boundary_potentials: Vec<f64>,
    pub violations: Vec<LedgerViolation>,
}

impl LedgerReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<Self, BenchmarkError> {
        match self.violations.first() {
            None => Ok(self),
            Some(v) => Err(BenchmarkError::LedgerViolation {
                step: v.step,
                phase: v.phase,
                detail: format!("{:?}: {} > {}", v.check, v.lhs, v.rhs),
            }),
        }
    }
}

struct Ledger<'a> {
    tol: &'a Tolerances,
    report: LedgerReport,
}

impl Ledger<'_> {
    fn phase(&mut self, step: usize, phase: usize, cost: f64, duration: f64, before: f64, after: f64) {
        let released = COST_PER_POTENTIAL * (before - after);
        self.check(step, phase, LedgerCheck::PotentialPaysCost, cost, released);
        // zero-duration jumps carry no cost rate; only timed phases are rate-checked
        self.check(step, phase, LedgerCheck::CostRate, cost, MAX_COST_RATE * duration);
        self.check(step, phase, LedgerCheck::NonNegative, 0.0, after);
        let margin = released - cost;
        if margin < self.report.worst_margin {
            self.report.worst_margin = margin;
            self.report.worst_phase = Some((step, phase));
        }
        self.report.phases += 1;
        self.report.total_cost += cost;
        self.report.boundary_potentials.push(after);
    }

    fn check(&mut self, step: usize, phase: usize, check: LedgerCheck, lhs: f64, rhs: f64) {
        if lhs > rhs + self.tol.ledger_slack(lhs, rhs) {
            self.report.violations.push(LedgerViolation {
                step,
                phase,
                check,
                lhs,
                rhs,
            });
        }
    }

    /// `steps` is reported as the step index of the whole-run check.
    fn finish(mut self, steps: usize, phi_final: f64) -> LedgerReport {
        let total = self.report.total_cost;
        let bound = COST_PER_POTENTIAL * self.report.phi_initial;
        self.check(steps, 0, LedgerCheck::Total, total, bound);
        self.report.phi_final = phi_final;
        self.report
    }
}

/// Replays a covering trace and checks the potential ledger phase by phase,
/// with the benchmark fixed to the certificate's final vector.
pub fn verify_ledger(
    trace: &RunTrace,
    costs: &[f64],
    certificate: &DynamicCertificate,
    delta: f64,
    tol: &Tolerances,
) -> LedgerReport {
    let mut x = vec![0.0; trace.n];
    let phi_initial = potential(&x, &certificate.x, costs, delta);
    let mut ledger = Ledger {
        tol,
        report: LedgerReport {
            phi_initial,
            worst_margin: f64::INFINITY,
            ..Default::default()
        },
    };
    let mut phi = phi_initial;
    ledger.check(0, 0, LedgerCheck::NonNegative, 0.0, phi);
    for (j, step) in trace.steps.iter().enumerate() {
        for (p, phase) in step.phases.iter().enumerate() {
            for (&i, &v) in phase.active.iter().zip(&phase.end) {
                x[i] = v;
            }
            let after = potential(&x, &certificate.x, costs, delta);
            ledger.phase(j, p, phase.cost_increment, phase.duration, phi, after);
            phi = after;
        }
    }
    ledger.finish(trace.steps.len(), phi)
}

/// Box analogue of [`verify_ledger`]; `history` supplies supports and `d_ij`.
pub fn verify_box_ledger(
    trace: &BoxRunTrace,
    history: &BoxHistory,
    certificate: &BoxCertificate,
    delta: f64,
    tol: &Tolerances,
) -> Result<LedgerReport, BenchmarkError> {
    if trace.steps.len() != history.len() || certificate.x.len() != history.len() {
        return Err(BenchmarkError::TraceMismatch {
            expected: history.len(),
            found: trace.steps.len(),
        });
    }
    let costs = history.costs();
    let mut y = vec![0.0; trace.n];
    // flattened (d, x, x̂) triples plus the offset of each step's block
    let mut triples = Vec::new();
    let mut offsets = Vec::with_capacity(history.len());
    for (h, xd) in history.steps().iter().zip(&certificate.x) {
        offsets.push(triples.len());
        for (i, xd) in h.constraint.support().zip(xd) {
            debug_assert_eq!(i, xd.0);
            triples.push((h.d_of(i), 0.0, xd.1));
        }
    }
    let phi_of = |y: &[f64], t: &[(f64, f64, f64)]| potential_box(y, &certificate.y, costs, t, delta);
    let phi_initial = phi_of(&y, &triples);
    let mut ledger = Ledger {
        tol,
        report: LedgerReport {
            phi_initial,
            worst_margin: f64::INFINITY,
            ..Default::default()
        },
    };
    let mut phi = phi_initial;
    ledger.check(0, 0, LedgerCheck::NonNegative, 0.0, phi);
    for (j, (step, h)) in trace.steps.iter().zip(history.steps()).enumerate() {
        let support: Vec<usize> = h.constraint.support().collect();
        for (p, phase) in step.phases.iter().enumerate() {
            for (q, &i) in phase.active.iter().enumerate() {
                let pos = support.binary_search(&i).expect("phase variable on the support");
                triples[offsets[j] + pos].1 = phase.x_end[q];
                y[i] = phase.y_end[q];
            }
            let after = phi_of(&y, &triples);
            ledger.phase(j, p, phase.cost_increment, phase.duration, phi, after);
            phi = after;
        }
    }
    Ok(ledger.finish(trace.steps.len(), phi))
}

/// `6 ln(k + 1)`: ledger factor 3, doubling factor 2, potential bound `ln(k+1)`.
pub fn competitive_limit(k: usize) -> f64 {
    6.0 * ((k + 1) as f64).ln()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundCheck {
    Satisfied { ratio: f64, limit: f64 },
    /// The benchmark is zero, so no ratio is defined.
    NotApplicable,
}

/// Checks `output_cost <= 6 ln(k+1) · DYNAMIC`.
pub fn verify_competitive_bound(
    output_cost: f64,
    dynamic_cost: f64,
    k: usize,
    tol: &Tolerances,
) -> Result<BoundCheck, BenchmarkError> {
    if dynamic_cost <= 0.0 {
        return Ok(BoundCheck::NotApplicable);
    }
    let limit = competitive_limit(k) * dynamic_cost;
    if output_cost > limit * (1.0 + tol.ledger_rel) {
        return Err(BenchmarkError::BoundViolation { output_cost, limit });
    }
    Ok(BoundCheck::Satisfied {
        ratio: output_cost / dynamic_cost,
        limit: competitive_limit(k),
    })
}
