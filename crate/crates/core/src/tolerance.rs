/// Numerical tolerances shared by the engines, oracles and verifiers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Allowed deviation of a tightened suggestion's constraint value from 1.
    pub tight: f64,
    /// Allowed shortfall of the internal constraint value below 1/2.
    pub sat: f64,
    /// Absolute time tolerance for the root bracketing in a phase.
    pub time: f64,
    /// Iteration cap for the bisection.
    pub max_bisection_iters: usize,
    /// Absolute slack for ledger inequalities.
    pub ledger_abs: f64,
    /// Relative slack for ledger and bound inequalities.
    pub ledger_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tight: 1e-9,
            sat: 1e-9,
            time: 1e-12,
            max_bisection_iters: 200,
            ledger_abs: 1e-9,
            ledger_rel: 1e-6,
        }
    }
}

impl Tolerances {
    /// Slack allowed on `lhs <= rhs` checks, scaled by the magnitudes involved.
    pub fn ledger_slack(&self, lhs: f64, rhs: f64) -> f64 {
        self.ledger_abs + self.ledger_rel * lhs.abs().max(rhs.abs())
    }
}
