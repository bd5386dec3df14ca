use super::{BenchmarkError, BoxHistory, SuggestionHistory};

/// Default cap on the number of DYNAMIC choice sequences.
pub const DEFAULT_BUDGET: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct StaticResult {
    pub cost: f64,
    /// 0-based expert index.
    pub expert: usize,
}

/// Per-step choices and the supported vector they induce.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicCertificate {
    pub choices: Vec<usize>,
    /// `x_i = max_j x_i(j, s(j))`.
    pub x: Vec<f64>,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxCertificate {
    pub choices: Vec<usize>,
    pub y: Vec<f64>,
    /// Per step, `x_ij(s(j))` aligned with the step's constraint support.
    pub x: Vec<Vec<(usize, f64)>>,
    pub cost: f64,
}

fn linear_cost(costs: &[f64], x: &[f64]) -> f64 {
    costs.iter().zip(x).map(|(c, v)| c * v).sum()
}

/// Cheapest expert: `min_s Σ c_i max_j x_i(j, s)`. Ties go to the lower index.
pub fn static_benchmark(history: &SuggestionHistory) -> StaticResult {
    let mut best = StaticResult {
        cost: 0.0,
        expert: 0,
    };
    for s in 0..history.k() {
        let mut x = vec![0.0; history.n()];
        for (_, set) in history.steps() {
            for &(i, v) in set.suggestions()[s].entries() {
                x[i] = f64::max(x[i], v);
            }
        }
        let cost = linear_cost(history.costs(), &x);
        if s == 0 || cost < best.cost {
            best = StaticResult { cost, expert: s };
        }
    }
    best
}

fn sequence_count(k: usize, m: usize) -> u128 {
    (k as u128).checked_pow(m as u32).unwrap_or(u128::MAX)
}

/// Exact DYNAMIC by depth-first enumeration of all `k^m` choice sequences,
/// pruning branches whose partial cost already exceeds the incumbent.
pub fn dynamic_benchmark(
    history: &SuggestionHistory,
    budget: u128,
) -> Result<DynamicCertificate, BenchmarkError> {
    let k = history.k();
    let m = history.len();
    let st = static_benchmark(history);
    let sequences = sequence_count(k, m);
    if sequences > budget {
        return Err(BenchmarkError::BudgetExceeded {
            sequences,
            budget,
            static_upper_bound: st.cost,
        });
    }

    struct Search<'a> {
        history: &'a SuggestionHistory,
        x: Vec<f64>,
        choices: Vec<usize>,
        best_cost: f64,
        best_choices: Vec<usize>,
    }

    impl Search<'_> {
        fn run(&mut self, step: usize) {
            let partial = linear_cost(self.history.costs(), &self.x);
            if partial > self.best_cost {
                return;
            }
            if step == self.history.len() {
                if partial < self.best_cost {
                    self.best_cost = partial;
                    self.best_choices.clone_from(&self.choices);
                }
                return;
            }
            let set = &self.history.steps()[step].1;
            for (s, suggestion) in set.suggestions().iter().enumerate() {
                let saved: Vec<(usize, f64)> = suggestion
                    .entries()
                    .iter()
                    .map(|&(i, _)| (i, self.x[i]))
                    .collect();
                for &(i, v) in suggestion.entries() {
                    self.x[i] = f64::max(self.x[i], v);
                }
                self.choices.push(s);
                self.run(step + 1);
                self.choices.pop();
                for (i, v) in saved {
                    self.x[i] = v;
                }
            }
        }
    }

    let mut search = Search {
        history,
        x: vec![0.0; history.n()],
        choices: Vec::with_capacity(m),
        best_cost: st.cost,
        best_choices: vec![st.expert; m],
    };
    search.run(0);

    let choices = search.best_choices;
    let mut x = vec![0.0; history.n()];
    for ((_, set), &s) in history.steps().iter().zip(&choices) {
        for &(i, v) in set.suggestions()[s].entries() {
            x[i] = f64::max(x[i], v);
        }
    }
    let cost = linear_cost(history.costs(), &x);
    Ok(DynamicCertificate { choices, x, cost })
}

fn box_assignment_cost(history: &BoxHistory, step: usize, s: usize) -> f64 {
    let h = &history.steps()[step];
    let x = &h.suggestions.suggestions()[s].x;
    h.d.iter().map(|&(i, d)| d * x.get(i)).sum()
}

/// Cheapest single expert for a box run.
pub fn static_benchmark_box(history: &BoxHistory) -> StaticResult {
    let mut best = StaticResult {
        cost: 0.0,
        expert: 0,
    };
    for s in 0..history.k() {
        let mut y = vec![0.0; history.n()];
        let mut assign = 0.0;
        for (j, h) in history.steps().iter().enumerate() {
            for &(i, v) in h.suggestions.suggestions()[s].y.entries() {
                y[i] = f64::max(y[i], v);
            }
            assign += box_assignment_cost(history, j, s);
        }
        let cost = linear_cost(history.costs(), &y) + assign;
        if s == 0 || cost < best.cost {
            best = StaticResult { cost, expert: s };
        }
    }
    best
}

/// Exact DYNAMIC for box runs: `y = max_j y(j, s(j))`, `x_·j = x_·j(s(j))`.
pub fn dynamic_benchmark_box(
    history: &BoxHistory,
    budget: u128,
) -> Result<BoxCertificate, BenchmarkError> {
    let k = history.k();
    let m = history.len();
    let st = static_benchmark_box(history);
    let sequences = sequence_count(k, m);
    if sequences > budget {
        return Err(BenchmarkError::BudgetExceeded {
            sequences,
            budget,
            static_upper_bound: st.cost,
        });
    }
    let assign: Vec<Vec<f64>> = (0..m)
        .map(|j| (0..k).map(|s| box_assignment_cost(history, j, s)).collect())
        .collect();

    struct Search<'a> {
        history: &'a BoxHistory,
        assign: &'a [Vec<f64>],
        y: Vec<f64>,
        assigned: f64,
        choices: Vec<usize>,
        best_cost: f64,
        best_choices: Vec<usize>,
    }

    impl Search<'_> {
        fn run(&mut self, step: usize) {
            let partial = linear_cost(self.history.costs(), &self.y) + self.assigned;
            if partial > self.best_cost {
                return;
            }
            if step == self.history.len() {
                if partial < self.best_cost {
                    self.best_cost = partial;
                    self.best_choices.clone_from(&self.choices);
                }
                return;
            }
            let set = &self.history.steps()[step].suggestions;
            for (s, suggestion) in set.suggestions().iter().enumerate() {
                let saved: Vec<(usize, f64)> = suggestion
                    .y
                    .entries()
                    .iter()
                    .map(|&(i, _)| (i, self.y[i]))
                    .collect();
                for &(i, v) in suggestion.y.entries() {
                    self.y[i] = f64::max(self.y[i], v);
                }
                let before = self.assigned;
                self.assigned += self.assign[step][s];
                self.choices.push(s);
                self.run(step + 1);
                self.choices.pop();
                self.assigned = before;
                for (i, v) in saved {
                    self.y[i] = v;
                }
            }
        }
    }

    let mut search = Search {
        history,
        assign: &assign,
        y: vec![0.0; history.n()],
        assigned: 0.0,
        choices: Vec::with_capacity(m),
        best_cost: st.cost,
        best_choices: vec![st.expert; m],
    };
    search.run(0);

    let choices = search.best_choices;
    let mut y = vec![0.0; history.n()];
    let mut x = Vec::with_capacity(m);
    let mut assigned = 0.0;
    for (j, (h, &s)) in history.steps().iter().zip(&choices).enumerate() {
        let suggestion = &h.suggestions.suggestions()[s];
        for &(i, v) in suggestion.y.entries() {
            y[i] = f64::max(y[i], v);
        }
        x.push(h.constraint.support().map(|i| (i, suggestion.x.get(i))).collect());
        assigned += assign[j][s];
    }
    let cost = linear_cost(history.costs(), &y) + assigned;
    Ok(BoxCertificate {
        choices,
        y,
        x,
        cost,
    })
}
