//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

use copredict::benchmarks::{BoxHistory, SuggestionHistory};
use copredict::box_engine::{BoxSuggestion, BoxSuggestionSet};
use copredict::predictors::{noisy_predictor, repair_to_cover, stream_rng};
use copredict::{
    Assignment, BoxEngine, CoveringEngine, SparseConstraint, SuggestionSet, Tolerances,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct CoveringSuite {
    pub seed: u64,
    pub n: usize,
    pub k: usize,
    pub costs: Vec<f64>,
    pub rows: Vec<SparseConstraint>,
    pub raw: Vec<Vec<Assignment>>,
}

fn random_row(rng: &mut ChaCha8Rng, step: usize, n: usize, max_support: usize) -> SparseConstraint {
    loop {
        let size = rng.random_range(1..=max_support.min(n));
        let mut idx: Vec<usize> = (0..n).collect();
        for p in 0..size {
            let q = rng.random_range(p..n);
            idx.swap(p, q);
        }
        let coeffs: Vec<(usize, f64)> = idx[..size]
            .iter()
            .map(|&i| (i, rng.random_range(0.2..1.5)))
            .collect();
        let total: f64 = coeffs.iter().map(|c| c.1).sum();
        if total >= 1.0 {
            return SparseConstraint::new(step, coeffs, n).unwrap();
        }
    }
}

/// Expert suggestion on a row: a noisy copy of the expert's hidden vector,
/// or (with probability 1/3) fresh random mass, repaired to a cover.
fn expert_suggestion(
    rng: &mut ChaCha8Rng,
    hidden: &[f64],
    row: &SparseConstraint,
    tol: &Tolerances,
) -> Assignment {
    if rng.random_bool(2.0 / 3.0) {
        if let Ok(s) = noisy_predictor(hidden, row, 0.3, rng, tol) {
            return s;
        }
    }
    let mut values: Vec<f64> = row
        .support()
        .map(|_| if rng.random_bool(0.5) { rng.random_range(0.0..1.0) } else { 0.0 })
        .collect();
    repair_to_cover(row, &mut values).unwrap();
    Assignment::new(
        row.support()
            .zip(values)
            .filter(|&(_, v)| v > 0.0)
            .collect(),
    )
    .unwrap()
}

/// Covering instance with `n <= 12`, `m <= 8`, `k <= 4`.
pub fn random_covering(seed: u64) -> CoveringSuite {
    let tol = Tolerances::default();
    let mut rng = stream_rng(seed, 100);
    let n = rng.random_range(2..=12);
    let m = rng.random_range(1..=8);
    let k = rng.random_range(1..=4);
    random_covering_shape(seed, n, m, k, &mut rng, &tol)
}

pub fn random_covering_shape(
    seed: u64,
    n: usize,
    m: usize,
    k: usize,
    rng: &mut ChaCha8Rng,
    tol: &Tolerances,
) -> CoveringSuite {
    let costs: Vec<f64> = (0..n).map(|_| (rng.random_range(-1.5f64..2.0)).exp()).collect();
    let hidden: Vec<Vec<f64>> = (0..k)
        .map(|_| {
            (0..n)
                .map(|_| if rng.random_bool(0.4) { 1.0 } else { rng.random_range(0.0..0.5) })
                .collect()
        })
        .collect();
    let mut rows = Vec::with_capacity(m);
    let mut raw = Vec::with_capacity(m);
    for j in 0..m {
        let row = random_row(rng, j, n, 4);
        let s = hidden
            .iter()
            .map(|h| expert_suggestion(rng, h, &row, tol))
            .collect();
        rows.push(row);
        raw.push(s);
    }
    CoveringSuite {
        seed,
        n,
        k,
        costs,
        rows,
        raw,
    }
}

impl CoveringSuite {
    /// Runs the engine and records the tightened history.
    pub fn run(&self, tol: Tolerances) -> (CoveringEngine, SuggestionHistory) {
        let mut engine = CoveringEngine::new(self.costs.clone(), tol).unwrap();
        let mut history = SuggestionHistory::new(self.costs.clone());
        for (row, raw) in self.rows.iter().zip(&self.raw) {
            let set = SuggestionSet::tightened(row, raw, &tol).unwrap();
            engine.process(row, &set).unwrap();
            history.push(row.clone(), set).unwrap();
        }
        (engine, history)
    }
}

#[derive(Debug, Clone)]
pub struct BoxSuite {
    pub seed: u64,
    pub n: usize,
    pub k: usize,
    pub costs: Vec<f64>,
    pub rows: Vec<SparseConstraint>,
    pub d: Vec<Vec<(usize, f64)>>,
    pub raw: Vec<Vec<BoxSuggestion>>,
}

/// Facility-style box instance: `≤ 3` facilities, `≤ 4` clients, `k ≤ 3`,
/// unit coefficients, suggestions that open one facility and assign to it
/// (or split between two).
pub fn random_facility_box(seed: u64) -> BoxSuite {
    let mut rng = stream_rng(seed, 200);
    let n = rng.random_range(1..=3);
    let m = rng.random_range(1..=4);
    let k = rng.random_range(1..=3);
    let costs: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..4.0)).collect();
    let points: Vec<(f64, f64)> = (0..n + m).map(|_| (rng.random_range(0.0..2.0), rng.random_range(0.0..2.0))).collect();
    let mut rows = Vec::new();
    let mut ds = Vec::new();
    let mut raw = Vec::new();
    for j in 0..m {
        let client = points[n + j];
        let row = SparseConstraint::new(j, (0..n).map(|i| (i, 1.0)).collect(), n).unwrap();
        let d: Vec<(usize, f64)> = (0..n)
            .map(|i| {
                let f = points[i];
                (i, ((f.0 - client.0).powi(2) + (f.1 - client.1).powi(2)).sqrt())
            })
            .collect();
        let mut s = Vec::with_capacity(k);
        for _ in 0..k {
            let a = rng.random_range(0..n);
            let x = if n > 1 && rng.random_bool(0.3) {
                let b = (a + 1 + rng.random_range(0..n - 1)) % n;
                let w = rng.random_range(0.1..0.9);
                let mut e = vec![(a, w), (b, 1.0 - w)];
                e.sort_by_key(|p| p.0);
                Assignment::new(e).unwrap()
            } else {
                Assignment::new(vec![(a, 1.0)]).unwrap()
            };
            s.push(BoxSuggestion { y: x.clone(), x });
        }
        rows.push(row);
        ds.push(d);
        raw.push(s);
    }
    BoxSuite {
        seed,
        n,
        k,
        costs,
        rows,
        d: ds,
        raw,
    }
}

impl BoxSuite {
    pub fn run(&self, tol: Tolerances) -> (BoxEngine, BoxHistory) {
        let mut engine = BoxEngine::new(self.costs.clone(), tol).unwrap();
        let mut history = BoxHistory::new(self.costs.clone());
        for ((row, d), raw) in self.rows.iter().zip(&self.d).zip(&self.raw) {
            let set = BoxSuggestionSet::tightened(row, raw, &tol).unwrap();
            engine.process(row, d, &set).unwrap();
            history.push(row.clone(), d.clone(), set).unwrap();
        }
        (engine, history)
    }
}
