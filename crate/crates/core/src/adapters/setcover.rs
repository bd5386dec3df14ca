//! Online set cover: one covering row per arriving element, plus online
//! threshold rounding of the fractional solution.

use rand::Rng;

use super::{check_weights, AdapterError};
use crate::model::SparseConstraint;
use crate::predictors::stream_rng;

#[derive(Debug, Clone, PartialEq)]
pub struct SetCoverInstance {
    weights: Vec<f64>,
    /// `membership[u]` lists the sets containing element `u`, ascending.
    membership: Vec<Vec<usize>>,
    arrivals: Vec<usize>,
    /// A-priori upper bound on the number of elements, used by the rounding.
    element_bound: usize,
}

impl SetCoverInstance {
    pub fn new(
        weights: Vec<f64>,
        mut membership: Vec<Vec<usize>>,
        arrivals: Vec<usize>,
        element_bound: Option<usize>,
    ) -> Result<Self, AdapterError> {
        check_weights("set", &weights, false)?;
        let n = weights.len();
        for sets in &mut membership {
            sets.sort_unstable();
            sets.dedup();
            if let Some(&set) = sets.iter().find(|&&s| s >= n) {
                return Err(AdapterError::UnknownSet { set, n });
            }
        }
        let m = membership.len();
        for &element in &arrivals {
            if element >= m {
                return Err(AdapterError::UnknownElement { element, m });
            }
            if membership[element].is_empty() {
                return Err(AdapterError::UncoverableElement { element });
            }
        }
        let element_bound = element_bound.unwrap_or(m);
        if element_bound < m {
            return Err(AdapterError::ElementBound {
                bound: element_bound,
                m,
            });
        }
        Ok(Self {
            weights,
            membership,
            arrivals,
            element_bound,
        })
    }

    /// Builds membership lists from set contents.
    pub fn from_sets(
        weights: Vec<f64>,
        sets: &[Vec<usize>],
        elements: usize,
        arrivals: Vec<usize>,
        element_bound: Option<usize>,
    ) -> Result<Self, AdapterError> {
        let mut membership = vec![Vec::new(); elements];
        for (s, members) in sets.iter().enumerate() {
            for &u in members {
                if u >= elements {
                    return Err(AdapterError::UnknownElement {
                        element: u,
                        m: elements,
                    });
                }
                membership[u].push(s);
            }
        }
        Self::new(weights, membership, arrivals, element_bound)
    }

    pub fn set_count(&self) -> usize {
        self.weights.len()
    }

    pub fn element_count(&self) -> usize {
        self.membership.len()
    }

    pub fn element_bound(&self) -> usize {
        self.element_bound
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn membership(&self) -> &[Vec<usize>] {
        &self.membership
    }

    pub fn containing(&self, element: usize) -> &[usize] {
        &self.membership[element]
    }

    pub fn arrivals(&self) -> &[usize] {
        &self.arrivals
    }

    /// Maximum number of sets containing an element.
    pub fn frequency(&self) -> usize {
        self.membership.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Contents of each set, ascending.
    pub fn sets(&self) -> Vec<Vec<usize>> {
        let mut sets = vec![Vec::new(); self.set_count()];
        for (u, containing) in self.membership.iter().enumerate() {
            for &s in containing {
                sets[s].push(u);
            }
        }
        sets
    }

    /// Cheapest containing set, lowest index on ties.
    pub fn cheapest_containing(&self, element: usize) -> usize {
        let mut best = self.membership[element][0];
        for &s in &self.membership[element][1..] {
            if self.weights[s] < self.weights[best] {
                best = s;
            }
        }
        best
    }
}

/// `Σ_{S ∋ u} x_S >= 1`, with `step` as the row label.
pub fn setcover_to_constraint(
    instance: &SetCoverInstance,
    element: usize,
    step: usize,
) -> Result<SparseConstraint, AdapterError> {
    let m = instance.element_count();
    if element >= m {
        return Err(AdapterError::UnknownElement { element, m });
    }
    let sets = instance.containing(element);
    if sets.is_empty() {
        return Err(AdapterError::UncoverableElement { element });
    }
    Ok(SparseConstraint::new(
        step,
        sets.iter().map(|&s| (s, 1.0)).collect(),
        instance.set_count(),
    )?)
}

/// Rows for the whole arrival stream.
pub fn setcover_constraints(instance: &SetCoverInstance) -> Result<Vec<SparseConstraint>, AdapterError> {
    instance
        .arrivals()
        .iter()
        .enumerate()
        .map(|(j, &u)| setcover_to_constraint(instance, u, j))
        .collect()
}

/// Threshold draws per set: `⌈2 ln(M + 1)⌉`.
pub fn threshold_draws(element_bound: usize) -> usize {
    (2.0 * ((element_bound + 1) as f64).ln()).ceil().max(1.0) as usize
}

/// Online threshold rounding. Each set draws `μ(S)`, the minimum of
/// [`threshold_draws`] uniforms, and is bought once its fractional value
/// reaches `μ(S)`. An element still uncovered after that buys its cheapest
/// containing set.
#[derive(Debug, Clone, PartialEq)]
pub struct OnlineRounding {
    thresholds: Vec<f64>,
    bought: Vec<bool>,
    order: Vec<usize>,
    cost: f64,
    fallbacks: usize,
}

impl OnlineRounding {
    pub fn new(instance: &SetCoverInstance, seed: u64) -> Self {
        let draws = threshold_draws(instance.element_bound());
        let mut rng = stream_rng(seed, 1);
        let thresholds = (0..instance.set_count())
            .map(|_| (0..draws).map(|_| rng.random::<f64>()).fold(1.0, f64::min))
            .collect();
        Self {
            thresholds,
            bought: vec![false; instance.set_count()],
            order: Vec::new(),
            cost: 0.0,
            fallbacks: 0,
        }
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    fn buy(&mut self, set: usize, weight: f64) {
        if !self.bought[set] {
            self.bought[set] = true;
            self.order.push(set);
            self.cost += weight;
        }
    }

    /// Feeds the fractional vector after element `element` was processed.
    pub fn observe(
        &mut self,
        instance: &SetCoverInstance,
        fractional: &[f64],
        element: usize,
    ) -> Result<(), AdapterError> {
        if fractional.len() != instance.set_count() {
            return Err(AdapterError::FractionalLength {
                expected: instance.set_count(),
                found: fractional.len(),
            });
        }
        for (s, &v) in fractional.iter().enumerate() {
            if v >= self.thresholds[s] {
                self.buy(s, instance.weights()[s]);
            }
        }
        if !instance.containing(element).iter().any(|&s| self.bought[s]) {
            let s = instance.cheapest_containing(element);
            self.buy(s, instance.weights()[s]);
            self.fallbacks += 1;
        }
        Ok(())
    }

    pub fn selected(&self) -> &[bool] {
        &self.bought
    }

    /// Sets in purchase order.
    pub fn purchase_order(&self) -> &[usize] {
        &self.order
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }

    pub fn fallbacks(&self) -> usize {
        self.fallbacks
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundingOutcome {
    pub selected: Vec<bool>,
    pub cost: f64,
    pub fallbacks: usize,
}

/// Rounds a stream of fractional vectors, one per arrival.
pub fn round_setcover_online(
    instance: &SetCoverInstance,
    fractional: &[Vec<f64>],
    seed: u64,
) -> Result<RoundingOutcome, AdapterError> {
    let mut rounding = OnlineRounding::new(instance, seed);
    for (x, &u) in fractional.iter().zip(instance.arrivals()) {
        rounding.observe(instance, x, u)?;
    }
    Ok(RoundingOutcome {
        selected: rounding.bought,
        cost: rounding.cost,
        fallbacks: rounding.fallbacks,
    })
}

/// Exact minimum-weight cover of the arrived elements by subset enumeration.
/// Only for small set counts (`2^n` subsets). Returns the chosen sets and cost.
pub fn setcover_opt(instance: &SetCoverInstance) -> (Vec<usize>, f64) {
    let n = instance.set_count();
    assert!(n <= 24, "exhaustive set cover is limited to 24 sets");
    let mut needed: Vec<u32> = Vec::new();
    for &u in instance.arrivals() {
        let mask = instance.containing(u).iter().fold(0u32, |m, &s| m | (1 << s));
        needed.push(mask);
    }
    needed.sort_unstable();
    needed.dedup();
    let mut best = (u32::MAX, f64::INFINITY);
    for subset in 0u32..(1u32 << n) {
        if needed.iter().all(|&m| m & subset != 0) {
            let cost: f64 = (0..n)
                .filter(|&s| subset & (1 << s) != 0)
                .map(|s| instance.weights()[s])
                .sum();
            if cost < best.1 {
                best = (subset, cost);
            }
        }
    }
    if needed.is_empty() {
        return (Vec::new(), 0.0);
    }
    ((0..n).filter(|&s| best.0 & (1 << s) != 0).collect(), best.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> SetCoverInstance {
        // sets: 0 = {0, 1}, 1 = {1, 2}, 2 = {2}, 3 = {0}, 4 = {}, 5 = {1, 2}
        SetCoverInstance::from_sets(
            vec![1.0, 2.0, 0.5, 3.0, 1.0, 1.5],
            &[vec![0, 1], vec![1, 2], vec![2], vec![0], vec![], vec![1, 2]],
            3,
            vec![0, 1, 2],
            None,
        )
        .unwrap()
    }

    #[test]
    fn element_row_lists_containing_sets() {
        let inst = toy();
        let row = setcover_to_constraint(&inst, 2, 0).unwrap();
        assert_eq!(row.coeffs(), &[(1, 1.0), (2, 1.0), (5, 1.0)]);
        assert_eq!(inst.frequency(), 3);
    }

    #[test]
    fn uncoverable_element_rejected() {
        let err = SetCoverInstance::from_sets(vec![1.0], &[vec![0]], 2, vec![1], None).unwrap_err();
        assert_eq!(err, AdapterError::UncoverableElement { element: 1 });
    }

    #[test]
    fn full_fraction_always_bought() {
        let inst = toy();
        for seed in 0..50 {
            let frac = vec![vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]; 3];
            let out = round_setcover_online(&inst, &frac[..1], seed).unwrap();
            assert!(out.selected[0]);
            assert_eq!(out.fallbacks, 0);
        }
    }

    #[test]
    fn zero_fraction_only_fallbacks() {
        let inst = toy();
        let frac = vec![vec![0.0; 6]; 3];
        let out = round_setcover_online(&inst, &frac, 9).unwrap();
        // element 0 buys set 0 (weight 1), which also covers element 1;
        // element 2 buys set 2 (weight 0.5)
        assert_eq!(out.fallbacks, 2);
        assert_eq!(out.cost, 1.5);
        assert_eq!(out.selected, vec![true, false, true, false, false, false]);
    }

    #[test]
    fn threshold_count() {
        assert_eq!(threshold_draws(1), 2);
        assert_eq!(threshold_draws(30), 7);
        assert_eq!(threshold_draws(0), 1);
    }

    #[test]
    fn thresholds_are_seeded() {
        let inst = toy();
        assert_eq!(OnlineRounding::new(&inst, 3).thresholds(), OnlineRounding::new(&inst, 3).thresholds());
        assert_ne!(OnlineRounding::new(&inst, 3).thresholds(), OnlineRounding::new(&inst, 4).thresholds());
    }

    #[test]
    fn exhaustive_opt() {
        let (sets, cost) = setcover_opt(&toy());
        assert_eq!(sets, vec![0, 2]);
        assert_eq!(cost, 1.5);
    }
}
