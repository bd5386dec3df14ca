//! Seeded instance generators for experiments and the `gen` command.

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::adapters::caching::CacheModel;
use crate::adapters::facility::{open_and_assign, FacilityInstance};
use crate::adapters::setcover::{setcover_opt, setcover_to_constraint, SetCoverInstance};
use crate::adapters::AdapterError;
use crate::format::{BoxStepData, CachingData, CoveringStep, InstanceFile, Problem, Steps};
use crate::model::{Assignment, ModelError};
use crate::predictors::{gen_lower_bound, noisy_predictor, oracle_predictor, stream_rng, PredictorError};
use crate::tolerance::Tolerances;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum GenerateError {
    #[error(transparent)]
    Predictor(#[from] PredictorError),
    #[error(transparent)]
    Adapter(#[from] AdapterError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid generator parameter: {0}")]
    Parameter(String),
}

/// Lower-bound family as a covering instance.
pub fn lower_bound_instance(k: usize, t: usize, seed: u64) -> Result<InstanceFile, GenerateError> {
    let (inst, _) = gen_lower_bound(k, t, seed)?;
    Ok(InstanceFile {
        k,
        problem: Problem::Covering { costs: inst.costs },
        steps: Steps::Covering(
            inst.steps
                .into_iter()
                .map(|(constraint, suggestions)| CoveringStep {
                    constraint,
                    suggestions,
                    tag: None,
                })
                .collect(),
        ),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SuggestionMode {
    /// Every expert follows an optimal (or, above 20 sets, greedy) cover.
    Oracle,
    /// Oracle cover with independent log-normal noise per expert.
    Noisy(f64),
    /// Expert `s` puts all mass on the `s`-th most expensive containing set.
    Adversarial,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SetCoverParams {
    pub sets: usize,
    pub elements: usize,
    /// Maximum number of sets per element.
    pub frequency: usize,
    /// Number of arrivals (elements may repeat).
    pub arrivals: usize,
    pub k: usize,
    pub mode: SuggestionMode,
}

/// Greedy weighted cover of the arrived elements (a feasible reference).
pub fn greedy_cover(instance: &SetCoverInstance) -> Vec<usize> {
    let mut uncovered: Vec<usize> = instance.arrivals().to_vec();
    uncovered.sort_unstable();
    uncovered.dedup();
    let sets = instance.sets();
    let mut chosen = Vec::new();
    while !uncovered.is_empty() {
        let mut best: Option<(usize, f64)> = None;
        for (s, members) in sets.iter().enumerate() {
            let gain = members.iter().filter(|u| uncovered.binary_search(u).is_ok()).count();
            if gain == 0 {
                continue;
            }
            let price = instance.weights()[s] / gain as f64;
            if best.is_none_or(|(_, p)| price < p) {
                best = Some((s, price));
            }
        }
        let (s, _) = best.expect("every arrived element has a containing set");
        chosen.push(s);
        uncovered.retain(|u| sets[s].binary_search(u).is_err());
    }
    chosen.sort_unstable();
    chosen
}

/// Reference cover used by the oracle suggestions, as a 0/1 vector.
pub fn reference_cover(instance: &SetCoverInstance) -> Vec<f64> {
    let chosen = if instance.set_count() <= 20 {
        setcover_opt(instance).0
    } else {
        greedy_cover(instance)
    };
    let mut x = vec![0.0; instance.set_count()];
    for s in chosen {
        x[s] = 1.0;
    }
    x
}

pub fn random_setcover_instance(params: &SetCoverParams, seed: u64) -> Result<SetCoverInstance, GenerateError> {
    let SetCoverParams {
        sets,
        elements,
        frequency,
        arrivals,
        ..
    } = *params;
    if sets == 0 || elements == 0 || frequency == 0 {
        return Err(GenerateError::Parameter("set cover needs sets, elements and frequency >= 1".into()));
    }
    let mut rng = stream_rng(seed, 10);
    let weights: Vec<f64> = (0..sets).map(|_| rng.random_range(1.0..10.0)).collect();
    let membership: Vec<Vec<usize>> = (0..elements)
        .map(|_| {
            let f = rng.random_range(1..=frequency.min(sets));
            sample(&mut rng, sets, f).into_vec()
        })
        .collect();
    let stream: Vec<usize> = if arrivals == elements {
        let mut order: Vec<usize> = (0..elements).collect();
        order.shuffle(&mut rng);
        order
    } else {
        (0..arrivals).map(|_| rng.random_range(0..elements)).collect()
    };
    Ok(SetCoverInstance::new(weights, membership, stream, None)?)
}

/// Set-cover instance with suggestions of the chosen mode.
pub fn setcover_instance(params: &SetCoverParams, seed: u64) -> Result<InstanceFile, GenerateError> {
    if params.k == 0 {
        return Err(GenerateError::Parameter("k must be at least 1".into()));
    }
    let tol = Tolerances::default();
    let instance = random_setcover_instance(params, seed)?;
    let reference = reference_cover(&instance);
    let mut rng = stream_rng(seed, 11);
    let mut steps = Vec::with_capacity(instance.arrivals().len());
    for (j, &u) in instance.arrivals().iter().enumerate() {
        let constraint = setcover_to_constraint(&instance, u, j)?;
        let suggestions = (0..params.k)
            .map(|s| match params.mode {
                SuggestionMode::Oracle => oracle_predictor(&reference, &constraint, &tol),
                SuggestionMode::Noisy(sigma) => noisy_predictor(&reference, &constraint, sigma, &mut rng, &tol),
                SuggestionMode::Adversarial => {
                    let mut by_cost: Vec<usize> = instance.containing(u).to_vec();
                    by_cost.sort_by(|&a, &b| instance.weights()[b].total_cmp(&instance.weights()[a]));
                    let set = by_cost[s % by_cost.len()];
                    Ok(Assignment::new(vec![(set, 1.0)])?)
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        steps.push(CoveringStep {
            constraint,
            suggestions,
            tag: Some(u),
        });
    }
    Ok(InstanceFile {
        k: params.k,
        problem: Problem::SetCover(instance),
        steps: Steps::Covering(steps),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CachingParams {
    pub pages: usize,
    pub h: usize,
    pub length: usize,
    pub k: usize,
}

/// Random weighted paging trace. Expert `s` keeps a private priority order
/// over pages and, on each emitted row, fully evicts the `|B| - h`
/// lowest-priority candidates.
pub fn caching_instance(params: &CachingParams, seed: u64) -> Result<InstanceFile, GenerateError> {
    let CachingParams { pages, h, length, k } = *params;
    if pages == 0 || k == 0 || h == 0 {
        return Err(GenerateError::Parameter("caching needs pages, h and k >= 1".into()));
    }
    let mut rng = stream_rng(seed, 20);
    let weights: Vec<f64> = (0..pages).map(|_| rng.random_range(1..=5) as f64).collect();
    let trace: Vec<usize> = (0..length).map(|_| rng.random_range(0..pages)).collect();
    let priorities: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..pages).map(|_| rng.random::<f64>()).collect())
        .collect();
    let mut model = CacheModel::new(weights.clone(), h, length)?;
    let mut steps = Vec::new();
    for (position, &p) in trace.iter().enumerate() {
        let Some(constraint) = model.request(p)? else {
            continue;
        };
        let excess = model.requested().len() - h;
        let suggestions = priorities
            .iter()
            .map(|prio| {
                let mut candidates: Vec<usize> = constraint.support().collect();
                candidates.sort_by(|&a, &b| {
                    let (pa, pb) = (model.registry()[a].page, model.registry()[b].page);
                    prio[pa].total_cmp(&prio[pb])
                });
                Assignment::new(candidates[..excess].iter().map(|&i| (i, 1.0)).collect())
            })
            .collect::<Result<Vec<_>, _>>()?;
        steps.push(CoveringStep {
            constraint,
            suggestions,
            tag: Some(position),
        });
    }
    Ok(InstanceFile {
        k,
        problem: Problem::Caching(CachingData { weights, h, trace }),
        steps: Steps::Covering(steps),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FacilityParams {
    pub facilities: usize,
    pub clients: usize,
    pub k: usize,
}

/// Euclidean instance in the unit square. Expert `s` knows a random
/// nonempty subset of facilities and sends each client to the nearest one.
pub fn facility_instance(params: &FacilityParams, seed: u64) -> Result<InstanceFile, GenerateError> {
    let FacilityParams { facilities, clients, k } = *params;
    if facilities == 0 || k == 0 {
        return Err(GenerateError::Parameter("facility location needs facilities and k >= 1".into()));
    }
    let mut rng = stream_rng(seed, 30);
    let points: Vec<(f64, f64)> = (0..facilities + clients)
        .map(|_| (rng.random::<f64>(), rng.random::<f64>()))
        .collect();
    let opening: Vec<f64> = (0..facilities).map(|_| rng.random_range(0.5..2.0)).collect();
    let instance = FacilityInstance::euclidean(
        &points,
        (0..facilities).collect(),
        opening.clone(),
        (facilities..facilities + clients).collect(),
    )?;
    let known: Vec<Vec<usize>> = (0..k)
        .map(|_| {
            let size = rng.random_range(1..=facilities);
            sample(&mut rng, facilities, size).into_vec()
        })
        .collect();
    let mut steps = Vec::with_capacity(clients);
    for j in 0..clients {
        let constraint = crate::model::SparseConstraint::new(j, (0..facilities).map(|i| (i, 1.0)).collect(), facilities)?;
        let d: Vec<(usize, f64)> = (0..facilities).map(|i| (i, instance.distance(j, i))).collect();
        let suggestions = known
            .iter()
            .map(|fs| {
                let best = *fs
                    .iter()
                    .min_by(|&&a, &&b| d[a].1.total_cmp(&d[b].1).then(a.cmp(&b)))
                    .expect("nonempty");
                open_and_assign(best)
            })
            .collect();
        steps.push(BoxStepData {
            constraint,
            d,
            suggestions,
        });
    }
    Ok(InstanceFile {
        k,
        problem: Problem::Facility(instance),
        steps: Steps::Box(steps),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::{parse_instance, write_instance};

    fn round_trips(file: &InstanceFile) {
        let text = write_instance(file).unwrap();
        let parsed = parse_instance(&text).unwrap();
        assert_eq!(write_instance(&parsed).unwrap(), text);
    }

    #[test]
    fn lower_bound_two_by_one() {
        let f = lower_bound_instance(2, 1, 0).unwrap();
        assert_eq!(f.problem.n(), 2);
        assert_eq!(f.steps.len(), 2);
        round_trips(&f);
    }

    #[test]
    fn frequency_one_gives_singleton_rows() {
        let params = SetCoverParams {
            sets: 5,
            elements: 8,
            frequency: 1,
            arrivals: 8,
            k: 2,
            mode: SuggestionMode::Oracle,
        };
        let f = setcover_instance(&params, 4).unwrap();
        let Steps::Covering(steps) = &f.steps else { panic!() };
        assert!(steps.iter().all(|s| s.constraint.nonzeros() == 1));
        assert!(steps.iter().all(|s| s.suggestions.iter().all(|a| a.entries().len() == 1 && a.entries()[0].1 == 1.0)));
        round_trips(&f);
    }

    #[test]
    fn generated_files_round_trip() {
        for seed in 0..5 {
            for mode in [SuggestionMode::Oracle, SuggestionMode::Noisy(0.5), SuggestionMode::Adversarial] {
                let params = SetCoverParams {
                    sets: 6,
                    elements: 10,
                    frequency: 3,
                    arrivals: 12,
                    k: 3,
                    mode,
                };
                round_trips(&setcover_instance(&params, seed).unwrap());
            }
            round_trips(&caching_instance(&CachingParams { pages: 5, h: 2, length: 20, k: 2 }, seed).unwrap());
            round_trips(&facility_instance(&FacilityParams { facilities: 3, clients: 4, k: 2 }, seed).unwrap());
        }
    }

    #[test]
    fn greedy_covers_everything() {
        let params = SetCoverParams {
            sets: 25,
            elements: 30,
            frequency: 4,
            arrivals: 30,
            k: 1,
            mode: SuggestionMode::Oracle,
        };
        let inst = random_setcover_instance(&params, 2).unwrap();
        let chosen = greedy_cover(&inst);
        for &u in inst.arrivals() {
            assert!(inst.containing(u).iter().any(|s| chosen.contains(s)));
        }
    }

    #[test]
    fn generators_are_seeded() {
        let p = FacilityParams { facilities: 2, clients: 3, k: 2 };
        assert_eq!(facility_instance(&p, 1).unwrap(), facility_instance(&p, 1).unwrap());
        assert_ne!(facility_instance(&p, 1).unwrap(), facility_instance(&p, 2).unwrap());
    }
}
