//! Suggestion generators: oracle, noisy and the adversarial lower-bound family.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::model::{tighten, Assignment, ModelError, SparseConstraint};
use crate::tolerance::Tolerances;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PredictorError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("reference covers constraint {step} only to {value} (< 1)")]
    InfeasibleReference { step: usize, value: f64 },
    #[error("constraint {step} cannot be covered even with its whole support at 1")]
    RepairFailed { step: usize },
    #[error("noise level must be finite and non-negative, got {0}")]
    InvalidNoise(f64),
    #[error("lower-bound instance needs k >= 1 and T >= 1")]
    InvalidShape,
}

/// Deterministic generator for `(seed, stream)`; distinct streams are independent.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Reference vector restricted to the constraint support, then tightened.
pub fn oracle_predictor(
    reference: &[f64],
    constraint: &SparseConstraint,
    tol: &Tolerances,
) -> Result<Assignment, PredictorError> {
    let projected = Assignment::new(
        constraint
            .support()
            .map(|i| (i, reference.get(i).copied().unwrap_or(0.0).clamp(0.0, 1.0)))
            .filter(|&(_, v)| v > 0.0)
            .collect(),
    )?;
    let value = constraint.value_of(&projected);
    if value < 1.0 - tol.tight {
        return Err(PredictorError::InfeasibleReference {
            step: constraint.step(),
            value,
        });
    }
    Ok(tighten(constraint, &projected, tol)?)
}

/// Lifts `values` (aligned with the constraint support) until the row reaches 1.
///
/// Entries are first scaled uniformly, then clamped to 1; any remaining
/// deficit is spread proportionally over the unclamped entries (uniformly
/// when those are all zero), repeating until the row is covered.
pub fn repair_to_cover(
    constraint: &SparseConstraint,
    values: &mut [f64],
) -> Result<(), PredictorError> {
    let coeffs = constraint.coeffs();
    debug_assert_eq!(coeffs.len(), values.len());
    let row = |v: &[f64]| -> f64 { coeffs.iter().zip(v).map(|(&(_, a), x)| a * x).sum() };
    let value = row(values);
    if value < 1.0 && value > 0.0 {
        values.iter_mut().for_each(|v| *v /= value);
    }
    for _ in 0..=values.len() {
        values.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
        let deficit = 1.0 - row(values);
        if deficit <= 0.0 {
            return Ok(());
        }
        let open: Vec<usize> = (0..values.len()).filter(|&p| values[p] < 1.0).collect();
        if open.is_empty() {
            break;
        }
        let weight: f64 = open.iter().map(|&p| coeffs[p].1 * values[p]).sum();
        if weight > 0.0 {
            let factor = 1.0 + deficit / weight;
            for &p in &open {
                values[p] *= factor;
            }
        } else {
            let mass: f64 = open.iter().map(|&p| coeffs[p].1).sum();
            for &p in &open {
                values[p] = deficit / mass;
            }
        }
    }
    values.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    if row(values) >= 1.0 - 1e-12 {
        Ok(())
    } else {
        Err(PredictorError::RepairFailed {
            step: constraint.step(),
        })
    }
}

/// Oracle suggestion perturbed by log-normal noise `exp(σ g)`, repaired to a
/// cover and tightened.
pub fn noisy_predictor<R: Rng + ?Sized>(
    reference: &[f64],
    constraint: &SparseConstraint,
    sigma: f64,
    rng: &mut R,
    tol: &Tolerances,
) -> Result<Assignment, PredictorError> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(PredictorError::InvalidNoise(sigma));
    }
    let mut values: Vec<f64> = constraint
        .support()
        .map(|i| {
            let g: f64 = rng.sample(StandardNormal);
            reference.get(i).copied().unwrap_or(0.0).clamp(0.0, 1.0) * (sigma * g).exp()
        })
        .collect();
    repair_to_cover(constraint, &mut values)?;
    let raw = Assignment::new(
        constraint
            .support()
            .zip(values)
            .filter(|&(_, v)| v > 0.0)
            .collect(),
    )?;
    Ok(tighten(constraint, &raw, tol)?)
}

/// Covering instance whose suggestions come from fixed experts.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertInstance {
    pub n: usize,
    pub costs: Vec<f64>,
    /// Per step, the row and one suggestion per expert position.
    pub steps: Vec<(SparseConstraint, Vec<Assignment>)>,
}

/// Variable `(round, column)` of the lower-bound family, 0-based.
pub fn lower_bound_var(t: usize, round: usize, column: usize) -> usize {
    round * t + column
}

/// Adversarial family with `k` rounds of `T` unit-cost rows.
///
/// Row `(i, j)` is covered by the variables `(i', j)` for every `i' >= i`.
/// While row `(i, j)` is live, expert `i' >= i` puts 1 on `(i', j)`; experts
/// that are already out put 1 on `(i, j)`. Expert labels are shuffled by a
/// seeded permutation, so suggestion position `π(e)` carries expert `e`.
/// Following the last expert costs exactly `T`.
pub fn gen_lower_bound(k: usize, t: usize, seed: u64) -> Result<(ExpertInstance, Vec<usize>), PredictorError> {
    if k == 0 || t == 0 {
        return Err(PredictorError::InvalidShape);
    }
    let n = k * t;
    let mut perm: Vec<usize> = (0..k).collect();
    perm.shuffle(&mut stream_rng(seed, 0));
    let mut steps = Vec::with_capacity(n);
    for round in 0..k {
        for column in 0..t {
            let coeffs = (round..k)
                .map(|r| (lower_bound_var(t, r, column), 1.0))
                .collect();
            let row = SparseConstraint::new(round * t + column, coeffs, n)?;
            let mut suggestions = vec![Assignment::default(); k];
            for expert in 0..k {
                let var = lower_bound_var(t, expert.max(round), column);
                suggestions[perm[expert]] = Assignment::new(vec![(var, 1.0)])?;
            }
            steps.push((row, suggestions));
        }
    }
    Ok((
        ExpertInstance {
            n,
            costs: vec![1.0; n],
            steps,
        },
        perm,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(coeffs: &[(usize, f64)]) -> SparseConstraint {
        SparseConstraint::new(4, coeffs.to_vec(), 6).unwrap()
    }

    #[test]
    fn oracle_of_all_ones_is_uniform() {
        let c = row(&[(0, 1.0), (2, 1.0), (3, 2.0)]);
        let s = oracle_predictor(&[1.0; 6], &c, &Tolerances::default()).unwrap();
        assert_eq!(s.entries(), &[(0, 0.25), (2, 0.25), (3, 0.25)]);
        assert!((c.value_of(&s) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_rejects_uncovering_reference() {
        let c = row(&[(0, 1.0), (1, 1.0)]);
        let err = oracle_predictor(&[0.2, 0.3, 1.0, 1.0, 1.0, 1.0], &c, &Tolerances::default()).unwrap_err();
        assert!(matches!(err, PredictorError::InfeasibleReference { step: 4, .. }));
    }

    #[test]
    fn zero_noise_matches_oracle() {
        let c = row(&[(0, 1.0), (1, 0.5), (5, 2.0)]);
        let reference = [0.5, 1.0, 0.0, 0.0, 0.0, 0.3];
        let tol = Tolerances::default();
        let exact = oracle_predictor(&reference, &c, &tol).unwrap();
        let noisy = noisy_predictor(&reference, &c, 0.0, &mut stream_rng(7, 1), &tol).unwrap();
        assert_eq!(exact, noisy);
    }

    #[test]
    fn noisy_outputs_are_tight() {
        let c = row(&[(0, 1.0), (1, 0.5), (3, 0.7), (5, 2.0)]);
        let reference = [0.5, 1.0, 0.0, 0.2, 0.0, 0.3];
        let tol = Tolerances::default();
        for seed in 0..100 {
            let s = noisy_predictor(&reference, &c, 0.5, &mut stream_rng(seed, 3), &tol).unwrap();
            assert!((c.value_of(&s) - 1.0).abs() <= tol.tight, "seed {seed}");
            assert!(s.entries().iter().all(|&(_, v)| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn repair_redistributes_clamped_deficit() {
        // upscaling by 1/0.6 pushes the first entry to 5/3, which clamps;
        // the remaining deficit 1/3 lands on the second entry
        let c = row(&[(0, 0.5), (1, 1.0)]);
        let mut v = [1.0, 0.1];
        repair_to_cover(&c, &mut v).unwrap();
        assert_eq!(v[0], 1.0);
        assert!((v[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn repair_fails_on_uncoverable_row() {
        let c = row(&[(0, 0.3), (1, 0.3)]);
        let mut v = [0.1, 0.1];
        assert!(matches!(repair_to_cover(&c, &mut v), Err(PredictorError::RepairFailed { .. })));
    }

    #[test]
    fn lower_bound_two_experts_single_column() {
        let (inst, perm) = gen_lower_bound(2, 1, 0).unwrap();
        assert_eq!(inst.n, 2);
        let (r0, s0) = &inst.steps[0];
        assert_eq!(r0.coeffs(), &[(0, 1.0), (1, 1.0)]);
        let (r1, s1) = &inst.steps[1];
        assert_eq!(r1.coeffs(), &[(1, 1.0)]);
        // the last expert always sits on variable (1, 0)
        assert_eq!(s0[perm[1]].entries(), &[(1, 1.0)]);
        assert_eq!(s0[perm[0]].entries(), &[(0, 1.0)]);
        assert!(s1.iter().all(|s| s.entries() == [(1, 1.0)]));
    }

    #[test]
    fn lower_bound_is_seeded() {
        assert_eq!(gen_lower_bound(8, 4, 11).unwrap(), gen_lower_bound(8, 4, 11).unwrap());
        assert!(gen_lower_bound(0, 4, 1).is_err());
    }
}
