/// `c · x̂ · ln((1+δ) x̂ / (x + δ x̂))` when `x̂ >= x`, else 0.
///
/// The term vanishes at `x = x̂`, so dropping it once `x` passes `x̂` keeps
/// the potential continuous.
pub fn potential_term(cost: f64, benchmark: f64, current: f64, delta: f64) -> f64 {
    if benchmark <= 0.0 || benchmark < current || cost == 0.0 {
        return 0.0;
    }
    cost * benchmark * ((1.0 + delta) * benchmark / (current + delta * benchmark)).ln()
}

/// Covering potential over all variables.
pub fn potential(x: &[f64], x_dyn: &[f64], costs: &[f64], delta: f64) -> f64 {
    x.iter()
        .zip(x_dyn)
        .zip(costs)
        .map(|((&x, &xd), &c)| potential_term(c, xd, x, delta))
        .sum()
}

/// Box potential: one term per facility plus one per `(d_ij, x_ij, x̂_ij)`
/// assignment triple.
pub fn potential_box(
    y: &[f64],
    y_dyn: &[f64],
    costs: &[f64],
    assignments: &[(f64, f64, f64)],
    delta: f64,
) -> f64 {
    potential(y, y_dyn, costs, delta)
        + assignments
            .iter()
            .map(|&(d, x, xd)| potential_term(d, xd, x, delta))
            .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unit_term_from_zero() {
        assert!((potential(&[0.0], &[1.0], &[1.0], 1.0) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn vanishes_at_benchmark() {
        let x = [0.3, 0.0, 1.0];
        assert_eq!(potential(&x, &x, &[1.0, 2.0, 3.0], 0.25), 0.0);
        assert_eq!(potential_box(&x, &x, &[1.0, 2.0, 3.0], &[(2.0, 0.4, 0.4)], 0.5), 0.0);
    }

    #[test]
    fn continuous_across_membership_boundary() {
        // |dφ/dx| <= c / δ, so each 1e-8 step moves the term by at most 6e-8
        let xd = 0.37;
        let mut prev = potential_term(2.0, xd, xd - 1e-6, 1.0 / 3.0);
        for step in 1..=200 {
            let x = xd - 1e-6 + step as f64 * 1e-8;
            let cur = potential_term(2.0, xd, x, 1.0 / 3.0);
            assert!((cur - prev).abs() <= 6e-8 + 1e-15);
            prev = cur;
        }
    }

    proptest! {
        #[test]
        fn bounded_by_log_k_plus_one(
            k in 1usize..8,
            vals in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0.1f64..10.0), 1..12)
        ) {
            let delta = 1.0 / k as f64;
            let x: Vec<f64> = vals.iter().map(|v| v.0).collect();
            let xd: Vec<f64> = vals.iter().map(|v| v.1).collect();
            let c: Vec<f64> = vals.iter().map(|v| v.2).collect();
            let phi = potential(&x, &xd, &c, delta);
            let bound: f64 = xd.iter().zip(&c).map(|(a, b)| a * b).sum::<f64>() * (1.0 + 1.0 / delta).ln();
            prop_assert!(phi >= 0.0);
            prop_assert!(phi <= bound + 1e-12);
        }

        #[test]
        fn box_potential_nonnegative(
            k in 1usize..5,
            vals in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0.0f64..5.0), 1..10)
        ) {
            let delta = 1.0 / k as f64;
            let y: Vec<f64> = vals.iter().map(|v| v.0).collect();
            let yd: Vec<f64> = vals.iter().map(|v| v.1).collect();
            let c: Vec<f64> = vals.iter().map(|v| v.2 + 0.1).collect();
            let assign: Vec<(f64, f64, f64)> = vals.iter().map(|v| (v.2, v.1 * 0.5, v.0)).collect();
            prop_assert!(potential_box(&y, &yd, &c, &assign, delta) >= 0.0);
        }
    }
}
