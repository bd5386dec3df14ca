mod common;

use copredict::benchmarks::{dynamic_benchmark, static_benchmark, verify_ledger, LedgerCheck, DEFAULT_BUDGET};
use copredict::robust::robust_run;
use copredict::Tolerances;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn engine_output_is_feasible_and_capped(seed in any::<u64>()) {
        let tol = Tolerances::default();
        let suite = common::random_covering(seed);
        let (engine, _) = suite.run(tol);
        for &x in engine.state().x() {
            prop_assert!((0.0..=0.5 + tol.sat).contains(&x));
        }
        let out = engine.output();
        for row in &suite.rows {
            prop_assert!(row.value(&out) >= 1.0 - 2.0 * tol.sat);
        }
        prop_assert!((engine.output_cost() - 2.0 * engine.state().internal_cost()).abs() <= 1e-9);
    }

    #[test]
    fn phases_are_monotone_and_rate_bounded(seed in any::<u64>()) {
        let tol = Tolerances::default();
        let suite = common::random_covering(seed);
        let (engine, _) = suite.run(tol);
        for step in &engine.trace().steps {
            for phase in &step.phases {
                prop_assert!(phase.duration >= 0.0);
                prop_assert!(phase.cost_increment >= 0.0);
                prop_assert!(phase.cost_increment <= 1.5 * phase.duration + tol.ledger_abs);
                for (&a, &b) in phase.start.iter().zip(&phase.end) {
                    prop_assert!(b >= a);
                }
            }
        }
    }

    #[test]
    fn runs_are_deterministic(seed in any::<u64>()) {
        let tol = Tolerances::default();
        let suite = common::random_covering(seed);
        let (a, _) = suite.run(tol);
        let (b, _) = suite.run(tol);
        prop_assert_eq!(a.trace(), b.trace());
        prop_assert_eq!(a.state().x(), b.state().x());
    }

    #[test]
    fn whole_run_ledger_and_bound(seed in any::<u64>()) {
        let tol = Tolerances::default();
        let suite = common::random_covering(seed);
        let (engine, history) = suite.run(tol);
        let cert = dynamic_benchmark(&history, DEFAULT_BUDGET).unwrap();
        prop_assert!(cert.cost <= static_benchmark(&history).cost);
        let ledger = verify_ledger(engine.trace(), &suite.costs, &cert, 1.0 / suite.k as f64, &tol);
        prop_assert!(!ledger.violations.iter().any(|v| matches!(v.check, LedgerCheck::Total | LedgerCheck::CostRate)));
        prop_assert!(ledger.phi_final >= -tol.ledger_abs);
        let limit = 6.0 * ((suite.k + 1) as f64).ln() * cert.cost;
        prop_assert!(engine.output_cost() <= limit + tol.ledger_slack(engine.output_cost(), limit));
    }

    #[test]
    fn box_output_respects_boxes(seed in any::<u64>()) {
        let tol = Tolerances::default();
        let suite = common::random_facility_box(seed);
        let (engine, _) = suite.run(tol);
        let (y, x) = engine.output();
        for (row, xs) in suite.rows.iter().zip(&x) {
            let covered: f64 = xs.iter().map(|&(i, v)| row.coeff(i) * v).sum();
            prop_assert!(covered >= 1.0 - 2.0 * tol.sat);
            for &(i, v) in xs {
                prop_assert!(v <= y[i] + 2.0 * tol.sat);
            }
        }
        prop_assert!(y.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn robust_feasible_and_within_guarantee(seed in any::<u64>()) {
        let tol = Tolerances::default();
        let suite = common::random_covering(seed);
        let out = robust_run(
            suite.costs.clone(),
            suite.rows.iter().zip(suite.raw.iter().map(Vec::as_slice)),
            tol,
        )
        .unwrap();
        for row in &suite.rows {
            prop_assert!(row.value(&out.solution) >= 1.0 - 2.0 * tol.sat);
        }
        prop_assert!(out.check_guarantee(&tol).is_ok());
    }
}
