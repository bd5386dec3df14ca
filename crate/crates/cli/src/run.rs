use std::fs;
use std::path::{Path, PathBuf};

use copredict::adapters::setcover::OnlineRounding;
use copredict::benchmarks::{
    dynamic_benchmark, dynamic_benchmark_box, static_benchmark, static_benchmark_box,
    verify_box_ledger, verify_competitive_bound, verify_ledger, BenchmarkError, BoundCheck,
    BoxHistory, LedgerReport, SuggestionHistory,
};
use copredict::box_engine::{BoxRunTrace, BoxSuggestionSet};
use copredict::format::{canonical_json, parse_instance, InstanceFile, Problem, Steps};
use copredict::robust::{robust_factor, BaselineEngine, RobustEngine};
use copredict::engine::RunTrace;
use copredict::{CoveringEngine, CoveringState, SuggestionSet, Tolerances};
use serde_json::{json, Map, Value};

/// Failure classes with their exit codes.
#[derive(Debug)]
pub enum Failure {
    Schema(String),
    Engine(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Schema(_) => 2,
            Failure::Engine(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Schema(m) | Failure::Engine(m) => m,
        }
    }
}

fn engine_err(e: impl std::fmt::Display) -> Failure {
    Failure::Engine(e.to_string())
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub seed: u64,
    pub robust: bool,
    pub baseline_only: bool,
    pub budget: u128,
    pub round: bool,
    pub tol: Tolerances,
}

/// One trace CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub phase: usize,
    pub duration: f64,
    pub internal_cost_cum: f64,
    pub potential: Option<f64>,
    pub event_kind: &'static str,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub report: Value,
    pub trace: Vec<TraceRow>,
    /// Meta-engine trace of a robust run.
    pub robust_trace: Option<Vec<TraceRow>>,
    /// A bound, ledger or robustness check failed.
    pub violation: bool,
}

fn covering_rows(trace: &RunTrace, potentials: Option<&[f64]>) -> Vec<TraceRow> {
    let mut rows = Vec::new();
    let mut cum = 0.0;
    for step in &trace.steps {
        for (p, phase) in step.phases.iter().enumerate() {
            cum += phase.cost_increment;
            rows.push(TraceRow {
                step: step.step,
                phase: p,
                duration: phase.duration,
                internal_cost_cum: cum,
                potential: potentials.map(|v| v[rows.len()]),
                event_kind: phase.event.kind(),
            });
        }
    }
    rows
}

fn box_rows(trace: &BoxRunTrace, potentials: Option<&[f64]>) -> Vec<TraceRow> {
    let mut rows = Vec::new();
    let mut cum = 0.0;
    for step in &trace.steps {
        for (p, phase) in step.phases.iter().enumerate() {
            cum += phase.cost_increment;
            rows.push(TraceRow {
                step: step.step,
                phase: p,
                duration: phase.duration,
                internal_cost_cum: cum,
                potential: potentials.map(|v| v[rows.len()]),
                event_kind: phase.event.kind(),
            });
        }
    }
    rows
}

fn f(v: f64) -> Value {
    serde_json::Number::from_f64(v).map(Value::Number).unwrap_or(Value::Null)
}

fn ledger_json(report: &LedgerReport) -> Value {
    let worst = if report.worst_margin.is_finite() {
        f(report.worst_margin)
    } else {
        Value::Null
    };
    json!({
        "status": if report.passed() { "passed" } else { "failed" },
        "phases": report.phases,
        "phi_initial": f(report.phi_initial),
        "phi_final": f(report.phi_final),
        "total_cost": f(report.total_cost),
        "worst_margin": worst,
        "violations": report.violations.iter().map(|v| json!({
            "step": v.step,
            "phase": v.phase,
            "check": format!("{:?}", v.check),
            "lhs": f(v.lhs),
            "rhs": f(v.rhs),
        })).collect::<Vec<_>>(),
    })
}

fn skipped(reason: &str) -> Value {
    json!({"status": "skipped", "reason": reason})
}

/// DYNAMIC (or its STATIC upper bound) plus bound and ledger checks.
struct Benchmarks {
    fields: Map<String, Value>,
    potentials: Option<Vec<f64>>,
    violation: bool,
}

fn bound_json(
    output_cost: f64,
    benchmark: f64,
    k: usize,
    against: &str,
    tol: &Tolerances,
) -> (Value, bool) {
    match verify_competitive_bound(output_cost, benchmark, k, tol) {
        Ok(BoundCheck::Satisfied { ratio, limit }) => (
            json!({"status": "satisfied", "ratio": f(ratio), "limit": f(limit), "against": against}),
            false,
        ),
        Ok(BoundCheck::NotApplicable) => (json!({"status": "not_applicable", "against": against}), false),
        Err(BenchmarkError::BoundViolation { output_cost, limit }) => (
            json!({"status": "violated", "output_cost": f(output_cost), "limit_cost": f(limit), "against": against}),
            true,
        ),
        Err(e) => (json!({"status": "error", "detail": e.to_string()}), true),
    }
}

fn covering_benchmarks(
    history: &SuggestionHistory,
    trace: &RunTrace,
    output_cost: f64,
    opts: &RunOptions,
) -> Benchmarks {
    let mut fields = Map::new();
    let k = history.k().max(1);
    let st = static_benchmark(history);
    fields.insert("static".into(), f(st.cost));
    fields.insert("static_expert".into(), st.expert.into());
    match dynamic_benchmark(history, opts.budget) {
        Ok(cert) => {
            fields.insert("dynamic".into(), f(cert.cost));
            fields.insert("dynamic_is_upper_bound".into(), false.into());
            fields.insert("dynamic_choices".into(), json!(cert.choices));
            let (bound, bad_bound) = bound_json(output_cost, cert.cost, k, "dynamic", &opts.tol);
            fields.insert("bound_check".into(), bound);
            let ledger = verify_ledger(trace, history.costs(), &cert, 1.0 / k as f64, &opts.tol);
            let bad_ledger = !ledger.passed();
            fields.insert("ledger_check".into(), ledger_json(&ledger));
            Benchmarks {
                fields,
                potentials: Some(ledger.boundary_potentials),
                violation: bad_bound || bad_ledger,
            }
        }
        Err(BenchmarkError::BudgetExceeded { static_upper_bound, .. }) => {
            fields.insert("dynamic".into(), f(static_upper_bound));
            fields.insert("dynamic_is_upper_bound".into(), true.into());
            let (bound, bad) = bound_json(output_cost, static_upper_bound, k, "static_upper_bound", &opts.tol);
            fields.insert("bound_check".into(), bound);
            fields.insert("ledger_check".into(), skipped("DYNAMIC over the enumeration budget"));
            Benchmarks {
                fields,
                potentials: None,
                violation: bad,
            }
        }
        Err(e) => {
            fields.insert("bound_check".into(), json!({"status": "error", "detail": e.to_string()}));
            Benchmarks {
                fields,
                potentials: None,
                violation: true,
            }
        }
    }
}

fn covering_state(problem: &Problem) -> Result<CoveringState, Failure> {
    let costs = problem.costs();
    match problem {
        Problem::Caching(_) => CoveringState::with_free_variables(costs).map_err(engine_err),
        _ => CoveringState::new(costs).map_err(engine_err),
    }
}

fn run_covering(file: &InstanceFile, opts: &RunOptions) -> Result<RunOutcome, Failure> {
    let Steps::Covering(steps) = &file.steps else {
        unreachable!("covering kinds carry covering steps")
    };
    let mut report = Map::new();
    let tol = opts.tol;
    if opts.baseline_only {
        let mut b = BaselineEngine::from_state(covering_state(&file.problem)?, tol);
        for s in steps {
            b.process(&s.constraint).map_err(engine_err)?;
        }
        report.insert("mode".into(), "baseline".into());
        report.insert("output_cost".into(), f(b.output_cost()));
        report.insert("internal_cost".into(), f(b.state().internal_cost()));
        report.insert("phases".into(), b.trace().phase_count().into());
        report.insert("bound_check".into(), skipped("baseline run"));
        report.insert("ledger_check".into(), skipped("baseline run"));
        return Ok(RunOutcome {
            report: Value::Object(report),
            trace: covering_rows(b.trace(), None),
            robust_trace: None,
            violation: false,
        });
    }

    let mut engine = CoveringEngine::from_state(covering_state(&file.problem)?, tol);
    let mut history = SuggestionHistory::new(file.problem.costs());
    let mut sets = Vec::with_capacity(steps.len());
    let mut rounding = match (&file.problem, opts.round) {
        (Problem::SetCover(inst), true) => Some((inst, OnlineRounding::new(inst, opts.seed))),
        (_, true) => return Err(Failure::Schema("--round needs a setcover instance".into())),
        _ => None,
    };
    for s in steps {
        let set = SuggestionSet::tightened(&s.constraint, &s.suggestions, &tol).map_err(engine_err)?;
        engine.process(&s.constraint, &set).map_err(engine_err)?;
        if let Some((inst, r)) = rounding.as_mut() {
            r.observe(inst, &engine.output(), s.tag.expect("set-cover steps carry elements"))
                .map_err(engine_err)?;
        }
        history
            .push(s.constraint.clone(), set.clone())
            .map_err(|e| Failure::Schema(e.to_string()))?;
        sets.push(set);
    }
    let output_cost = engine.output_cost();
    report.insert("mode".into(), "predictions".into());
    report.insert("output_cost".into(), f(output_cost));
    report.insert("internal_cost".into(), f(engine.state().internal_cost()));
    report.insert("phases".into(), engine.trace().phase_count().into());
    let bench = covering_benchmarks(&history, engine.trace(), output_cost, opts);
    report.extend(bench.fields);
    let mut violation = bench.violation;

    if let Some((_, r)) = rounding {
        report.insert(
            "rounding".into(),
            json!({
                "integral_cost": f(r.cost()),
                "fractional_cost": f(output_cost),
                "ratio": if output_cost > 0.0 { f(r.cost() / output_cost) } else { Value::Null },
                "fallbacks": r.fallbacks(),
                "selected": r.purchase_order(),
                "seed": opts.seed,
            }),
        );
    }

    let mut robust_trace = None;
    if opts.robust {
        let mut rob = RobustEngine::from_state(covering_state(&file.problem)?, tol);
        for (s, set) in steps.iter().zip(&sets) {
            rob.process(&s.constraint, set).map_err(engine_err)?;
        }
        let out = rob.outcome();
        let (status, limit) = match out.check_guarantee(&tol) {
            Ok(limit) => ("satisfied", limit),
            Err(_) => {
                violation = true;
                ("violated", robust_factor() * out.cost_a.min(out.cost_b))
            }
        };
        report.insert(
            "robust".into(),
            json!({
                "cost": f(out.cost),
                "cost_predictions": f(out.cost_a),
                "cost_baseline": f(out.cost_b),
                "limit": f(limit),
                "factor": f(robust_factor()),
                "status": status,
            }),
        );
        robust_trace = Some(covering_rows(rob.engine_m().trace(), None));
    }

    Ok(RunOutcome {
        report: Value::Object(report),
        trace: covering_rows(engine.trace(), bench.potentials.as_deref()),
        robust_trace,
        violation,
    })
}

fn run_box(file: &InstanceFile, opts: &RunOptions) -> Result<RunOutcome, Failure> {
    if opts.robust || opts.baseline_only || opts.round {
        return Err(Failure::Schema(
            "--robust, --baseline-only and --round apply to covering-style instances only".into(),
        ));
    }
    let Steps::Box(steps) = &file.steps else {
        unreachable!("box kinds carry box steps")
    };
    let tol = opts.tol;
    let costs = file.problem.costs();
    let mut engine = copredict::BoxEngine::new(costs.clone(), tol).map_err(engine_err)?;
    let mut history = BoxHistory::new(costs);
    for s in steps {
        let set = BoxSuggestionSet::tightened(&s.constraint, &s.suggestions, &tol).map_err(engine_err)?;
        engine.process(&s.constraint, &s.d, &set).map_err(engine_err)?;
        history
            .push(s.constraint.clone(), s.d.clone(), set)
            .map_err(|e| Failure::Schema(e.to_string()))?;
    }
    let output_cost = engine.output_cost();
    let k = history.k().max(1);
    let mut report = Map::new();
    report.insert("mode".into(), "predictions".into());
    report.insert("output_cost".into(), f(output_cost));
    report.insert("internal_cost".into(), f(engine.state().internal_cost()));
    report.insert("phases".into(), engine.trace().phase_count().into());
    let st = static_benchmark_box(&history);
    report.insert("static".into(), f(st.cost));
    report.insert("static_expert".into(), st.expert.into());
    let mut violation = false;
    let mut potentials = None;
    match dynamic_benchmark_box(&history, opts.budget) {
        Ok(cert) => {
            report.insert("dynamic".into(), f(cert.cost));
            report.insert("dynamic_is_upper_bound".into(), false.into());
            report.insert("dynamic_choices".into(), json!(cert.choices));
            let (bound, bad) = bound_json(output_cost, cert.cost, k, "dynamic", &tol);
            violation |= bad;
            report.insert("bound_check".into(), bound);
            let ledger = verify_box_ledger(engine.trace(), &history, &cert, 1.0 / k as f64, &tol)
                .map_err(engine_err)?;
            violation |= !ledger.passed();
            report.insert("ledger_check".into(), ledger_json(&ledger));
            potentials = Some(ledger.boundary_potentials);
        }
        Err(BenchmarkError::BudgetExceeded { static_upper_bound, .. }) => {
            report.insert("dynamic".into(), f(static_upper_bound));
            report.insert("dynamic_is_upper_bound".into(), true.into());
            let (bound, bad) = bound_json(output_cost, static_upper_bound, k, "static_upper_bound", &tol);
            violation |= bad;
            report.insert("bound_check".into(), bound);
            report.insert("ledger_check".into(), skipped("DYNAMIC over the enumeration budget"));
        }
        Err(e) => return Err(engine_err(e)),
    }
    Ok(RunOutcome {
        report: Value::Object(report),
        trace: box_rows(engine.trace(), potentials.as_deref()),
        robust_trace: None,
        violation,
    })
}

/// Runs a parsed instance.
pub fn run_instance(file: &InstanceFile, opts: &RunOptions) -> Result<RunOutcome, Failure> {
    let mut outcome = if file.problem.kind().is_box() {
        run_box(file, opts)?
    } else {
        run_covering(file, opts)?
    };
    if let Value::Object(m) = &mut outcome.report {
        m.insert("kind".into(), file.problem.kind().name().into());
        m.insert("n".into(), file.problem.n().into());
        m.insert("k".into(), file.k.into());
        m.insert("steps".into(), file.steps.len().into());
    }
    Ok(outcome)
}

pub fn write_trace(path: &Path, rows: &[TraceRow]) -> Result<(), Failure> {
    let io = |e: csv::Error| Failure::Engine(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(["step", "phase", "duration", "internal_cost_cum", "potential", "event_kind"])
        .map_err(io)?;
    for r in rows {
        w.write_record([
            r.step.to_string(),
            r.phase.to_string(),
            format!("{:.16e}", r.duration),
            format!("{:.16e}", r.internal_cost_cum),
            r.potential.map(|p| format!("{p:.16e}")).unwrap_or_default(),
            r.event_kind.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Failure::Engine(e.to_string()))
}

/// Loads `input`, runs it and writes `trace.csv`, `report.json` (and
/// `robust_trace.csv`) under `out_dir`. Returns the report and violation flag.
pub fn run_file(input: &Path, out_dir: &Path, opts: &RunOptions) -> Result<(String, bool), Failure> {
    let text = fs::read_to_string(input)
        .map_err(|e| Failure::Schema(format!("{}: {e}", input.display())))?;
    let file = parse_instance(&text).map_err(|e| Failure::Schema(format!("{}: {e}", input.display())))?;
    let outcome = run_instance(&file, opts)?;
    fs::create_dir_all(out_dir).map_err(|e| Failure::Engine(format!("{}: {e}", out_dir.display())))?;
    write_trace(&out_dir.join("trace.csv"), &outcome.trace)?;
    if let Some(rows) = &outcome.robust_trace {
        write_trace(&out_dir.join("robust_trace.csv"), rows)?;
    }
    let report = canonical_json(&outcome.report);
    fs::write(out_dir.join("report.json"), format!("{report}\n"))
        .map_err(|e| Failure::Engine(e.to_string()))?;
    Ok((report, outcome.violation))
}

/// Reads a manifest: one instance path per line, `#` comments, paths
/// relative to the manifest's directory.
pub fn read_manifest(path: &Path) -> Result<Vec<PathBuf>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Schema(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| base.join(l))
        .collect())
}
