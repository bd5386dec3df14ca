use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_copredict"));
    c.env_remove("COPREDICT_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn copredict")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn num(v: &Value, path: &[&str]) -> f64 {
    let mut cur = v;
    for p in path {
        cur = &cur[p];
    }
    cur.as_f64().unwrap_or_else(|| panic!("{path:?} in {v}"))
}

const SINGLE: &str = "{\"kind\":\"covering\",\"n\":1,\"k\":1,\"costs\":[1]}\n{\"constraint\":[[0,2]],\"suggestions\":[[[0,0.5]]]}\n";

#[test]
fn single_constraint_matches_dynamic() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write(tmp.path(), "one.jsonl", SINGLE);
    let out = tmp.path().join("out");
    let o = run(&["run", "--input", &input, "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let r = report(&out);
    assert!((num(&r, &["output_cost"]) - 0.5).abs() < 1e-9);
    assert!((num(&r, &["dynamic"]) - 0.5).abs() < 1e-12);
    assert!((num(&r, &["bound_check", "ratio"]) - 1.0).abs() < 1e-9);
    assert_eq!(r["ledger_check"]["status"], "passed");
    assert_eq!(r["dynamic_is_upper_bound"], false);

    let trace = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next(), Some("step,phase,duration,internal_cost_cum,potential,event_kind"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "0");
    assert!((row[2].parse::<f64>().unwrap() - 1.5f64.ln() / 2.0).abs() < 1e-9);
    assert!((row[3].parse::<f64>().unwrap() - 0.25).abs() < 1e-9);
    assert!(!row[4].is_empty());
    assert_eq!(row[5], "constraint_half_satisfied");
}

#[test]
fn quiet_report_prints_the_report() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write(tmp.path(), "one.jsonl", SINGLE);
    let out = tmp.path().join("out");
    let o = run(&["run", "--input", &input, "--out-dir", out.to_str().unwrap(), "--quiet-report"]);
    assert_eq!(o.status.code(), Some(0));
    let printed: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(printed, report(&out));
}

#[test]
fn robust_reports_three_costs() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("sc.jsonl");
    let g = run(&[
        "gen", "--setcover", "--mode", "adversarial", "--sets", "6", "--elements", "8", "--seed", "3",
        "--output", input.to_str().unwrap(),
    ]);
    assert_eq!(g.status.code(), Some(0), "{}", String::from_utf8_lossy(&g.stderr));
    let out = tmp.path().join("out");
    let o = run(&["run", "--input", input.to_str().unwrap(), "--out-dir", out.to_str().unwrap(), "--robust"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    let m = num(&r, &["robust", "cost"]);
    let a = num(&r, &["robust", "cost_predictions"]);
    let b = num(&r, &["robust", "cost_baseline"]);
    assert!((a - num(&r, &["output_cost"])).abs() < 1e-9);
    assert!(m <= 6.0 * 3f64.ln() * a.min(b) * (1.0 + 1e-6));
    assert_eq!(r["robust"]["status"], "satisfied");
    assert!(out.join("robust_trace.csv").exists());
}

#[test]
fn empty_stream_has_zero_cost() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write(tmp.path(), "empty.jsonl", "{\"kind\":\"covering\",\"n\":2,\"k\":1,\"costs\":[1,2]}\n");
    let out = tmp.path().join("out");
    let o = run(&["run", "--input", &input, "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(num(&r, &["output_cost"]), 0.0);
    assert_eq!(num(&r, &["dynamic"]), 0.0);
    assert_eq!(r["bound_check"]["status"], "not_applicable");
    assert_eq!(r["steps"], 0);
    let trace = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 1);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let out = out.to_str().unwrap();

    let bad_json = write(tmp.path(), "bad.jsonl", "{not json\n");
    let o = run(&["run", "--input", &bad_json, "--out-dir", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
    assert!(!o.stderr.is_empty());

    let missing = tmp.path().join("missing.jsonl");
    assert_eq!(run(&["run", "--input", missing.to_str().unwrap(), "--out-dir", out]).status.code(), Some(2));

    // infeasible suggestion is rejected while tightening
    let weak = write(
        tmp.path(),
        "weak.jsonl",
        "{\"kind\":\"covering\",\"n\":2,\"k\":1,\"costs\":[1,1]}\n{\"constraint\":[[0,1],[1,1]],\"suggestions\":[[[0,0.3],[1,0.2]]]}\n",
    );
    assert_eq!(run(&["run", "--input", &weak, "--out-dir", out]).status.code(), Some(3));

    let fac = tmp.path().join("fac.jsonl");
    run(&["gen", "--facloc", "--facilities", "2", "--clients", "2", "--output", fac.to_str().unwrap()]);
    assert_eq!(run(&["run", "--input", fac.to_str().unwrap(), "--out-dir", out, "--robust"]).status.code(), Some(2));

    let sc = write(tmp.path(), "one.jsonl", SINGLE);
    assert_eq!(run(&["run", "--input", &sc, "--out-dir", out, "--round"]).status.code(), Some(2));
    assert_eq!(run(&["run", "--input", &sc, "--out-dir", out, "--tol-sat", "-1"]).status.code(), Some(2));
    assert_eq!(run(&["gen", "--lower-bound", "0", "1", "0", "--output", out]).status.code(), Some(2));
}

#[test]
fn ledger_violation_exits_one() {
    // frozen variable carries part of the second suggestion's support
    let tmp = tempfile::tempdir().unwrap();
    let input = write(
        tmp.path(),
        "gap.jsonl",
        concat!(
            "{\"kind\":\"covering\",\"n\":3,\"k\":2,\"costs\":[1,1,10]}\n",
            "{\"constraint\":[[0,1]],\"suggestions\":[[[0,1]],[[0,1]]]}\n",
            "{\"constraint\":[[0,0.8],[1,1],[2,1]],\"suggestions\":[[[0,1],[1,0.2]],[[2,1]]]}\n",
        ),
    );
    let out = tmp.path().join("out");
    let o = run(&["run", "--input", &input, "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r["ledger_check"]["status"], "failed");
    assert_eq!(r["bound_check"]["status"], "satisfied");
}

#[test]
fn generated_files_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 5] = [
        &["--lower-bound", "3", "2", "7"],
        &["--setcover", "--mode", "noisy", "--seed", "5"],
        &["--setcover", "--mode", "oracle", "--seed", "5", "--arrivals", "30"],
        &["--caching-trace", "--seed", "2"],
        &["--facloc", "--seed", "9"],
    ];
    for (i, args) in cases.iter().enumerate() {
        let a = tmp.path().join(format!("a{i}.jsonl"));
        let b = tmp.path().join(format!("b{i}.jsonl"));
        for p in [&a, &b] {
            let mut full = vec!["gen"];
            full.extend_from_slice(args);
            full.extend_from_slice(&["--output", p.to_str().unwrap()]);
            let o = run(&full);
            assert_eq!(o.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        }
        let text = std::fs::read_to_string(&a).unwrap();
        assert_eq!(text, std::fs::read_to_string(&b).unwrap(), "{args:?} not deterministic");
        let parsed = copredict::format::parse_instance(&text).unwrap();
        assert_eq!(copredict::format::write_instance(&parsed).unwrap(), text, "{args:?}");

        let out = tmp.path().join(format!("out{i}"));
        let o = run(&["run", "--input", a.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
        assert!(matches!(o.status.code(), Some(0) | Some(1)), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn seed_falls_back_to_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a.jsonl");
    let b = tmp.path().join("b.jsonl");
    let o = run(&["gen", "--setcover", "--seed", "11", "--output", a.to_str().unwrap()]);
    assert!(o.status.success());
    let o = bin()
        .args(["gen", "--setcover", "--output", b.to_str().unwrap()])
        .env("COPREDICT_SEED", "11")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn lower_bound_two_one() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("lb.jsonl");
    let o = run(&["gen", "--lower-bound", "2", "1", "0", "--output", path.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0]["n"], 2);
    assert_eq!(lines[0]["k"], 2);
    assert_eq!(lines[0]["kind"], "covering");
    let support = |l: &Value| -> Vec<u64> {
        l["constraint"].as_array().unwrap().iter().map(|p| p[0].as_u64().unwrap()).collect()
    };
    assert_eq!(support(&lines[1]), vec![0, 1]);
    assert_eq!(support(&lines[2]), vec![1]);

    let out = tmp.path().join("out");
    let o = run(&["run", "--input", path.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
    assert!(o.status.success());
    let r = report(&out);
    assert_eq!(num(&r, &["static"]), 1.0);
    assert!(num(&r, &["output_cost"]) <= 6.0 * 3f64.ln() + 1e-9);
}

#[test]
fn singleton_set_cover_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("sc.jsonl");
    let o = run(&[
        "gen", "--setcover", "--frequency", "1", "--sets", "4", "--elements", "6", "--output",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    for line in text.lines().skip(1) {
        let v: Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["constraint"].as_array().unwrap().len(), 1, "{line}");
    }
}

#[test]
fn one_facility_one_client() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("f.jsonl");
    let o = run(&[
        "gen", "--facloc", "--facilities", "1", "--clients", "1", "--k", "1", "--output",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = tmp.path().join("out");
    let o = run(&["run", "--input", path.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r["kind"], "facloc");
    assert_eq!(r["steps"], 1);
    // the only option is to open the facility and assign the client to it
    assert!((num(&r, &["dynamic"]) - num(&r, &["static"])).abs() < 1e-12);
    assert!(num(&r, &["bound_check", "ratio"]) <= 1.0 + 1e-9);
}

#[test]
fn set_cover_rounding_covers_everything() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("sc.jsonl");
    run(&["gen", "--setcover", "--seed", "4", "--output", path.to_str().unwrap()]);
    let out = tmp.path().join("out");
    let o = run(&["run", "--input", path.to_str().unwrap(), "--out-dir", out.to_str().unwrap(), "--round", "--seed", "8"]);
    assert!(matches!(o.status.code(), Some(0) | Some(1)));
    let r = report(&out);
    assert!(num(&r, &["rounding", "integral_cost"]) > 0.0);
    assert_eq!(r["rounding"]["seed"], 8);
}

#[test]
fn manifest_runs_each_instance() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "one.jsonl", SINGLE);
    run(&["gen", "--lower-bound", "2", "2", "1", "--output", tmp.path().join("lb.jsonl").to_str().unwrap()]);
    let manifest = write(tmp.path(), "list.txt", "# instances\none.jsonl\nlb.jsonl\n");
    let out = tmp.path().join("out");
    let o = run(&["run", "--manifest", &manifest, "--out-dir", out.to_str().unwrap(), "--jobs", "2", "--quiet-report"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 2);
    assert!(out.join("one").join("report.json").exists());
    assert!(out.join("lb").join("trace.csv").exists());
}
