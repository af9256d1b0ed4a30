use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn wg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wg"))
        .args(args)
        .current_dir(dir)
        .env_remove("WG_DEFAULT_SEED")
        .output()
        .expect("wg runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = wg(dir, args);
    assert!(
        out.status.success(),
        "wg {args:?} exited {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    wg(dir, args).status.code().expect("exit code")
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

fn normalized(report: &Value) -> f64 {
    report["normalized_wg"].as_f64().unwrap()
}

/// A point mass and a baseline draw in a temp dir.
fn fixtures() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["generate", "dirac", "--n", "1000", "--point", "0.4,-2", "--out", "dirac.csv"]);
    ok(dir.path(), &["generate", "baseline", "--n", "8000", "--k", "1", "--seed", "5", "--out", "base.csv"]);
    dir
}

#[test]
fn point_mass_and_baseline_hit_the_ends_of_the_scale() {
    let dir = fixtures();
    let d = json(&ok(dir.path(), &["score", "dirac.csv", "--k", "1"]));
    assert!((normalized(&d["results"][0]) - 1.0).abs() <= 0.03, "{d}");
    let b = json(&ok(dir.path(), &["score", "base.csv", "--k", "1"]));
    assert!(normalized(&b["results"][0]) <= 0.05, "{b}");
}

#[test]
fn output_is_deterministic_and_seeded() {
    let dir = fixtures();
    let a = ok(dir.path(), &["score", "base.csv", "--seed", "7"]);
    assert_eq!(a, ok(dir.path(), &["score", "base.csv", "--seed", "7"]));
    assert_ne!(a, ok(dir.path(), &["score", "base.csv", "--seed", "8"]));
}

#[test]
fn seed_falls_back_to_the_environment() {
    let dir = fixtures();
    let explicit = ok(dir.path(), &["score", "base.csv", "--seed", "11"]);
    let out = Command::new(env!("CARGO_BIN_EXE_wg"))
        .args(["score", "base.csv"])
        .current_dir(dir.path())
        .env("WG_DEFAULT_SEED", "11")
        .output()
        .unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), explicit);
}

#[test]
fn compare_ranks_against_a_shared_baseline() {
    let dir = fixtures();
    let dir = dir.path();
    ok(dir, &["generate", "mixture", "--s", "1", "--n", "800", "--out", "wide.csv"]);
    ok(dir, &["generate", "mixture", "--s", "1", "--n", "800", "--spread", "0.25", "--out", "narrow.csv"]);
    let doc = json(&ok(dir, &["compare", "narrow.csv", "wide.csv", "--solver", "exact", "--csv", "rank.csv"]));
    let ranking = doc["ranking"].as_array().unwrap();
    assert_eq!(ranking[0]["file"], "wide.csv");
    assert_eq!(ranking[1]["file"], "narrow.csv");
    assert!(normalized(&ranking[0]) < normalized(&ranking[1]));
    assert_eq!(ranking[0]["space"], ranking[1]["space"]);
    assert_eq!(doc["manifest"]["solver"]["method"], "exact1d");
    let csv = std::fs::read_to_string(dir.join("rank.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().nth(1).unwrap().starts_with("1,wide.csv,"));

    // with one file the shared baseline is the file's own
    let alone = json(&ok(dir, &["compare", "wide.csv"]));
    let score = json(&ok(dir, &["score", "wide.csv"]));
    assert_eq!(normalized(&alone["ranking"][0]), normalized(&score["results"][0]));
}

#[test]
fn subsampling_is_seeded() {
    let dir = fixtures();
    let a = json(&ok(dir.path(), &["score", "base.csv", "--n-samples", "500", "--seed", "2"]));
    assert_eq!(a["results"][0]["n"], 500);
    assert_eq!(a, json(&ok(dir.path(), &["score", "base.csv", "--n-samples", "500", "--seed", "2"])));
    assert_eq!(code(dir.path(), &["score", "base.csv", "--n-samples", "9000"]), 2);
}

#[test]
fn parse_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("bad.csv"), "# {\"kind\":\"attribution\",\"s\":2,\"N\":2}\n1,2\n3,oops\n").unwrap();
    let out = wg(p, &["score", "bad.csv"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3") && err.contains("column 3"), "{err}");
    assert_eq!(code(p, &["score", "missing.csv"]), 2);
    assert_eq!(code(p, &["study", "figure3"]), 2);
    assert_eq!(code(p, &["score"]), 2);
    assert_eq!(code(p, &["--help"]), 0);
}

#[test]
fn invalid_explanations_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("sel.csv"), "# {\"kind\":\"selection\",\"s\":2,\"N\":2}\n1,0\n0,2\n").unwrap();
    std::fs::write(p.join("rank.csv"), "# {\"kind\":\"ranking\",\"s\":3,\"N\":1}\n0,0,2\n").unwrap();
    assert_eq!(code(p, &["score", "sel.csv"]), 3);
    assert_eq!(code(p, &["score", "rank.csv"]), 3);

    ok(p, &["generate", "baseline", "--space", "selection", "--s", "2", "--n", "50", "--out", "s.csv"]);
    ok(p, &["generate", "baseline", "--space", "ranking", "--s", "2", "--n", "50", "--out", "r.csv"]);
    assert_eq!(code(p, &["compare", "s.csv", "r.csv"]), 3);
    assert_eq!(code(p, &["score", "s.csv", "--space", "ranking"]), 3);
    assert_eq!(code(p, &["score", "s.csv", "--metric", "euclidean"]), 3);
    // a lone point mass leaves no spread to fit the ball radius from
    ok(p, &["generate", "dirac", "--n", "10", "--out", "d.csv"]);
    assert_eq!(code(p, &["score", "d.csv"]), 3);
}

#[test]
fn solver_flags_must_match_the_solver() {
    let dir = fixtures();
    let p = dir.path();
    assert_eq!(code(p, &["score", "base.csv", "--lambda", "5"]), 2);
    assert_eq!(code(p, &["score", "base.csv", "--solver", "sinkhorn", "--projections", "5"]), 2);
    let r = json(&ok(p, &["score", "base.csv", "--n-samples", "200", "--solver", "sinkhorn", "--lambda", "5"]));
    assert_eq!(r["results"][0]["solver"]["lambda"], 5.0);
}

#[test]
fn replay_reproduces_reports_and_rejects_changed_inputs() {
    let dir = fixtures();
    let p = dir.path();
    ok(p, &["score", "base.csv", "--n-samples", "300", "--seed", "4", "--out", "r1.json"]);
    ok(p, &["replay", "r1.json", "--out", "r2.json"]);
    assert_eq!(std::fs::read(p.join("r1.json")).unwrap(), std::fs::read(p.join("r2.json")).unwrap());
    // a replayed report carries the same manifest, so it replays too
    assert_eq!(ok(p, &["replay", "r2.json"]), std::fs::read_to_string(p.join("r1.json")).unwrap());

    let manifest = json(&std::fs::read_to_string(p.join("r1.json")).unwrap())["manifest"].clone();
    std::fs::write(p.join("m.json"), manifest.to_string()).unwrap();
    assert_eq!(ok(p, &["replay", "m.json"]), std::fs::read_to_string(p.join("r1.json")).unwrap());

    std::fs::write(p.join("base.csv"), "# {\"kind\":\"attribution\",\"s\":2,\"N\":1}\n0,0\n").unwrap();
    assert_eq!(code(p, &["replay", "r1.json"]), 3);
    std::fs::write(p.join("nothing.json"), "{}").unwrap();
    assert_eq!(code(p, &["replay", "nothing.json"]), 2);
}

#[test]
fn generated_files_replay_from_their_header() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(p, &["generate", "jagged", "--n", "200", "--scale", "0.5", "--seed", "3", "--out", "j.csv"]);
    ok(p, &["replay", "j.csv", "--out", "j2.csv"]);
    assert_eq!(std::fs::read(p.join("j.csv")).unwrap(), std::fs::read(p.join("j2.csv")).unwrap());
    ok(p, &["generate", "dirac", "--point=-1,0.5", "--n", "5", "--out", "neg.csv"]);
    ok(p, &["replay", "neg.csv", "--out", "neg2.csv"]);
    assert_eq!(std::fs::read(p.join("neg.csv")).unwrap(), std::fs::read(p.join("neg2.csv")).unwrap());
}

#[test]
fn generated_selections_and_rankings_score_in_range() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    for space in ["selection", "ranking"] {
        let f = format!("{space}.csv");
        ok(p, &["generate", "baseline", "--space", space, "--s", "3", "--n", "2000", "--out", &f]);
        let r = json(&ok(p, &["score", &f]));
        let v = normalized(&r["results"][0]);
        assert!((-0.01..=0.1).contains(&v), "{space}: {v}");
    }
}

#[test]
fn compare_puts_the_baseline_below_the_point_mass() {
    let dir = fixtures();
    let doc = json(&ok(dir.path(), &["compare", "dirac.csv", "base.csv"]));
    let ranking = doc["ranking"].as_array().unwrap();
    assert_eq!(ranking[0]["file"], "base.csv");
    assert!(normalized(&ranking[0]) <= 0.05, "{doc}");
    assert!((normalized(&ranking[1]) - 1.0).abs() <= 0.03, "{doc}");
}

#[test]
fn widening_mixtures_rank_in_order_of_spread() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    for (name, spread) in [("a.csv", "0.25"), ("b.csv", "0.5"), ("c.csv", "1")] {
        ok(p, &["generate", "mixture", "--s", "1", "--n", "1000", "--spread", spread, "--seed", "6", "--out", name]);
    }
    let doc = json(&ok(p, &["compare", "b.csv", "c.csv", "a.csv", "--solver", "exact"]));
    let files: Vec<&str> = doc["ranking"].as_array().unwrap().iter().map(|r| r["file"].as_str().unwrap()).collect();
    assert_eq!(files, ["c.csv", "b.csv", "a.csv"]);
    let v: Vec<f64> = doc["ranking"].as_array().unwrap().iter().map(normalized).collect();
    assert!(v[0] < v[1] && v[1] < v[2], "{v:?}");
}

#[test]
fn unconverged_sinkhorn_is_reported_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(p, &["generate", "baseline", "--space", "selection", "--s", "6", "--n", "300", "--out", "s.csv"]);
    let doc = json(&ok(p, &["score", "s.csv", "--max-iter", "1", "--tol", "1e-12"]));
    assert_eq!(doc["results"][0]["converged"], false);
}

#[test]
fn validation_errors_list_the_violations() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("sel.csv"), "# {\"kind\":\"selection\",\"s\":2,\"N\":2}\n1,0.5\n0,1\n").unwrap();
    let out = wg(p, &["score", "sel.csv"]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("0.5"), "{err}");
}

#[test]
fn density_measures_fail_the_invariance_property() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    for measure in ["entropy", "tv"] {
        let junit = format!("{measure}.xml");
        let out = wg(p, &["axioms", "--measure", measure, "--junit", &junit]);
        assert_eq!(out.status.code(), Some(1), "{measure}");
        let doc = json(&String::from_utf8(out.stdout).unwrap());
        let p6 = doc["results"].as_array().unwrap().iter().find(|r| r["id"] == "P6").unwrap();
        assert_eq!(p6["status"], "fail", "{measure}");
        let xml = std::fs::read_to_string(p.join(&junit)).unwrap();
        assert!(xml.contains("<failure") && xml.contains("<skipped"), "{xml}");
    }
}

#[test]
fn zero_invariance_tolerance_fails_on_noise() {
    let dir = tempfile::tempdir().unwrap();
    let out = wg(dir.path(), &["axioms", "--p6-tol", "0", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let doc = json(&String::from_utf8(out.stdout).unwrap());
    let status = |id: &str| doc["results"].as_array().unwrap().iter().find(|r| r["id"] == id).unwrap()["status"].clone();
    assert_eq!(status("P6"), "fail");
    assert_eq!(status("P4"), "pass");
}

#[test]
fn studies_write_csv_json_and_markdown() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(p, &["study", "convergence", "--out", "out"]);
    for ext in ["csv", "json", "md"] {
        assert!(p.join(format!("out/convergence.{ext}")).exists(), "{ext}");
    }
    let doc = json(&std::fs::read_to_string(p.join("out/convergence.json")).unwrap());
    assert_eq!(doc["passed"], true);
    for s in doc["data"]["series"].as_array().unwrap() {
        assert!(s["slope"].as_f64().unwrap() < 0.0, "{s}");
    }

    let doc = json(&ok(p, &["study", "figure2"]));
    let rows = doc["data"]["rows"].as_array().unwrap();
    let metrics: std::collections::BTreeSet<&str> = rows.iter().map(|r| r["metric"].as_str().unwrap()).collect();
    assert_eq!(metrics.len(), 4);
    assert!(rows.iter().any(|r| r["metric"] == "kl" && r["defined"] == false));
}
