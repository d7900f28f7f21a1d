use std::path::Path;
use std::process::{Command, Output};

use formloc::testing::P_SOURCE;
use tempfile::TempDir;

fn formloc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_formloc"))
        .args(args)
        .current_dir(dir)
        .env_remove("FORMLOC_CONFIG")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn workspace() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("p.mimp"), P_SOURCE).unwrap();
    dir
}

#[test]
fn debug_reports_the_running_example() {
    let dir = workspace();
    let o = formloc(dir.path(), &["debug", "p.mimp", "--input", "x=0,y=0"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.starts_with("mode ofc  iterations 2  paths 2/4  clauses 7 (5 soft)"), "{out}");
    assert!(out.contains("b_1 = a_3 + 1"));
    assert!(out.contains("guard[5] = (y_1 < 5)"));

    let o = formloc(dir.path(), &["debug", "p.mimp", "--input", "x=0,y=0", "--mode", "ba", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["mode"], "ba");
    assert_eq!(v["statement_clauses"], 8);
    let lines: Vec<Vec<u64>> = v["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["statements"].as_array().unwrap().iter().map(|s| s["line"].as_u64().unwrap()).collect())
        .collect();
    assert_eq!(lines, [vec![6], vec![5, 8]]);
}

#[test]
fn suite_runs_merge_failing_tests_and_weight_by_coverage() {
    let dir = workspace();
    let unasserted: String = P_SOURCE.lines().filter(|l| !l.contains("assert")).collect::<Vec<_>>().join("\n");
    std::fs::write(dir.path().join("u.mimp"), unasserted).unwrap();
    // expected values of the fixed program, where line 6 is `b = a - 1`
    let suite = r#"{"output": "b", "tests": [
        {"id": "t1", "inputs": {"x": 0, "y": 0}, "expected": -1},
        {"id": "t2", "inputs": {"x": 3, "y": 1}, "expected": 2},
        {"id": "t3", "inputs": {"x": -2, "y": 7}, "expected": 4},
        {"id": "t4", "inputs": {"x": 1, "y": 9}, "expected": 3}
    ]}"#;
    std::fs::write(dir.path().join("s.json"), suite).unwrap();
    let o = formloc(dir.path(), &["debug", "u.mimp", "--suite", "s.json", "--mode", "ofc+cw", "--json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["ordered"], true);
    assert_eq!(v["entries"][0]["statements"][0]["line"], 6);
    assert!(v["notes"].as_array().unwrap().iter().any(|n| n == "merged from 2 reports"));

    let o = formloc(dir.path(), &["debug", "u.mimp", "--suite", "s.json", "--test", "t2"]);
    assert!(o.status.success());
    assert!(!stdout(&o).contains("merged"));
    let o = formloc(dir.path(), &["debug", "u.mimp", "--suite", "s.json", "--test", "nope"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn errors_map_to_exit_codes() {
    let dir = workspace();
    std::fs::write(dir.path().join("bad.mimp"), "int f(int x) { y = ; }").unwrap();
    std::fs::write(dir.path().join("ok.mimp"), "int f(int x) {\n y = x + 1;\n assert(y > x);\n}").unwrap();
    let code = |args: &[&str]| formloc(dir.path(), args).status.code();
    assert_eq!(code(&["debug", "p.mimp"]), Some(2));
    assert_eq!(code(&["debug", "p.mimp", "--input", "x=0,y=0", "--mode", "cw"]), Some(2));
    assert_eq!(code(&["debug", "missing.mimp", "--input", "x=1"]), Some(3));
    assert_eq!(code(&["debug", "bad.mimp", "--input", "x=1"]), Some(4));
    assert_eq!(code(&["debug", "ok.mimp", "--input", "x=1"]), Some(5));
    assert_eq!(code(&["debug", "p.mimp", "--input", "x=0,y=0", "--width", "4", "--mode", "ba+cw"]), Some(2));
}

#[test]
fn config_file_sits_between_defaults_and_flags() {
    let dir = workspace();
    std::fs::write(dir.path().join("c.toml"), "mode = \"ba\"\nwidth = 8\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_formloc"))
        .args(["debug", "p.mimp", "--input", "x=0,y=0"])
        .current_dir(dir.path())
        .env("FORMLOC_CONFIG", "c.toml")
        .output()
        .unwrap();
    assert!(stdout(&o).starts_with("mode ba "));
    let o = formloc(dir.path(), &["debug", "p.mimp", "--input", "x=0,y=0", "--config", "c.toml", "--mode", "ofc"]);
    assert!(stdout(&o).starts_with("mode ofc "));
    std::fs::write(dir.path().join("typo.toml"), "widht = 8\n").unwrap();
    let o = formloc(dir.path(), &["debug", "p.mimp", "--input", "x=0,y=0", "--config", "typo.toml"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown field `widht`"));
}

#[test]
fn dumped_instances_check_against_the_oracle() {
    let dir = workspace();
    let o = formloc(dir.path(), &["dump", "instance", "p.mimp", "--input", "x=0,y=0", "--width", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    std::fs::write(dir.path().join("inst.txt"), &o.stdout).unwrap();
    let o = formloc(dir.path(), &["check-instance", "inst.txt", "--oracle"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "{5} dropped 1\n{4, 7} dropped 2\n2 CoMSSs, 9 solver calls\noracle agrees\n");

    let o = formloc(dir.path(), &["dump", "ssa", "p.mimp"]);
    assert!(stdout(&o).contains("a_3 = phi1(a_1, a_2);"));
    let o = formloc(dir.path(), &["dump", "trace", "p.mimp", "--input", "x=0,y=0"]);
    assert!(o.status.success());
    let o = formloc(dir.path(), &["dump", "trace", "p.mimp"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn generated_corpus_round_trips_through_compare_and_derive() {
    let dir = tempfile::tempdir().unwrap();
    let o = formloc(dir.path(), &["gen-corpus", "--out", "corpus", "--count", "3", "--seed", "0"]);
    assert_eq!(stdout(&o), "wrote 3 cases to corpus\n");
    let o = formloc(dir.path(), &["compare", "--corpus", "corpus", "--json", "--width", "8", "--unroll", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for row in rows {
        let results = row["results"].as_array().unwrap();
        assert_eq!(results.len(), 4);
        assert!(results.iter().all(|r| r["error"].is_null()), "{row}");
        // the plain modes report the same sets, so they rank the fault alike
        assert_eq!(results[0]["rank"], results[2]["rank"]);
    }

    let case = rows[0]["case"].as_str().unwrap().to_string();
    let golden = format!("corpus/{case}.golden.mimp");
    let suite = format!("corpus/{case}.json");
    let o = formloc(dir.path(), &["derive", "--golden", &golden, "--suite", &suite, "--width", "8"]);
    assert!(o.status.success());
    let derived: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let original: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join(&suite)).unwrap()).unwrap();
    assert_eq!(derived, original);

    let empty = dir.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    assert_eq!(formloc(dir.path(), &["compare", "--corpus", "empty"]).status.code(), Some(2));
}
