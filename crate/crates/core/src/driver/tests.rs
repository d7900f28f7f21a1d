use std::collections::BTreeSet;

use super::*;
use crate::lang::parse;
use crate::testing::P_SOURCE;

fn input(pairs: &[(&str, i64)]) -> Inputs {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn bounds() -> Bounds {
    Bounds { width: Width::W8, ..Bounds::default() }
}

fn plain(strategy: Strategy) -> RunMode {
    RunMode { strategy, weighted: false }
}

fn sets(r: &FaultReport) -> BTreeSet<BTreeSet<Label>> {
    r.line_sets().into_iter().collect()
}

fn set_of(v: &[&[Label]]) -> BTreeSet<BTreeSet<Label>> {
    v.iter().map(|s| s.iter().copied().collect()).collect()
}

use crate::lang::Label;
use crate::ssa::StmtId;

#[test]
fn ofc_on_p_follows_the_worked_example() {
    let p = parse(P_SOURCE).unwrap();
    let mut s = DebugSession::new(&p, input(&[("x", 0), ("y", 0)]), plain(Strategy::Ofc), bounds(), None).unwrap();
    let r = s.run().unwrap();
    assert_eq!(r.iterations, 2);
    assert!(r.converged && r.complete);
    assert_eq!(sets(&r), set_of(&[&[6], &[5, 8]]));
    assert_eq!((r.paths_explored, r.paths_total.as_str()), (2, "4"));
    let h = s.history();
    assert_eq!(h[0].new_clauses.len(), 6);
    assert_eq!(h[1].new_clauses.len(), 1);
    assert_eq!(h[0].flip, Some(Branch::new(StmtId::line(5), false)));
    assert_eq!(h[1].flip, None);
    assert_eq!(r.statement_clauses, 7);
}

#[test]
fn ba_on_p_reports_the_same_sets_in_one_call() {
    let p = parse(P_SOURCE).unwrap();
    let r = debug(&p, input(&[("x", 0), ("y", 0)]), plain(Strategy::Ba), bounds(), None).unwrap();
    assert_eq!(r.iterations, 1);
    assert_eq!(sets(&r), set_of(&[&[6], &[5, 8]]));
    assert_eq!(r.statement_clauses, 8);
    assert_eq!(fault_rank(&r, &[6]), Some(1.5));
}

#[test]
fn weighted_ba_puts_the_failing_only_line_first() {
    // Line 6 is only run by the failing test, everything else also by passing ones.
    let p = parse(P_SOURCE).unwrap();
    let susp: SuspiciousnessMap = [(1, 0.5), (2, 0.5), (4, 0.5), (5, 0.5), (6, 1.0), (8, 0.5)].into_iter().collect();
    let mode = RunMode { strategy: Strategy::Ba, weighted: true };
    let r = debug(&p, input(&[("x", 0), ("y", 0)]), mode, bounds(), Some(susp)).unwrap();
    assert!(r.ordered);
    assert_eq!(r.line_sets()[0], BTreeSet::from([6]));
    assert_eq!(fault_rank(&r, &[6]), Some(1.0));
    assert_eq!(fault_rank(&r, &[8]), Some(3.0));
}

#[test]
fn rejects_passing_inputs_and_missing_weights() {
    let p = parse(P_SOURCE).unwrap();
    let mode = RunMode { strategy: Strategy::Ofc, weighted: true };
    assert!(matches!(DebugSession::new(&p, input(&[("x", 0), ("y", 0)]), mode, bounds(), None), Err(DriverError::MissingWeights)));
    let q = parse("int f(int x) {\n1: y = x + 1;\n2: assert(y > x);\n}").unwrap();
    let e = DebugSession::new(&q, input(&[("x", 1)]), plain(Strategy::Ofc), bounds(), None);
    assert!(matches!(e, Err(DriverError::NotFailing(_))));
}

#[test]
fn no_conditionals_means_one_iteration() {
    let q = parse("int f(int x) {\n1: y = x + 2;\n2: z = y - 1;\n3: assert(z == x);\n}").unwrap();
    let o = debug(&q, input(&[("x", 1)]), plain(Strategy::Ofc), bounds(), None).unwrap();
    let b = debug(&q, input(&[("x", 1)]), plain(Strategy::Ba), bounds(), None).unwrap();
    assert_eq!(o.iterations, 1);
    assert_eq!(sets(&o), set_of(&[&[1], &[2]]));
    assert_eq!(sets(&o), sets(&b));
}

#[test]
fn loops_are_traced_through_replicas() {
    let q = parse("int f(int n) {\n1: i = 0;\n2: s = 0;\n3: while (i < n) {\n4: s = s + 2;\n5: i = i + 1;\n}\n6: assert(s == n);\n}")
        .unwrap();
    let b = Bounds { unroll: 3, ..bounds() };
    let r = debug(&q, input(&[("n", 2)]), plain(Strategy::Ofc), b.clone(), None).unwrap();
    assert!(r.converged);
    assert!(r.lines().contains(&4));
    let small = Bounds { unroll: 1, ..bounds() };
    assert!(matches!(
        DebugSession::new(&q, input(&[("n", 2)]), plain(Strategy::Ofc), small, None),
        Err(DriverError::UnrollTooSmall(1))
    ));
}

#[test]
fn iteration_cap_marks_report_unconverged() {
    let p = parse(P_SOURCE).unwrap();
    let b = Bounds { max_iters: 1, ..bounds() };
    let r = debug(&p, input(&[("x", 0), ("y", 0)]), plain(Strategy::Ofc), b, None).unwrap();
    assert_eq!(r.iterations, 1);
    assert!(!r.converged);
    assert_eq!(sets(&r), set_of(&[&[6], &[5]]));
    assert!(r.notes.iter().any(|n| n.contains("cap")));
}

#[test]
fn text_and_json_rendering() {
    let p = parse(P_SOURCE).unwrap();
    let r = debug(&p, input(&[("x", 0), ("y", 0)]), plain(Strategy::Ofc), bounds(), None).unwrap();
    let t = r.to_text();
    assert!(t.contains("b = a + 1;"), "{t}");
    assert!(t.contains("unordered"));
    let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(v["mode"], "ofc");
    assert_eq!(v["iterations"], 2);
    assert_eq!(v["entries"].as_array().unwrap().len(), 2);
}

#[test]
fn mode_names_round_trip() {
    for m in RunMode::ALL {
        assert_eq!(m.to_string().parse::<RunMode>().unwrap(), m);
    }
    assert!("cw".parse::<RunMode>().is_err());
}

fn entry(rank: f64, lines: &[Label]) -> ReportEntry {
    ReportEntry {
        rank,
        statements: lines
            .iter()
            .map(|&l| ReportStmt {
                clause: l,
                stmt: l.to_string(),
                line: l,
                source: String::new(),
                constraint: String::new(),
                concretized: false,
            })
            .collect(),
    }
}

fn report(entries: Vec<ReportEntry>) -> FaultReport {
    FaultReport {
        mode: RunMode { strategy: Strategy::Ofc, weighted: true },
        ordered: true,
        entries,
        iterations: 1,
        converged: true,
        complete: true,
        paths_explored: 1,
        paths_total: "1".into(),
        statement_clauses: 0,
        soft_clauses: 0,
        total_ms: 0.0,
        iteration_ms: vec![],
        notes: vec![],
    }
}

#[test]
fn merge_keeps_the_intersection_at_average_rank() {
    let a = report(vec![entry(1.0, &[6]), entry(2.0, &[5])]);
    let b = report(vec![entry(1.0, &[2]), entry(2.0, &[4]), entry(3.0, &[6])]);
    let m = merge_reports(&[a, b]).unwrap();
    assert_eq!(m.entries.len(), 1);
    assert_eq!(m.entries[0].rank, 2.0);
    assert_eq!(m.lines(), vec![6]);
}

#[test]
fn merge_breaks_ties_by_line_and_notes_empty_results() {
    let a = report(vec![entry(1.0, &[8]), entry(2.0, &[3])]);
    let b = report(vec![entry(1.0, &[3]), entry(2.0, &[8])]);
    let m = merge_reports(&[a.clone(), b]).unwrap();
    assert_eq!(m.lines(), vec![3, 8]);
    assert!(m.entries.iter().all(|e| e.rank == 1.5));
    let c = report(vec![entry(1.0, &[1])]);
    let m = merge_reports(&[a, c]).unwrap();
    assert!(m.entries.is_empty());
    assert!(m.notes.iter().any(|n| n.contains("every report")));
    assert!(merge_reports(&[]).is_none());
}
