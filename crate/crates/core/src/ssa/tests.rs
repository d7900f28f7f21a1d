use std::collections::BTreeSet;
use std::sync::Arc;

use super::*;
use crate::lang::{build_cfg, parse, CfgNode, StmtKind};
use crate::testing::P_SOURCE;

fn ssa_of(src: &str) -> SsaProgram {
    to_ssa(&build_cfg(Arc::new(parse(src).unwrap()))).unwrap()
}

fn v(base: &str, n: u32) -> SsaVar {
    SsaVar::new(base, n)
}

#[test]
fn running_example_matches_figure() {
    let ssa = ssa_of(P_SOURCE);
    let ids: Vec<String> = ssa.statements().iter().map(|s| s.id.to_string()).collect();
    assert_eq!(ids, ["1", "2", "4", "phi1", "5", "6", "8", "phi2", "9"]);
    let phis: Vec<&PhiStmt> = ssa.phis().collect();
    assert_eq!(phis.len(), 2);
    assert_eq!((&phis[0].lhs, &phis[0].rhs_true, &phis[0].rhs_false), (&v("a", 3), &v("a", 1), &v("a", 2)));
    assert_eq!(phis[0].conditional, StmtId::line(1));
    assert_eq!((&phis[1].lhs, &phis[1].rhs_true, &phis[1].rhs_false), (&v("b", 3), &v("b", 1), &v("b", 2)));
    assert_eq!(phis[1].conditional, StmtId::line(5));
    let text = dump(&ssa);
    assert!(text.contains("a_3 = phi1(a_1, a_2);"), "{text}");
    assert!(text.contains("b_1 = a_3 + 1;"), "{text}");
    assert!(text.contains("assert(b_3 <= a_3);"), "{text}");
    assert_eq!(ssa.path_count(), 4);
}

#[test]
fn straight_line_has_no_phis() {
    let ssa = ssa_of("int f(int x) {\n y = x + 1;\n z = y * 2;\n x = z;\n assert(x > 0);\n}");
    assert_eq!(ssa.phis().count(), 0);
    let defs: Vec<String> = ssa
        .statements()
        .iter()
        .filter_map(|s| match &s.kind {
            FlatKind::Assign { lhs, .. } => Some(lhs.to_string()),
            _ => None,
        })
        .collect();
    assert_eq!(defs, ["y_1", "z_1", "x_2"]);
    assert!(ssa.definition_counts().values().all(|&n| n == 1));
}

/// Last definition of `var` reaching `join` along one branch, found by
/// walking CFG edges instead of asking the SSA builder.
fn reaching_def_along(src: &str, cond: u32, polarity: bool, join: u32, var: &str) -> Option<u32> {
    let prog = Arc::new(parse(src).unwrap());
    let cfg = build_cfg(prog.clone());
    let defines = |l: u32| matches!(&prog.find(l).unwrap().kind, StmtKind::Assign { lhs, .. } if lhs == var);
    let mut last = None;
    let mut node = cfg.successors(CfgNode::Entry).next().unwrap().to;
    while node != CfgNode::Stmt(cond) {
        let CfgNode::Stmt(l) = node else { unreachable!() };
        if defines(l) {
            last = Some(l);
        }
        node = cfg.successors(node).next().unwrap().to;
    }
    node = cfg.branch(cond, polarity).unwrap().target;
    while node != CfgNode::Stmt(join) {
        let CfgNode::Stmt(l) = node else { unreachable!() };
        if defines(l) {
            last = Some(l);
        }
        node = cfg.successors(node).next().unwrap().to;
    }
    last
}

#[test]
fn one_armed_diamond_selects_predecessor_definition() {
    let src = "int f(int x) {\n v = 0;\n if (x > 0)\n  v = x;\n assert(v >= 0);\n}";
    let ssa = ssa_of(src);
    let phi = ssa.phis().next().unwrap().clone();
    let def_of = |var: &SsaVar| -> u32 {
        ssa.statements()
            .iter()
            .find_map(|s| match &s.kind {
                FlatKind::Assign { lhs, .. } if lhs == var => Some(s.source),
                _ => None,
            })
            .unwrap()
    };
    assert_eq!(Some(def_of(&phi.rhs_true)), reaching_def_along(src, 3, true, 5, "v"));
    assert_eq!(Some(def_of(&phi.rhs_false)), reaching_def_along(src, 3, false, 5, "v"));
    assert_eq!((phi.rhs_true, phi.rhs_false), (v("v", 2), v("v", 1)));
}

#[test]
fn variable_defined_in_one_arm_only_gets_no_phi() {
    let ssa = ssa_of("int f(int x) {\n if (x > 0)\n  t = 1;\n assert(x != 0);\n}");
    assert_eq!(ssa.phis().count(), 0);
    assert!(!ssa.final_versions().contains_key("t"));
}

#[test]
fn loop_free_unrolling_is_identity() {
    let ssa = ssa_of(P_SOURCE);
    for k in [1, 2, 8] {
        let u = unroll_loops(&ssa, k).unwrap();
        assert_eq!(u.statements(), ssa.statements());
        assert_eq!(u.body(), ssa.body());
    }
}

const COUNTER: &str = "int f(int i) {\n while (i < 2)\n  i = i + 1;\n assert(i >= 2);\n}";

#[test]
fn unrolled_loop_replicas() {
    let ssa = ssa_of(COUNTER);
    assert!(ssa.has_loops());
    let u = unroll_loops(&ssa, 3).unwrap();
    assert!(!u.has_loops());
    let assigns: Vec<String> = u
        .statements()
        .iter()
        .filter_map(|s| match &s.kind {
            FlatKind::Assign { lhs, .. } => Some(format!("{}={}", s.id, lhs)),
            _ => None,
        })
        .collect();
    assert_eq!(assigns, ["3#1=i_2", "3#2=i_3", "3#3=i_4"]);
    let guards: Vec<String> = u
        .statements()
        .iter()
        .filter(|s| matches!(s.kind, FlatKind::Cond { .. }))
        .map(|s| s.id.to_string())
        .collect();
    assert_eq!(guards, ["2#1", "2#2", "2#3"]);
    let trunc = u.statements().iter().find(|s| matches!(s.kind, FlatKind::Truncate { .. })).unwrap();
    assert_eq!(trunc.id.to_string(), "trunc2#4");
    assert_eq!(trunc.path.len(), 3);
    assert!(u.definition_counts().values().all(|&n| n == 1));
    assert_eq!(u.path_count(), 4);
}

#[test]
fn bound_one_still_marks_truncation() {
    let u = unroll_loops(&ssa_of(COUNTER), 1).unwrap();
    assert!(u.has_truncation_points());
    assert_eq!(unroll_loops(&ssa_of(COUNTER), 0).unwrap_err(), SsaError::ZeroBound);
}

#[test]
fn loop_header_phis() {
    let ssa = ssa_of("int f(int n) {\n i = 0;\n s = 0;\n while (i < n) {\n  s = s + i;\n  i = i + 1;\n }\n assert(s >= 0);\n}");
    let hdr: BTreeSet<String> = ssa
        .statements()
        .iter()
        .filter_map(|s| match &s.kind {
            FlatKind::LoopPhi(p) => Some(format!("{}<-{},{}", p.lhs, p.entry, p.back)),
            _ => None,
        })
        .collect();
    assert_eq!(hdr, BTreeSet::from(["s_2<-s_1,s_3".to_string(), "i_2<-i_1,i_3".to_string()]));
    assert_eq!(ssa.final_versions()["s"], v("s", 2));
}

#[test]
fn nested_loops_unroll_per_loop() {
    let src = "int f(int n) {\n i = 0;\n while (i < 2) {\n  j = 0;\n  while (j < 2)\n   j = j + 1;\n  i = i + 1;\n }\n assert(i == 2);\n}";
    let u = unroll_loops(&ssa_of(src), 2).unwrap();
    let inner: Vec<String> = u
        .statements()
        .iter()
        .filter(|s| s.source == 5 && matches!(s.kind, FlatKind::Cond { .. }))
        .map(|s| s.id.to_string())
        .collect();
    assert_eq!(inner, ["5#1.1", "5#1.2", "5#2.1", "5#2.2"]);
    assert!(u.definition_counts().values().all(|&n| n == 1));
}
