//! Acceptance suite. Each criterion prints one `PASS`/`FAIL` line; the test
//! fails if any criterion does.
//!
//! Run with `cargo test --release -p formloc-core --test acceptance -- --nocapture`
//! to see the lines.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use formloc::corpus::{check_semantics, generate_corpus, CorpusParams, FaultCase};
use formloc::driver::{
    debug, merge_reports, Bounds, DebugSession, FaultReport, ReportEntry, ReportStmt, RunMode, Strategy,
};
use formloc::encoder::Hardness;
use formloc::lang::{parse, Label};
use formloc::logic::sexpr::parse_formula;
use formloc::logic::Formula;
use formloc::solver::{
    brute_force_comss, check_comss, enumerate_comss, Budget, Mode, MaxSatInstance, Weight,
};
use formloc::ssa::{FlatKind, StmtId};
use formloc::testing::{random_instance, P_SOURCE};
use formloc::tracer::Branch;
use formloc::weights::weight_of;
use formloc::{Inputs, Width};
use num_bigint::BigInt;
use num_rational::BigRational;

type Outcome = Result<String, String>;

const OFC: RunMode = RunMode { strategy: Strategy::Ofc, weighted: false };
const BA: RunMode = RunMode { strategy: Strategy::Ba, weighted: false };

fn input(pairs: &[(&str, i64)]) -> Inputs {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn line_sets(r: &FaultReport) -> BTreeSet<BTreeSet<Label>> {
    r.line_sets().into_iter().collect()
}

fn sets(v: &[&[Label]]) -> BTreeSet<BTreeSet<Label>> {
    v.iter().map(|s| s.iter().copied().collect()).collect()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn corpus_bounds(params: &CorpusParams) -> Bounds {
    Bounds { width: params.width, unroll: params.unroll, ..Bounds::default() }
}

/// The running example on `{x=0, y=0}`, checked step by step.
fn worked_example() -> Outcome {
    let start = Instant::now();
    let p = parse(P_SOURCE).map_err(|e| e.to_string())?;
    let mut s = DebugSession::new(&p, input(&[("x", 0), ("y", 0)]), OFC, Bounds::default(), None)
        .map_err(|e| e.to_string())?;
    let r = s.run().map_err(|e| e.to_string())?;
    let h = s.history();
    ensure(h.len() == 2, || format!("{} iterations", h.len()))?;

    let trace: Vec<String> = h[0].trace.as_ref().ok_or("no trace")?.ids().map(|i| i.to_string()).collect();
    ensure(trace == ["1", "2", "phi1", "5", "6", "phi2", "9"], || format!("trace 1 is {trace:?}"))?;

    let f = |s: &str| parse_formula(s).expect("valid formula");
    let want: Vec<(&str, Hardness, Formula)> = vec![
        ("1", Hardness::Soft, f("(iff guard[1] (>= x_1 0))")),
        ("2", Hardness::Soft, f("(= a_1 x_1)")),
        ("phi1", Hardness::Hard, f("(or (and guard[1] (= a_3 a_1)) (and (not guard[1]) (= a_3 a_2)))")),
        ("5", Hardness::Soft, f("(iff guard[5] (< y_1 5))")),
        ("6", Hardness::Soft, f("(= b_1 (+ a_3 1))")),
        ("phi2", Hardness::Hard, f("(or (and guard[5] (= b_3 b_1)) (and (not guard[5]) (= b_3 b_2)))")),
    ];
    let mut tf1: Vec<(String, Hardness, Formula)> = h[0]
        .new_clauses
        .iter()
        .map(|id| {
            let c = s.formula().get(*id).expect("clause exists");
            (c.origin.to_string(), c.hardness, c.constraint.clone())
        })
        .collect();
    tf1.sort_by(|a, b| a.0.cmp(&b.0));
    let mut want: Vec<(String, Hardness, Formula)> = want.into_iter().map(|(o, hd, c)| (o.to_string(), hd, c)).collect();
    want.sort_by(|a, b| a.0.cmp(&b.0));
    ensure(tf1 == want, || format!("TF1 is {tf1:?}"))?;

    let stmts = |i: usize| -> BTreeSet<Vec<String>> {
        h[i].comss
            .iter()
            .map(|m| {
                m.clauses.iter().map(|id| s.formula().clause_origin(*id).expect("soft clause").to_string()).collect()
            })
            .collect()
    };
    let v = |xs: &[&[&str]]| -> BTreeSet<Vec<String>> {
        xs.iter().map(|x| x.iter().map(|s| s.to_string()).collect()).collect()
    };
    ensure(stmts(0) == v(&[&["6"], &["5"]]), || format!("iteration 1 CoMSSs {:?}", stmts(0)))?;
    ensure(stmts(1) == v(&[&["6"], &["5", "8"]]), || format!("iteration 2 CoMSSs {:?}", stmts(1)))?;
    ensure(h[0].flip == Some(Branch::new(StmtId::line(5), false)), || format!("flip {:?}", h[0].flip))?;
    ensure(line_sets(&r) == sets(&[&[6], &[5, 8]]), || format!("report {:?}", r.line_sets()))?;
    ensure(r.iterations == 2 && r.paths_explored == 2 && r.paths_total == "4", || {
        format!("{} iterations, {}/{} paths", r.iterations, r.paths_explored, r.paths_total)
    })?;
    let t = start.elapsed();
    ensure(t < Duration::from_secs(5), || format!("took {t:?}"))?;
    Ok(format!("trace, TF1, both CoMSS rounds and the report match; 2 iterations, 2/4 paths, {t:.0?}"))
}

struct CaseRun {
    name: String,
    ofc: FaultReport,
    ba: FaultReport,
    unexplored: bool,
    ofc_solves: Vec<Duration>,
    ba_solve: Duration,
}

fn run_case(c: &FaultCase, bounds: &Bounds) -> Result<CaseRun, String> {
    let p = c.failing_program();
    let inp = c.failing_test().inputs.clone();
    let mut o = DebugSession::new(&p, inp.clone(), OFC, bounds.clone(), None).map_err(|e| format!("{}: {e}", c.name))?;
    let ofc = o.run().map_err(|e| format!("{}: {e}", c.name))?;
    let mut b = DebugSession::new(&p, inp, BA, bounds.clone(), None).map_err(|e| format!("{}: {e}", c.name))?;
    let ba = b.run().map_err(|e| format!("{}: {e}", c.name))?;
    let unexplored = o.ssa().statements().iter().any(|st| {
        matches!(st.kind, FlatKind::Cond { .. } | FlatKind::Loop { .. })
            && [true, false].iter().any(|&pol| !o.visited().contains(&Branch::new(st.id.clone(), pol)))
    });
    Ok(CaseRun {
        name: c.name.clone(),
        unexplored,
        ofc_solves: o.history().iter().filter(|h| !h.reused).map(|h| h.solve_time).collect(),
        ba_solve: b.history()[0].solve_time,
        ofc,
        ba,
    })
}

fn equivalence(runs: &[CaseRun], elapsed: Duration) -> Outcome {
    let mut mismatches = Vec::new();
    for r in runs {
        ensure(r.ofc.converged && r.ofc.complete && r.ba.complete, || format!("{} did not finish", r.name))?;
        if line_sets(&r.ofc) != line_sets(&r.ba) {
            mismatches.push(format!("{}: ofc {:?} ba {:?}", r.name, line_sets(&r.ofc), line_sets(&r.ba)));
        }
    }
    ensure(mismatches.is_empty(), || format!("{} mismatches, first {}", mismatches.len(), mismatches[0]))?;
    ensure(elapsed < Duration::from_secs(600), || format!("took {elapsed:?}"))?;
    Ok(format!("{} programs, 0 mismatches, {elapsed:.1?} at W=8", runs.len()))
}

fn comss_oracle() -> Outcome {
    let mut checked = 0;
    for seed in 10_000..10_500 {
        let inst: MaxSatInstance = random_instance(seed);
        for mode in [Mode::Plain, Mode::Weighted] {
            let e = enumerate_comss(&inst, 3, mode, &Budget::default()).map_err(|e| format!("seed {seed}: {e}"))?;
            let b = brute_force_comss(&inst, 3, mode).map_err(|e| format!("seed {seed}: {e}"))?;
            let ids = |v: &[formloc::solver::CoMss]| v.iter().map(|m| m.clauses.clone()).collect::<Vec<_>>();
            ensure(e.complete && ids(&e.comss) == ids(&b), || format!("seed {seed} {mode:?}: {:?} vs {:?}", ids(&e.comss), ids(&b)))?;
            for m in &e.comss {
                let (corrects, minimal) = check_comss(&inst, &m.clauses).map_err(|e| e.to_string())?;
                ensure(corrects && minimal, || format!("seed {seed}: {:?} correct {corrects} minimal {minimal}", m.clauses))?;
                checked += 1;
            }
        }
    }
    Ok(format!("500 instances x 2 modes agree with brute force; {checked} CoMSSs pass both checks"))
}

fn steering() -> Outcome {
    use formloc::encoder::{Clause, ClauseKind, Origin};
    let clause = |id: u32, hard: bool, s: &str, weight: Option<Weight>| Clause {
        id,
        kind: if hard { ClauseKind::Input } else { ClauseKind::Assign },
        constraint: parse_formula(s).expect("valid formula"),
        origin: if hard { Origin::Input } else { Origin::Stmt(StmtId::line(id)) },
        hardness: if hard { Hardness::Hard } else { Hardness::Soft },
        weight,
        concretized: false,
    };
    // dyadic suspiciousness values, so 1/susp has an exact oracle
    let susp: Vec<(i64, u32)> = vec![(1, 0), (1, 1), (3, 2), (1, 3), (5, 4), (7, 3), (1, 6), (0, 0)];
    let mut cases = 0;
    for &(n1, e1) in &susp {
        for &(n2, e2) in &susp {
            let (s1, s2) = (n1 as f64 / f64::from(1u32 << e1), n2 as f64 / f64::from(1u32 << e2));
            if s1 == s2 {
                continue;
            }
            for (a, b) in [(0, 2), (3, -2)] {
                let inst = MaxSatInstance::new(
                    Width::W8,
                    vec![
                        clause(1, true, &format!("(= x {a})"), None),
                        clause(2, false, "(= y (+ x 1))", Some(weight_of(s1))),
                        clause(3, false, &format!("(= y (+ x {b}))"), Some(weight_of(s2))),
                    ],
                );
                let e = enumerate_comss(&inst, 2, Mode::Weighted, &Budget::default()).map_err(|e| e.to_string())?;
                // the lower suspiciousness has the higher weight and must be kept
                let heavier = if s1 < s2 { 2 } else { 3 };
                let first = e.comss.first().ok_or("no CoMSS")?;
                ensure(!first.clauses.contains(&heavier), || format!("susp {s1} vs {s2}: first CoMSS {:?}", first.clauses))?;
                cases += 1;
            }
        }
    }
    for &(n, e) in &susp {
        let s = n as f64 / f64::from(1u32 << e);
        let want = if n == 0 { Weight::Top } else { Weight::Finite(BigRational::new(BigInt::from(1i64 << e), BigInt::from(n))) };
        ensure(weight_of(s) == want, || format!("weight_of({s}) = {:?}", weight_of(s)))?;
    }
    ensure(weight_of(-0.0) == Weight::Top, || "weight_of(-0.0) is finite".into())?;

    // through the whole pipeline: line 6 is most suspicious, so its CoMSS leads
    let p = parse(P_SOURCE).map_err(|e| e.to_string())?;
    let map = [(1, 0.5), (2, 0.5), (4, 0.5), (5, 0.5), (6, 1.0), (8, 0.5)].into_iter().collect();
    let r = debug(&p, input(&[("x", 0), ("y", 0)]), RunMode { strategy: Strategy::Ofc, weighted: true }, Bounds::default(), Some(map))
        .map_err(|e| e.to_string())?;
    ensure(r.line_sets().first() == Some(&BTreeSet::from([6])), || format!("weighted report {:?}", r.line_sets()))?;
    Ok(format!("{cases} two-clause conflicts keep the heavier clause; 1/susp exact for {} values, 0 maps to top", susp.len()))
}

fn economy(runs: &[CaseRun]) -> Outcome {
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len().max(1) as f64;
    for r in runs {
        ensure(r.ofc.statement_clauses <= r.ba.statement_clauses, || {
            format!("{}: ofc {} > ba {} clauses", r.name, r.ofc.statement_clauses, r.ba.statement_clauses)
        })?;
    }
    let (open, closed): (Vec<&CaseRun>, Vec<&CaseRun>) = runs.iter().partition(|r| r.unexplored);
    ensure(!open.is_empty(), || "no program left a branch unexplored".into())?;
    let count = |rs: &[&CaseRun], ofc: bool| -> Vec<f64> {
        rs.iter().map(|r| (if ofc { r.ofc.statement_clauses } else { r.ba.statement_clauses }) as f64).collect()
    };
    let (o_open, b_open) = (mean(&count(&open, true)), mean(&count(&open, false)));
    let (o_closed, b_closed) = (mean(&count(&closed, true)), mean(&count(&closed, false)));
    ensure(o_open < b_open, || format!("unexplored branches: ofc mean {o_open:.2} vs ba {b_open:.2}"))?;
    ensure(o_closed <= b_closed, || format!("fully explored: ofc mean {o_closed:.2} vs ba {b_closed:.2}"))?;
    // Time per iteration as the paper tabulates it: each failing input's
    // OFC solve time divided by its solver calls, averaged over inputs.
    let per_input: Vec<f64> = runs.iter().map(|r| mean(&r.ofc_solves.iter().map(|d| d.as_secs_f64()).collect::<Vec<_>>())).collect();
    let pooled: Vec<f64> = runs.iter().flat_map(|r| r.ofc_solves.iter().map(|d| d.as_secs_f64())).collect();
    let ba: Vec<f64> = runs.iter().map(|r| r.ba_solve.as_secs_f64()).collect();
    let (t_ofc, t_pooled, t_ba) = (mean(&per_input) * 1e3, mean(&pooled) * 1e3, mean(&ba) * 1e3);
    ensure(t_ofc < t_ba, || format!("mean OFC time per iteration {t_ofc:.2} ms vs BA solve {t_ba:.2} ms"))?;
    Ok(format!(
        "clauses ofc/ba: {o_open:.1}/{b_open:.1} on {} programs with unexplored branches, {o_closed:.1}/{b_closed:.1} on {}; \
         solve ms per OFC iteration {t_ofc:.2} vs BA {t_ba:.2} (pooled over all OFC calls: {t_pooled:.2})",
        open.len(),
        closed.len()
    ))
}

fn report_of(entries: &[(f64, &[Label])]) -> FaultReport {
    FaultReport {
        mode: RunMode { strategy: Strategy::Ofc, weighted: true },
        ordered: true,
        entries: entries
            .iter()
            .map(|(rank, lines)| ReportEntry {
                rank: *rank,
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
            })
            .collect(),
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

fn ranked(r: &FaultReport) -> Vec<(Label, f64)> {
    r.entries.iter().flat_map(|e| e.statements.iter().map(move |s| (s.line, e.rank))).collect()
}

fn merge() -> Outcome {
    // hand-built: A ranks 6,{5,9},2; B ranks 2,9,{4,6}
    let a = report_of(&[(1.0, &[6]), (2.0, &[5, 9]), (3.0, &[2])]);
    let b = report_of(&[(1.0, &[2]), (2.0, &[9]), (3.0, &[4, 6])]);
    let m = merge_reports(&[a, b]).ok_or("empty merge")?;
    // 2: (3+1)/2 = 2, 6: (1+3)/2 = 2, 9: (2+2)/2 = 2 -> ties by line; 4 and 5 are dropped
    let want = vec![(2, 2.0), (6, 2.0), (9, 2.0)];
    ensure(ranked(&m) == want, || format!("merged {:?}", ranked(&m)))?;
    let c = report_of(&[(1.0, &[3]), (2.0, &[7])]);
    let d = report_of(&[(1.0, &[7]), (2.0, &[8]), (3.0, &[3])]);
    let m = merge_reports(&[c, d]).ok_or("empty merge")?;
    // 7: (2+1)/2 = 1.5, 3: (1+3)/2 = 2
    ensure(ranked(&m) == vec![(7, 1.5), (3, 2.0)], || format!("merged {:?}", ranked(&m)))?;

    // two real failing inputs of the running example, weighted so both
    // reports are ranked: {x=0,y=0} gives [{6}, {5,8}], {x=0,y=7} gives [{8}, {5,6}]
    let p = parse(P_SOURCE).map_err(|e| e.to_string())?;
    let map: formloc::weights::SuspiciousnessMap =
        [(1, 0.5), (2, 0.5), (4, 0.5), (5, 0.5), (6, 1.0), (8, 0.5)].into_iter().collect();
    let mode = RunMode { strategy: Strategy::Ofc, weighted: true };
    let run = |y: i64| debug(&p, input(&[("x", 0), ("y", y)]), mode, Bounds::default(), Some(map.clone()));
    let r0 = run(0).map_err(|e| e.to_string())?;
    let r7 = run(7).map_err(|e| e.to_string())?;
    ensure(ranked(&r0) == vec![(6, 1.0), (5, 2.0), (8, 2.0)], || format!("y=0 report {:?}", ranked(&r0)))?;
    ensure(ranked(&r7) == vec![(8, 1.0), (5, 2.0), (6, 2.0)], || format!("y=7 report {:?}", ranked(&r7)))?;
    let m = merge_reports(&[r0, r7]).ok_or("empty merge")?;
    ensure(ranked(&m) == vec![(6, 1.5), (8, 1.5), (5, 2.0)], || format!("merged {:?}", ranked(&m)))?;
    Ok("intersection kept at average rank on 2 hand-built pairs and on 2 failing inputs of the running example".into())
}

fn semantics(corpus: &[FaultCase], params: &CorpusParams) -> Outcome {
    let mut inputs = 0;
    for c in corpus {
        for p in [&c.golden, &c.failing_program()] {
            inputs += check_semantics(p, params.width, params.unroll, 4).map_err(|e| format!("{}: {e}", c.name))?;
        }
    }
    Ok(format!("{} programs (golden and faulty), {inputs} grid inputs in [-4,4], 0 divergences", corpus.len() * 2))
}

#[test]
fn acceptance() {
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    results.push((1, "worked example", worked_example()));

    let params = CorpusParams::default();
    let corpus = generate_corpus(0, 200, &params);
    let bounds = corpus_bounds(&params);
    let start = Instant::now();
    let runs: Result<Vec<CaseRun>, String> = corpus.iter().map(|c| run_case(c, &bounds)).collect();
    let elapsed = start.elapsed();
    let corpus_ok = ensure(corpus.len() >= 200, || format!("only {} corpus programs", corpus.len()));
    let runs = corpus_ok.and(runs);
    results.push((2, "OFC and BA agree", runs.as_ref().map_err(Clone::clone).and_then(|r| equivalence(r, elapsed))));
    results.push((3, "CoMSS enumeration", comss_oracle()));
    results.push((4, "clause weighting", steering()));
    results.push((5, "formula economy", runs.as_ref().map_err(Clone::clone).and_then(|r| economy(r))));
    results.push((6, "report merge", merge()));
    results.push((7, "SSA semantics", semantics(&corpus, &params)));

    for (n, name, r) in &results {
        match r {
            Ok(msg) => println!("criterion {n} ({name}): PASS - {msg}"),
            Err(msg) => println!("criterion {n} ({name}): FAIL - {msg}"),
        }
    }
    let failed: Vec<u32> = results.iter().filter(|(_, _, r)| r.is_err()).map(|(n, _, _)| *n).collect();
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
