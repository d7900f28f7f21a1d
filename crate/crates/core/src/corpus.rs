//! Seeded random MiniImp programs with single-statement faults.
//!
//! Each case is a golden program, a mutant differing in one statement, and
//! a test suite over a small input grid whose expected outputs come from
//! the golden program. Candidates are kept only if an interval analysis
//! shows no assignment can leave the integer range for grid inputs.

use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::arith::{Inputs, Width};
use crate::lang::interp::{self, Outcome};
use crate::lang::{build_cfg, parse_unasserted, pretty, BinOp, CmpOp, Expr, Label, Pred, Program, Stmt, StmtKind};
use crate::ssa::{to_ssa, unroll_loops, SsaError};
use crate::suite::{TestCase, TestSuite};
use crate::tracer::{execute, TraceError, Value, Verdict};

/// Name of the variable every generated program ends by assigning.
pub const OUTPUT: &str = "out";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusParams {
    pub width: Width,
    /// Inputs range over `-input_bound..=input_bound`.
    pub input_bound: i64,
    pub max_statements: usize,
    pub max_conditionals: usize,
    /// Loops are `i = 0; while (i < K)` with `1 <= K <= max_trip`.
    pub max_trip: i64,
    /// Largest trip count a run may need; longer runs are not used as tests.
    pub unroll: u32,
    /// Tests per suite, the failing one included.
    pub suite_size: usize,
}

impl Default for CorpusParams {
    fn default() -> Self {
        CorpusParams {
            width: Width::W8,
            input_bound: 4,
            max_statements: 30,
            max_conditionals: 3,
            max_trip: 3,
            unroll: 4,
            suite_size: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaultCase {
    pub name: String,
    pub golden: Program,
    /// The mutant, without an assertion.
    pub faulty: Program,
    pub mutation: String,
    /// Tests with golden outputs; the first one fails on the mutant.
    pub suite: TestSuite,
}

impl FaultCase {
    pub fn fault_lines(&self) -> &[Label] {
        &self.suite.fault_lines
    }

    pub fn failing_test(&self) -> &TestCase {
        &self.suite.tests[0]
    }

    /// The mutant with the assertion of the failing test.
    pub fn failing_program(&self) -> Program {
        self.suite.program_for(self.failing_test(), &self.faulty).expect("generated suites carry expected outputs")
    }
}

/// Every vector in `[-bound, bound]^params`, in lexicographic order.
pub fn input_grid(params: &[String], bound: i64) -> Vec<Inputs> {
    params
        .iter()
        .map(|_| -bound..=bound)
        .multi_cartesian_product()
        .map(|vals| params.iter().cloned().zip(vals).collect())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Interval {
    lo: i128,
    hi: i128,
}

impl Interval {
    fn hull(self, o: Interval) -> Interval {
        Interval { lo: self.lo.min(o.lo), hi: self.hi.max(o.hi) }
    }
}

type Env = BTreeMap<String, Interval>;

fn expr_interval(e: &Expr, env: &Env) -> Option<Interval> {
    Some(match e {
        Expr::Int(n) => Interval { lo: *n as i128, hi: *n as i128 },
        Expr::Var(v) => *env.get(v)?,
        Expr::Neg(e) => {
            let i = expr_interval(e, env)?;
            Interval { lo: -i.hi, hi: -i.lo }
        }
        Expr::Bin(op, a, b) => {
            let (a, b) = (expr_interval(a, env)?, expr_interval(b, env)?);
            match op {
                BinOp::Add => Interval { lo: a.lo + b.lo, hi: a.hi + b.hi },
                BinOp::Sub => Interval { lo: a.lo - b.hi, hi: a.hi - b.lo },
                BinOp::Mul => {
                    let c = [a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi];
                    Interval { lo: *c.iter().min()?, hi: *c.iter().max()? }
                }
            }
        }
    })
}

fn join(a: &Env, b: &Env) -> Env {
    a.iter().filter_map(|(k, x)| b.get(k).map(|y| (k.clone(), x.hull(*y)))).collect()
}

/// Abstract execution; `false` if some assignment may leave the range.
/// Loops are followed for up to `trips` iterations without refining on
/// conditions, which covers every run that fits the unroll bound.
fn block_in_range(stmts: &[Stmt], env: &mut Env, width: Width, trips: u32) -> bool {
    for s in stmts {
        match &s.kind {
            StmtKind::Assign { lhs, rhs } => {
                let Some(i) = expr_interval(rhs, env) else { return false };
                if !width.contains(i.lo) || !width.contains(i.hi) {
                    return false;
                }
                env.insert(lhs.clone(), i);
            }
            StmtKind::If { then_branch, else_branch, .. } => {
                let (mut t, mut e) = (env.clone(), env.clone());
                if !block_in_range(then_branch, &mut t, width, trips) || !block_in_range(else_branch, &mut e, width, trips) {
                    return false;
                }
                *env = join(&t, &e);
            }
            StmtKind::While { body, .. } => {
                let mut acc = env.clone();
                let mut cur = env.clone();
                for _ in 0..trips {
                    if !block_in_range(body, &mut cur, width, trips) {
                        return false;
                    }
                    acc = acc.into_iter().map(|(k, v)| (k.clone(), cur.get(&k).map_or(v, |c| v.hull(*c)))).collect();
                    // Body-only definitions stay out of `acc`; later code cannot read them.
                }
                *env = acc;
            }
            StmtKind::Assert(_) => {}
        }
    }
    true
}

/// True when no assignment of `program` can overflow `width` for inputs in
/// `[-bound, bound]` and loops running at most `trips` times.
pub fn interval_safe(program: &Program, width: Width, bound: i64, trips: u32) -> bool {
    let b = bound as i128;
    let mut env: Env = program.params.iter().map(|p| (p.clone(), Interval { lo: -b, hi: b })).collect();
    block_in_range(&program.body, &mut env, width, trips)
}

struct Gen<'a> {
    rng: &'a mut ChaCha8Rng,
    params: &'a CorpusParams,
    label: Label,
    stmts: usize,
    conds: usize,
    counters: Vec<&'static str>,
}

const LOCALS: [&str; 5] = ["a", "b", "c", "d", "e"];

impl Gen<'_> {
    fn next_label(&mut self) -> Label {
        self.label += 1;
        self.stmts += 1;
        self.label
    }

    fn constant(&mut self) -> i64 {
        self.rng.gen_range(-3..=3)
    }

    fn leaf(&mut self, defined: &[String]) -> Expr {
        if self.rng.gen_bool(0.65) {
            Expr::Var(defined.choose(self.rng).expect("parameters are defined").clone())
        } else {
            Expr::Int(self.constant())
        }
    }

    fn expr(&mut self, defined: &[String], depth: u32) -> Expr {
        if depth == 0 || self.rng.gen_bool(0.35) {
            return self.leaf(defined);
        }
        let op = *[BinOp::Add, BinOp::Add, BinOp::Sub, BinOp::Sub, BinOp::Mul].choose(self.rng).unwrap();
        let a = self.expr(defined, depth - 1);
        // Keep products small: one side is a constant or a leaf.
        let b = if op == BinOp::Mul { self.leaf(defined) } else { self.expr(defined, depth - 1) };
        Expr::bin(op, a, b)
    }

    fn pred(&mut self, defined: &[String]) -> Pred {
        let op = *[CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge, CmpOp::Eq, CmpOp::Ne].choose(self.rng).unwrap();
        let lhs = Expr::Var(defined.choose(self.rng).unwrap().clone());
        let rhs = self.expr(defined, 1);
        Pred::Cmp(op, lhs, rhs)
    }

    fn room(&self, n: usize) -> bool {
        // Reserve the final output assignment and the assertion.
        self.stmts + n + 2 <= self.params.max_statements
    }

    fn assign(&mut self, defined: &mut Vec<String>) -> Stmt {
        let rhs = self.expr(defined, 2);
        let lhs = LOCALS.choose(self.rng).unwrap().to_string();
        let label = self.next_label();
        if !defined.contains(&lhs) {
            defined.push(lhs.clone());
        }
        Stmt { label, kind: StmtKind::Assign { lhs, rhs } }
    }

    fn block(&mut self, defined: &mut Vec<String>, len: usize, depth: u32) -> Vec<Stmt> {
        let mut out = Vec::new();
        for _ in 0..len {
            if !self.room(1) {
                break;
            }
            let roll: f64 = self.rng.gen();
            if depth < 2 && self.conds < self.params.max_conditionals && roll < 0.25 && self.room(4) {
                out.push(self.conditional(defined, depth));
            } else if depth < 2 && self.conds < self.params.max_conditionals && roll < 0.35 && self.room(5) && !self.counters.is_empty() {
                out.extend(self.counted_loop(defined, depth));
            } else {
                out.push(self.assign(defined));
            }
        }
        out
    }

    fn conditional(&mut self, defined: &mut Vec<String>, depth: u32) -> Stmt {
        self.conds += 1;
        let cond = self.pred(defined);
        let label = self.next_label();
        let (mut t, mut e) = (defined.clone(), defined.clone());
        let then_len = self.rng.gen_range(1..=3);
        let then_branch = self.block(&mut t, then_len, depth + 1);
        let else_len = self.rng.gen_range(0..=2);
        let else_branch = self.block(&mut e, else_len, depth + 1);
        defined.extend(t.into_iter().filter(|v| e.contains(v) && !defined.contains(v)).collect::<Vec<_>>());
        Stmt { label, kind: StmtKind::If { cond, then_branch, else_branch } }
    }

    fn counted_loop(&mut self, defined: &mut Vec<String>, depth: u32) -> Vec<Stmt> {
        self.conds += 1;
        let i = self.counters.remove(0).to_string();
        let trip = self.rng.gen_range(1..=self.params.max_trip);
        let init = Stmt { label: self.next_label(), kind: StmtKind::Assign { lhs: i.clone(), rhs: Expr::Int(0) } };
        let label = self.next_label();
        let mut inner = defined.clone();
        inner.push(i.clone());
        let len = self.rng.gen_range(1..=2);
        let mut body = self.block(&mut inner, len, depth + 1);
        let step = Expr::bin(BinOp::Add, Expr::Var(i.clone()), Expr::Int(1));
        body.push(Stmt { label: self.next_label(), kind: StmtKind::Assign { lhs: i.clone(), rhs: step } });
        defined.push(i.clone());
        let cond = Pred::Cmp(CmpOp::Lt, Expr::Var(i), Expr::Int(trip));
        vec![init, Stmt { label, kind: StmtKind::While { cond, body } }]
    }
}

/// Random golden program (no assertion).
pub fn random_program(rng: &mut ChaCha8Rng, params: &CorpusParams) -> Program {
    let nparams = rng.gen_range(1..=3);
    let names: Vec<String> = ["x", "y", "z"][..nparams].iter().map(|s| s.to_string()).collect();
    let mut g = Gen { rng, params, label: 0, stmts: 0, conds: 0, counters: vec!["i", "j", "k"] };
    let mut defined = names.clone();
    let len = g.rng.gen_range(3..=8);
    let mut body = g.block(&mut defined, len, 0);
    let rhs = g.expr(&defined, 2);
    body.push(Stmt { label: g.next_label(), kind: StmtKind::Assign { lhs: OUTPUT.to_string(), rhs } });
    Program { name: "f".to_string(), params: names, body }
}

fn stmt_mut(body: &mut [Stmt], label: Label) -> Option<&mut Stmt> {
    for s in body {
        if s.label == label {
            return Some(s);
        }
        let found = match &mut s.kind {
            StmtKind::If { then_branch, else_branch, .. } => {
                stmt_mut(then_branch, label).or_else(move || stmt_mut(else_branch, label))
            }
            StmtKind::While { body, .. } => stmt_mut(body, label),
            _ => None,
        };
        if found.is_some() {
            return found;
        }
    }
    None
}

fn node_count(e: &Expr) -> usize {
    match e {
        Expr::Int(_) | Expr::Var(_) => 1,
        Expr::Neg(x) => 1 + node_count(x),
        Expr::Bin(_, a, b) => 1 + node_count(a) + node_count(b),
    }
}

/// Node `*k` in pre-order.
fn nth_node<'a>(e: &'a mut Expr, k: &mut usize) -> Option<&'a mut Expr> {
    if *k == 0 {
        return Some(e);
    }
    *k -= 1;
    match e {
        Expr::Neg(x) => nth_node(x, k),
        Expr::Bin(_, a, b) => match nth_node(a, k) {
            Some(n) => Some(n),
            None => nth_node(b, k),
        },
        _ => None,
    }
}

/// Applies one random single-statement mutation; returns a description.
fn mutate(rng: &mut ChaCha8Rng, program: &mut Program) -> Option<(Label, String)> {
    let params = program.params.clone();
    let candidates: Vec<Label> = program
        .statements()
        .iter()
        .filter(|s| match &s.kind {
            // Loop counter updates and initializations stay intact.
            StmtKind::Assign { lhs, .. } => !["i", "j", "k"].contains(&lhs.as_str()),
            StmtKind::If { .. } => true,
            _ => false,
        })
        .map(|s| s.label)
        .collect();
    let label = *candidates.choose(rng)?;
    let s = stmt_mut(&mut program.body, label)?;
    let before = s.header();
    match &mut s.kind {
        StmtKind::Assign { rhs, .. } => {
            mutate_expr(rng, rhs, &params);
        }
        StmtKind::If { cond: Pred::Cmp(op, a, b), .. } => {
            if rng.gen_bool(0.6) {
                let ops = [CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge, CmpOp::Eq, CmpOp::Ne];
                *op = *ops.iter().filter(|o| *o != op).collect::<Vec<_>>().choose(rng).copied()?;
            } else if !mutate_expr(rng, b, &params) {
                mutate_expr(rng, a, &params);
            }
        }
        _ => return None,
    }
    let after = s.header();
    (before != after).then(|| (label, format!("line {label}: `{before}` -> `{after}`")))
}

fn mutate_expr(rng: &mut ChaCha8Rng, e: &mut Expr, params: &[String]) -> bool {
    let mut order: Vec<usize> = (0..node_count(e)).collect();
    order.shuffle(rng);
    for mut k in order {
        let n = nth_node(e, &mut k).expect("index below node count");
        match n {
            Expr::Int(c) => {
                *c += if rng.gen_bool(0.5) { 1 } else { -1 };
                return true;
            }
            Expr::Bin(op, _, _) => {
                *op = match (*op, rng.gen_bool(0.5)) {
                    (BinOp::Add, _) => BinOp::Sub,
                    (BinOp::Sub, _) => BinOp::Add,
                    (BinOp::Mul, true) => BinOp::Add,
                    (BinOp::Mul, false) => BinOp::Sub,
                };
                return true;
            }
            Expr::Var(v) => {
                let others: Vec<&String> = params.iter().filter(|p| *p != v).collect();
                if let Some(o) = others.choose(rng) {
                    *v = (*o).clone();
                    return true;
                }
            }
            Expr::Neg(_) => {}
        }
    }
    false
}

fn output_of(program: &Program, input: &Inputs, params: &CorpusParams) -> Option<i64> {
    let run = interp::run(program, input, params.width, u64::from(params.unroll)).ok()?;
    match run.outcome {
        Outcome::Finished => run.vars.get(OUTPUT).copied(),
        _ => None,
    }
}

fn normalize(p: &Program) -> Program {
    parse_unasserted(&pretty(p)).expect("generated programs print to valid source")
}

/// One case from `seed`, or `None` if the draw is rejected (unsafe ranges,
/// equivalent mutant, no usable failing input).
pub fn generate_case(seed: u64, params: &CorpusParams) -> Option<FaultCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Round-trip through the printer so cases equal what a reader of the
    // written corpus gets back (negative literals, associativity).
    let golden = normalize(&random_program(&mut rng, params));
    let trips = params.unroll;
    if !interval_safe(&golden, params.width, params.input_bound, trips) {
        return None;
    }
    let mut faulty = golden.clone();
    let (line, mutation) = mutate(&mut rng, &mut faulty)?;
    let faulty = normalize(&faulty);
    if !interval_safe(&faulty, params.width, params.input_bound, trips) {
        return None;
    }
    let mut grid = input_grid(&golden.params, params.input_bound);
    grid.shuffle(&mut rng);
    let mut failing = None;
    let mut passing = Vec::new();
    for input in grid {
        let (Some(g), Some(f)) = (output_of(&golden, &input, params), output_of(&faulty, &input, params)) else { continue };
        if g != f && failing.is_none() {
            failing = Some((input, g));
        } else if g == f && passing.len() + 1 < params.suite_size {
            passing.push((input, g));
        }
    }
    let (input, g) = failing?;
    let tests = std::iter::once((input, g))
        .chain(passing)
        .enumerate()
        .map(|(i, (inputs, expected))| TestCase { id: format!("t{}", i + 1), inputs, expected: Some(expected), assert: None })
        .collect();
    let suite = TestSuite { output: Some(OUTPUT.to_string()), fault_lines: vec![line], tests };
    Some(FaultCase { name: format!("case{seed:06}"), golden, faulty, mutation, suite })
}

/// The first `count` accepted cases drawn from seeds `base`, `base + 1`, ...
pub fn generate_corpus(base: u64, count: usize, params: &CorpusParams) -> Vec<FaultCase> {
    (base..).filter_map(|s| generate_case(s, params)).take(count).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Divergence {
    #[error(transparent)]
    Ssa(#[from] SsaError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("input {input:?}: interpreter says {interp:?}, SSA run says {ssa:?}")]
    Outcome { input: Inputs, interp: Outcome, ssa: Verdict },
    #[error("input {input:?}: `{var}` is {interp:?} in the interpreter but {ssa:?} in the SSA run")]
    Value { input: Inputs, var: String, interp: Option<i64>, ssa: Option<i64> },
}

/// Runs `program` through the interpreter and through its unrolled SSA form
/// on every grid input and reports the first disagreement in outcome or in
/// the final value of a variable.
pub fn check_semantics(program: &Program, width: Width, unroll: u32, bound: i64) -> Result<usize, Divergence> {
    let ssa = unroll_loops(&to_ssa(&build_cfg(std::sync::Arc::new(program.clone())))?, unroll)?;
    let grid = input_grid(&program.params, bound);
    for input in &grid {
        let run = interp::run(program, input, width, u64::from(unroll)).expect("grid inputs are in range");
        let trace = execute(&ssa, input, width)?;
        let same = match (&run.outcome, &trace.verdict) {
            (Outcome::Passed, Verdict::Passed)
            | (Outcome::Violated, Verdict::Violated)
            | (Outcome::Finished, Verdict::Finished)
            | (Outcome::Diverged(_), Verdict::Truncated) => true,
            (Outcome::Overflow(l), Verdict::Overflow(id)) => crate::encoder::source_line(&ssa, id) == Some(*l),
            _ => false,
        };
        if !same {
            return Err(Divergence::Outcome { input: input.clone(), interp: run.outcome, ssa: trace.verdict.clone() });
        }
        if !matches!(run.outcome, Outcome::Passed | Outcome::Violated | Outcome::Finished) {
            continue;
        }
        let state = trace.state();
        let names: BTreeSet<&String> = run.vars.keys().chain(ssa.final_versions().keys()).collect();
        for var in names {
            let interp = run.vars.get(var).copied();
            let ssa_val = ssa.final_versions().get(var).and_then(|v| match state.get(&v.name()) {
                Some(Value::Int(n)) => Some(*n),
                _ => None,
            });
            // A variable assigned on one arm only has no join version;
            // only compare when both sides have a value for it.
            if interp.is_some() && ssa_val.is_some() && interp != ssa_val {
                return Err(Divergence::Value { input: input.clone(), var: var.clone(), interp, ssa: ssa_val });
            }
        }
    }
    Ok(grid.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse, parse_unasserted, validate, ValidationMode};
    use crate::suite::output_equals;

    #[test]
    fn grid_is_lexicographic_and_complete() {
        let g = input_grid(&["x".to_string(), "y".to_string()], 1);
        assert_eq!(g.len(), 9);
        assert_eq!(g[0], [("x".to_string(), -1), ("y".to_string(), -1)].into_iter().collect());
        assert_eq!(g[8], [("x".to_string(), 1), ("y".to_string(), 1)].into_iter().collect());
    }

    #[test]
    fn interval_filter() {
        let ok = parse_unasserted("int f(int x) {\n a = x * 3;\n b = a * 4;\n}").unwrap();
        assert!(interval_safe(&ok, Width::W8, 4, 4));
        // 4 * 3 * 4 * 3 = 144 > 127
        let bad = parse_unasserted("int f(int x) {\n a = x * 3;\n b = a * 4;\n c = b * 3;\n}").unwrap();
        assert!(!interval_safe(&bad, Width::W8, 4, 4));
        // four trips of doubling from 4 reach 64, a fifth would not fit after another doubling
        let lp = parse_unasserted("int f(int x) {\n i = 0;\n a = x;\n while (i < 3) {\n a = a * 2;\n i = i + 1;\n }\n}").unwrap();
        assert!(interval_safe(&lp, Width::W8, 4, 4));
        assert!(!interval_safe(&lp, Width::W8, 4, 5));
    }

    #[test]
    fn generated_cases_are_well_formed() {
        let params = CorpusParams::default();
        let corpus = generate_corpus(0, 25, &params);
        assert_eq!(corpus.len(), 25);
        for c in &corpus {
            validate(&c.golden, ValidationMode::AssertOptional).unwrap();
            let prog = c.failing_program();
            let src = pretty(&prog);
            assert_eq!(parse(&src).unwrap(), prog, "{src}");
            assert!(prog.statements().len() <= params.max_statements);
            assert!(prog.conditional_count() <= params.max_conditionals);
            let run = interp::run(&prog, &c.failing_test().inputs, params.width, 4).unwrap();
            assert_eq!(run.outcome, Outcome::Violated, "{}", c.name);
            let golden = c.suite.program_for(c.failing_test(), &c.golden).unwrap();
            assert_eq!(interp::run(&golden, &c.failing_test().inputs, params.width, 4).unwrap().outcome, Outcome::Passed);
            assert_ne!(c.golden, c.faulty);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let p = CorpusParams::default();
        assert_eq!(generate_corpus(7, 5, &p), generate_corpus(7, 5, &p));
    }

    #[test]
    fn semantics_check_accepts_p_and_output_equality_works() {
        let p = parse(crate::testing::P_SOURCE).unwrap();
        assert_eq!(check_semantics(&p, Width::W8, 4, 4), Ok(81));
        let q = parse_unasserted("int f(int x) {\n a = x + 1;\n}").unwrap().with_assertion(output_equals("a", -2)).unwrap();
        assert!(check_semantics(&q, Width::W8, 4, 4).is_ok());
    }
}
