//! Concrete execution of unrolled SSA programs, producing the traces the
//! on-demand encoder consumes, plus execution hijacking for branch flips.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;

use crate::arith::{Inputs, Width};
use crate::lang::interp::{check_inputs, InputError};
use crate::lang::Label;
use crate::ssa::{guard_name, SsaNode, SsaProgram, SsaVar, StmtId, StmtKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Bool(bool),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Bool(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Step {
    pub id: StmtId,
    /// Variable defined by the step (a guard for conditionals) and its value.
    pub def: Option<(String, Value)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Passed,
    Violated,
    /// A loop wanted to run past the unroll bound.
    Truncated,
    /// A value did not fit in the integer width at this statement.
    Overflow(StmtId),
    /// The program has no assertion and ran to the end.
    Finished,
}

/// One outgoing edge of a conditional occurrence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Branch {
    pub cond: StmtId,
    pub taken: bool,
}

impl Branch {
    pub fn new(cond: StmtId, taken: bool) -> Self {
        Branch { cond, taken }
    }

    pub fn alternative(&self) -> Branch {
        Branch { cond: self.cond.clone(), taken: !self.taken }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.cond, if self.taken { "T" } else { "F" })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Trace {
    /// Initial SSA versions of the parameters and their input values.
    pub inputs: BTreeMap<String, Value>,
    pub steps: Vec<Step>,
    pub verdict: Verdict,
    /// Branch decisions in execution order.
    pub branches: Vec<Branch>,
    /// Index into `steps` of the conditional whose outcome was forced, for
    /// hijacked runs.
    pub flip_step: Option<usize>,
}

impl Trace {
    pub fn ids(&self) -> impl Iterator<Item = &StmtId> {
        self.steps.iter().map(|s| &s.id)
    }

    pub fn covered_branches(&self) -> BTreeSet<Branch> {
        self.branches.iter().cloned().collect()
    }

    /// Source lines of executed statements (φ pseudo-statements and
    /// truncation checks excluded).
    pub fn lines(&self) -> BTreeSet<Label> {
        self.steps
            .iter()
            .filter_map(|s| match s.id.key {
                StmtKey::Line(l) => Some(l),
                _ => None,
            })
            .collect()
    }

    /// Input values plus every variable defined up to (excluding) step `end`.
    pub fn state_until(&self, end: usize) -> BTreeMap<String, Value> {
        let mut st = self.inputs.clone();
        st.extend(self.steps[..end.min(self.steps.len())].iter().filter_map(|s| s.def.clone()));
        st
    }

    pub fn state(&self) -> BTreeMap<String, Value> {
        self.state_until(self.steps.len())
    }

    /// Values that are trustworthy for concretization: everything for a
    /// native run, only the part before the forced branch for hijacked runs.
    pub fn reliable_state(&self) -> BTreeMap<String, Value> {
        self.state_until(self.flip_step.unwrap_or(self.steps.len()))
    }

    pub fn position(&self, id: &StmtId) -> Option<usize> {
        self.steps.iter().position(|s| &s.id == id)
    }

    /// One step per line: statement, defined variable, value.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            match &s.def {
                Some((v, val)) => {
                    let _ = writeln!(out, "{}\t{}\t{}", s.id, v, val);
                }
                None => {
                    let _ = writeln!(out, "{}\t-\t-", s.id);
                }
            }
        }
        let _ = writeln!(out, "verdict\t{:?}", self.verdict);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TraceError {
    #[error(transparent)]
    Input(#[from] InputError),
    #[error("program still contains loops; unroll it before executing")]
    ContainsLoops,
    #[error("conditional of branch {0} does not occur in the trace being replayed")]
    FlipNotInTrace(Branch),
    #[error("no recorded trace covers {0}, the branch to flip away from")]
    NoSourceTrace(Branch),
}

enum Stop {
    Verdict(Verdict),
}

struct Machine<'a> {
    width: Width,
    forced: &'a BTreeMap<StmtId, bool>,
    flip: Option<&'a StmtId>,
    env: BTreeMap<SsaVar, i64>,
    trace: Trace,
}

impl Machine<'_> {
    fn lookup(&self) -> impl Fn(&SsaVar) -> Option<i128> + '_ {
        |v| self.env.get(v).map(|&x| x as i128)
    }

    fn block(&mut self, nodes: &[SsaNode]) -> Result<(), Stop> {
        for n in nodes {
            self.node(n)?;
        }
        Ok(())
    }

    fn overflow(&self, id: &StmtId) -> Stop {
        Stop::Verdict(Verdict::Overflow(id.clone()))
    }

    fn node(&mut self, n: &SsaNode) -> Result<(), Stop> {
        match n {
            SsaNode::Assign { id, lhs, rhs } => {
                let v = rhs.eval(&self.lookup()).filter(|v| self.width.contains(*v)).ok_or_else(|| self.overflow(id))?;
                let v = v as i64;
                self.env.insert(lhs.clone(), v);
                self.trace.steps.push(Step { id: id.clone(), def: Some((lhs.name(), Value::Int(v))) });
            }
            SsaNode::Cond { id, pred, then_branch, else_branch, phis } => {
                let actual = pred.eval(&self.lookup()).ok_or_else(|| self.overflow(id))?;
                if self.flip == Some(id) {
                    self.trace.flip_step = Some(self.trace.steps.len());
                }
                let taken = self.forced.get(id).copied().unwrap_or(actual);
                self.trace.steps.push(Step { id: id.clone(), def: Some((guard_name(id), Value::Bool(actual))) });
                self.trace.branches.push(Branch::new(id.clone(), taken));
                self.block(if taken { then_branch } else { else_branch })?;
                for p in phis {
                    let src = if taken { &p.rhs_true } else { &p.rhs_false };
                    let v = self.env[src];
                    self.env.insert(p.lhs.clone(), v);
                    self.trace.steps.push(Step { id: p.id.clone(), def: Some((p.lhs.name(), Value::Int(v))) });
                }
            }
            SsaNode::Loop { .. } => unreachable!("loops are rejected before execution"),
            SsaNode::Assert { id, pred } => {
                let ok = pred.eval(&self.lookup()).ok_or_else(|| self.overflow(id))?;
                self.trace.steps.push(Step { id: id.clone(), def: None });
                return Err(Stop::Verdict(if ok { Verdict::Passed } else { Verdict::Violated }));
            }
            SsaNode::Truncate { id, pred } => {
                let more = pred.eval(&self.lookup()).ok_or_else(|| self.overflow(id))?;
                self.trace.steps.push(Step { id: id.clone(), def: None });
                if more {
                    return Err(Stop::Verdict(Verdict::Truncated));
                }
            }
        }
        Ok(())
    }
}

fn run(
    program: &SsaProgram,
    input: &Inputs,
    width: Width,
    forced: &BTreeMap<StmtId, bool>,
    flip: Option<&StmtId>,
) -> Result<Trace, TraceError> {
    if program.has_loops() {
        return Err(TraceError::ContainsLoops);
    }
    let src = program.source();
    check_inputs(&src.params, input, width)?;
    let env: BTreeMap<SsaVar, i64> = src.params.iter().zip(program.params()).map(|(name, v)| (v.clone(), input[name])).collect();
    let inputs = env.iter().map(|(v, &x)| (v.name(), Value::Int(x))).collect();
    let mut m = Machine {
        width,
        forced,
        flip,
        env,
        trace: Trace { inputs, steps: Vec::new(), verdict: Verdict::Finished, branches: Vec::new(), flip_step: None },
    };
    if let Err(Stop::Verdict(v)) = m.block(program.body()) {
        m.trace.verdict = v;
    }
    Ok(m.trace)
}

/// Runs the (loop-free) program natively on `input`.
pub fn execute(program: &SsaProgram, input: &Inputs, width: Width) -> Result<Trace, TraceError> {
    run(program, input, width, &BTreeMap::new(), None)
}

/// Re-runs `input` replaying the branch decisions of `old_trace` up to the
/// occurrence of `flip_br`'s conditional, where `flip_br` is taken whatever
/// the predicate says; later conditionals are decided natively.
pub fn execute_hijacked(
    program: &SsaProgram,
    input: &Inputs,
    width: Width,
    old_trace: &Trace,
    flip_br: &Branch,
) -> Result<Trace, TraceError> {
    let at = old_trace
        .branches
        .iter()
        .position(|b| b.cond == flip_br.cond)
        .ok_or_else(|| TraceError::FlipNotInTrace(flip_br.clone()))?;
    let mut forced: BTreeMap<StmtId, bool> = old_trace.branches[..at].iter().map(|b| (b.cond.clone(), b.taken)).collect();
    forced.insert(flip_br.cond.clone(), flip_br.taken);
    run(program, input, width, &forced, Some(&flip_br.cond))
}

/// First-covering trace of every branch seen so far in a session.
#[derive(Debug, Clone, Default)]
pub struct VisitedBranches {
    map: BTreeMap<Branch, Arc<Trace>>,
}

impl VisitedBranches {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, b: &Branch) -> Option<&Arc<Trace>> {
        self.map.get(b)
    }

    pub fn contains(&self, b: &Branch) -> bool {
        self.map.contains_key(b)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn branches(&self) -> impl Iterator<Item = &Branch> {
        self.map.keys()
    }

    /// Records every branch of `trace` not seen before; returns those.
    pub fn record(&mut self, trace: &Arc<Trace>) -> Vec<Branch> {
        let mut fresh = Vec::new();
        for b in &trace.branches {
            if !self.map.contains_key(b) {
                self.map.insert(b.clone(), trace.clone());
                fresh.push(b.clone());
            }
        }
        fresh
    }
}

/// One trace-generation step of the on-demand loop. Without `flip_br` the
/// program runs natively; otherwise the trace that first covered the
/// alternative of `flip_br` is replayed and hijacked to take `flip_br`.
pub fn trace_generator(
    input: &Inputs,
    visited: &mut VisitedBranches,
    flip_br: Option<&Branch>,
    program: &SsaProgram,
    width: Width,
) -> Result<Arc<Trace>, TraceError> {
    let trace = match flip_br {
        None => execute(program, input, width)?,
        Some(b) => {
            let old = visited.get(&b.alternative()).ok_or_else(|| TraceError::NoSourceTrace(b.alternative()))?.clone();
            execute_hijacked(program, input, width, &old, b)?
        }
    };
    let trace = Arc::new(trace);
    visited.record(&trace);
    Ok(trace)
}

/// Statement that control reaches first when `b` is taken: the head of the
/// arm, else the first φ of the join, else whatever follows the conditional.
pub fn branch_target(program: &SsaProgram, b: &Branch) -> Option<StmtId> {
    fn walk(nodes: &[SsaNode], follow: Option<&StmtId>, b: &Branch) -> Option<Option<StmtId>> {
        for (i, n) in nodes.iter().enumerate() {
            let next = nodes.get(i + 1).map(|n| n.id()).or(follow);
            match n {
                SsaNode::Cond { id, then_branch, else_branch, phis, .. } => {
                    let join = phis.first().map(|p| &p.id).or(next);
                    let arm = if b.taken { then_branch } else { else_branch };
                    if id == &b.cond {
                        return Some(arm.first().map(|s| s.id().clone()).or_else(|| join.cloned()));
                    }
                    for arm in [then_branch, else_branch] {
                        if let Some(r) = walk(arm, join, b) {
                            return Some(r);
                        }
                    }
                }
                SsaNode::Loop { body, id, .. } => {
                    if let Some(r) = walk(body, Some(id), b) {
                        return Some(r);
                    }
                }
                _ => {}
            }
        }
        None
    }
    walk(program.body(), None, b).flatten()
}

/// Paper-style rendering of a branch as `(conditional,target)`.
pub fn describe_branch(program: &SsaProgram, b: &Branch) -> String {
    match branch_target(program, b) {
        Some(t) => format!("({},{})", b.cond, t),
        None => format!("({},exit)", b.cond),
    }
}
