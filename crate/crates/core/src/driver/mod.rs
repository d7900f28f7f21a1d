//! The on-demand debugging loop, the all-paths baseline, and fault reports.

mod report;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::arith::{Inputs, Width};
use crate::encoder::{
    encode_all_paths, formula_generator, Clause, ClauseId, ClauseKind, ConcretizePolicy, EncodeError, EncodeOptions, Hardness, Origin,
    TraceFormula,
};
use crate::lang::interp::{self, InputError, Outcome};
use crate::lang::{build_cfg, Program};
use crate::logic::{Formula, Term};
use crate::solver::{enumerate_comss, Budget, CoMss, MaxSatInstance, Mode, SolverError};
use crate::ssa::{guard_name, to_ssa, unroll_loops, FlatKind, SsaError, SsaProgram, StmtId, StmtKey, DEFAULT_UNROLL};
use crate::tracer::{trace_generator, Branch, Trace, TraceError, VisitedBranches};
use crate::weights::{to_weights, SuspiciousnessMap};

pub use report::{fault_rank, merge_reports, FaultReport, ReportEntry, ReportStmt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Whole program, all paths, one solver call.
    Ba,
    /// On-demand formula computation.
    Ofc,
}

/// Strategy plus whether clauses are weighted by suspiciousness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RunMode {
    pub strategy: Strategy,
    pub weighted: bool,
}

impl RunMode {
    pub const ALL: [RunMode; 4] = [
        RunMode { strategy: Strategy::Ba, weighted: false },
        RunMode { strategy: Strategy::Ba, weighted: true },
        RunMode { strategy: Strategy::Ofc, weighted: false },
        RunMode { strategy: Strategy::Ofc, weighted: true },
    ];

    pub fn solver_mode(self) -> Mode {
        if self.weighted {
            Mode::Weighted
        } else {
            Mode::Plain
        }
    }
}

impl fmt::Display for RunMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.strategy {
            Strategy::Ba => "ba",
            Strategy::Ofc => "ofc",
        };
        write!(f, "{s}{}", if self.weighted { "+cw" } else { "" })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown mode `{0}` (expected ba, ba+cw, ofc or ofc+cw)")]
pub struct ModeParseError(pub String);

impl FromStr for RunMode {
    type Err = ModeParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RunMode::ALL.into_iter().find(|m| m.to_string() == s).ok_or_else(|| ModeParseError(s.to_string()))
    }
}

impl Serialize for RunMode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for RunMode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bounds {
    pub width: Width,
    pub unroll: u32,
    pub max_comss: usize,
    pub max_iters: usize,
    /// Largest all-paths formula the baseline will build.
    pub ba_cap: usize,
    /// Wall-clock limit for one session.
    pub timeout: Option<Duration>,
    pub concretize: Option<ConcretizePolicy>,
    /// Also expand branches that a CoMSS's witness model follows (see
    /// [`DebugSession::run_ofc`]).
    pub expand_witness: bool,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            width: Width::W32,
            unroll: DEFAULT_UNROLL,
            max_comss: 5,
            max_iters: 64,
            ba_cap: 10_000,
            timeout: None,
            concretize: None,
            expand_witness: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DriverError {
    #[error(transparent)]
    Ssa(#[from] SsaError),
    #[error(transparent)]
    Input(#[from] InputError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("the input does not violate the assertion (outcome: {0:?})")]
    NotFailing(Outcome),
    #[error("the failing run needs more than {0} loop iterations; raise the unroll bound")]
    UnrollTooSmall(u32),
    #[error("clause weighting needs suspiciousness values")]
    MissingWeights,
    #[error("the program has no assertion")]
    NoAssertion,
}

/// What one OFC iteration did.
#[derive(Debug, Clone)]
pub struct Iteration {
    pub trace: Option<Arc<Trace>>,
    pub new_clauses: Vec<ClauseId>,
    pub comss: Vec<CoMss>,
    pub complete: bool,
    /// Branch to take in the next iteration, if any.
    pub flip: Option<Branch>,
    pub soft_clauses: usize,
    pub solve_time: Duration,
    /// The trace added no clauses, so the previous CoMSSs were reused
    /// instead of solving the same formula again.
    pub reused: bool,
}

/// State of one debugging run for a single failing input.
pub struct DebugSession {
    program: Arc<Program>,
    ssa: SsaProgram,
    input: Inputs,
    mode: RunMode,
    bounds: Bounds,
    susp: Option<SuspiciousnessMap>,
    tf: TraceFormula,
    visited: VisitedBranches,
    flip_br: Option<Branch>,
    history: Vec<Iteration>,
}

impl DebugSession {
    /// Prepares a session; `program` must carry the assertion that `input`
    /// violates.
    pub fn new(
        program: &Program,
        input: Inputs,
        mode: RunMode,
        bounds: Bounds,
        susp: Option<SuspiciousnessMap>,
    ) -> Result<DebugSession, DriverError> {
        if mode.weighted && susp.is_none() {
            return Err(DriverError::MissingWeights);
        }
        if program.assertion().is_none() {
            return Err(DriverError::NoAssertion);
        }
        let run = interp::run(program, &input, bounds.width, u64::from(bounds.unroll))?;
        match run.outcome {
            Outcome::Violated => {}
            Outcome::Diverged(_) => return Err(DriverError::UnrollTooSmall(bounds.unroll)),
            o => return Err(DriverError::NotFailing(o)),
        }
        let program = Arc::new(program.clone());
        let ssa = unroll_loops(&to_ssa(&build_cfg(program.clone()))?, bounds.unroll)?;
        Ok(DebugSession {
            program,
            ssa,
            input,
            mode,
            bounds,
            susp,
            tf: TraceFormula::new(),
            visited: VisitedBranches::new(),
            flip_br: None,
            history: Vec::new(),
        })
    }

    pub fn ssa(&self) -> &SsaProgram {
        &self.ssa
    }

    pub fn program(&self) -> &Arc<Program> {
        &self.program
    }

    pub fn formula(&self) -> &TraceFormula {
        &self.tf
    }

    pub fn visited(&self) -> &VisitedBranches {
        &self.visited
    }

    pub fn history(&self) -> &[Iteration] {
        &self.history
    }

    pub fn mode(&self) -> RunMode {
        self.mode
    }

    fn encode_options(&self) -> EncodeOptions {
        EncodeOptions { width: self.bounds.width, concretize: self.bounds.concretize }
    }

    /// Input equalities and the assertion as hard clauses, numbered after
    /// the trace formula so its clause ids stay stable.
    fn side_clauses(&self) -> Vec<Clause> {
        let mut id = self.tf.next_id();
        let mut out = Vec::new();
        let mut push = |kind, constraint, origin| {
            out.push(Clause { id, kind, constraint, origin, hardness: Hardness::Hard, weight: None, concretized: false });
            id += 1;
        };
        for (name, v) in self.program.params.iter().zip(self.ssa.params()) {
            let eq = Formula::eq(Term::Var(v.name()), Term::Int(self.input[name]));
            push(ClauseKind::Input, eq, Origin::Input);
        }
        if let Some(FlatKind::Assert { pred }) = self.ssa.assertion().map(|s| &s.kind) {
            push(ClauseKind::Assert, Formula::from_pred(pred, &mut |v| v.name()), Origin::Assertion);
        }
        out
    }

    /// Current MAX-SAT instance: trace formula, inputs and assertion.
    pub fn instance(&self) -> MaxSatInstance {
        let mut clauses = self.side_clauses();
        let mut tf: Vec<Clause> = self.tf.clauses().to_vec();
        if let (true, Some(s)) = (self.mode.weighted, &self.susp) {
            to_weights(s, &mut tf);
        }
        clauses.splice(0..0, tf);
        MaxSatInstance::new(self.bounds.width, clauses)
    }

    fn solve(&self, deadline: Option<Instant>) -> Result<(Vec<CoMss>, bool, Duration, usize), DriverError> {
        let inst = self.instance();
        let soft = inst.soft().count();
        let start = Instant::now();
        let e = enumerate_comss(&inst, self.bounds.max_comss, self.mode.solver_mode(), &Budget { deadline, conflicts: None })?;
        Ok((e.comss, e.complete, start.elapsed(), soft))
    }

    /// First conditional (in CoMSS order, then clause order) that appears in
    /// a CoMSS and still has an unvisited branch; returns that branch.
    fn expansion_target(&self, comss: &[CoMss]) -> Option<Branch> {
        for m in comss {
            for id in &m.clauses {
                let Some(c) = self.tf.get(*id) else { continue };
                if c.kind != ClauseKind::Guard {
                    continue;
                }
                let cond = c.stmt().expect("guard clauses come from statements").clone();
                let (t, f) = (Branch::new(cond.clone(), true), Branch::new(cond, false));
                match (self.visited.contains(&t), self.visited.contains(&f)) {
                    (true, false) => return Some(f),
                    (false, true) => return Some(t),
                    _ => {}
                }
            }
        }
        None
    }

    /// Extension beyond the guard-clause rule: a CoMSS can also change the
    /// outcome of a conditional indirectly, through the data its guard
    /// reads, and then lean on unconstrained variables of a branch no trace
    /// has taken. Returns the first unvisited branch that the witness model
    /// of some CoMSS follows, looking only at conditionals on the witness's
    /// own path.
    fn witness_target(&self, comss: &[CoMss]) -> Option<Branch> {
        for m in comss {
            let Some(w) = &m.witness else { continue };
            let taken = |c: &StmtId| w.bools.get(&guard_name(c)).copied();
            for c in self.tf.clauses() {
                if c.kind != ClauseKind::Guard {
                    continue;
                }
                let cond = c.stmt().expect("guard clauses come from statements");
                let Some(stmt) = self.ssa.get(cond) else { continue };
                if !stmt.path.iter().all(|(p, pol)| taken(p) == Some(*pol)) {
                    continue;
                }
                let Some(value) = taken(cond) else { continue };
                let b = Branch::new(cond.clone(), value);
                if !self.visited.contains(&b) {
                    return Some(b);
                }
            }
        }
        None
    }

    /// Runs the configured strategy.
    pub fn run(&mut self) -> Result<FaultReport, DriverError> {
        match self.mode.strategy {
            Strategy::Ofc => self.run_ofc(),
            Strategy::Ba => self.run_ba(),
        }
    }

    /// On-demand loop: trace, encode the new statements, enumerate CoMSSs,
    /// and go around again while some CoMSS blames a conditional with a
    /// branch no trace has taken yet. With `expand_witness` the loop also
    /// continues while a CoMSS's witness model runs into such a branch;
    /// without it, a CoMSS may rely on variables of unexplored code being
    /// unconstrained and the result can differ from the all-paths baseline.
    pub fn run_ofc(&mut self) -> Result<FaultReport, DriverError> {
        let start = Instant::now();
        let deadline = self.bounds.timeout.map(|t| start + t);
        let opts = self.encode_options();
        let mut converged = false;
        let mut notes = Vec::new();
        while self.history.len() < self.bounds.max_iters {
            let trace = trace_generator(&self.input, &mut self.visited, self.flip_br.as_ref(), &self.ssa, self.bounds.width)?;
            let new_clauses = formula_generator(&trace, &mut self.tf, &self.ssa, &opts)?;
            self.flip_br = None;
            let previous = self.history.last().filter(|h| new_clauses.is_empty() && h.complete);
            let reused = previous.is_some();
            let (comss, complete, solve_time, soft) = match previous {
                Some(h) => (h.comss.clone(), true, Duration::ZERO, h.soft_clauses),
                None => self.solve(deadline)?,
            };
            let flip = match complete {
                true => self.expansion_target(&comss).or_else(|| {
                    self.bounds.expand_witness.then(|| self.witness_target(&comss)).flatten()
                }),
                false => None,
            };
            let done = flip.is_none();
            self.flip_br = flip.clone();
            self.history.push(Iteration { trace: Some(trace), new_clauses, comss, complete, flip, soft_clauses: soft, solve_time, reused });
            if !complete {
                notes.push("solver budget exhausted; CoMSS list may be partial".to_string());
                break;
            }
            if done {
                converged = true;
                break;
            }
        }
        if !converged && self.history.last().is_some_and(|h| h.complete) {
            notes.push(format!("iteration cap of {} reached before the formula stopped growing", self.bounds.max_iters));
        }
        Ok(self.report(converged, start.elapsed(), notes))
    }

    /// Baseline: encode every path of the unrolled program and solve once.
    pub fn run_ba(&mut self) -> Result<FaultReport, DriverError> {
        let start = Instant::now();
        let deadline = self.bounds.timeout.map(|t| start + t);
        self.tf = encode_all_paths(&self.ssa, &self.encode_options(), self.bounds.ba_cap)?;
        let new_clauses = self.tf.clauses().iter().map(|c| c.id).collect();
        let (comss, complete, solve_time, soft) = self.solve(deadline)?;
        self.history.push(Iteration { trace: None, new_clauses, comss, complete, flip: None, soft_clauses: soft, solve_time, reused: false });
        let notes = if complete { Vec::new() } else { vec!["solver budget exhausted; CoMSS list may be partial".to_string()] };
        Ok(self.report(complete, start.elapsed(), notes))
    }

    /// Distinct paths covered by the traces of this session.
    pub fn paths_explored(&self) -> usize {
        if self.mode.strategy == Strategy::Ba {
            return usize::try_from(self.ssa.path_count()).unwrap_or(usize::MAX);
        }
        let paths: BTreeSet<Vec<Branch>> =
            self.history.iter().filter_map(|h| h.trace.as_ref()).map(|t| t.branches.clone()).collect();
        paths.len()
    }

    fn report(&self, converged: bool, elapsed: Duration, notes: Vec<String>) -> FaultReport {
        let last = self.history.last();
        let comss = last.map(|h| h.comss.as_slice()).unwrap_or_default();
        let entries = comss
            .iter()
            .enumerate()
            .map(|(i, m)| ReportEntry {
                rank: (i + 1) as f64,
                statements: m
                    .clauses
                    .iter()
                    .filter_map(|id| self.tf.get(*id))
                    .map(|c| {
                        let id = c.stmt().expect("soft clauses come from statements");
                        let line = match id.key {
                            StmtKey::Line(l) | StmtKey::Trunc(l) => l,
                            StmtKey::Phi(_) => self.ssa.get(id).map(|s| s.source).unwrap_or_default(),
                        };
                        ReportStmt {
                            clause: c.id,
                            stmt: id.to_string(),
                            line,
                            source: self.ssa.source_text(id),
                            constraint: c.constraint.to_string(),
                            concretized: c.concretized,
                        }
                    })
                    .collect(),
            })
            .collect();
        FaultReport {
            mode: self.mode,
            ordered: self.mode.weighted,
            entries,
            iterations: self.history.len(),
            converged,
            complete: self.history.iter().all(|h| h.complete),
            paths_explored: self.paths_explored(),
            paths_total: self.ssa.path_count().to_string(),
            statement_clauses: self.tf.len(),
            soft_clauses: last.map_or(0, |h| h.soft_clauses),
            total_ms: elapsed.as_secs_f64() * 1e3,
            iteration_ms: self.history.iter().map(|h| h.solve_time.as_secs_f64() * 1e3).collect(),
            notes,
        }
    }
}

/// Convenience wrapper: build a session and run it.
pub fn debug(
    program: &Program,
    input: Inputs,
    mode: RunMode,
    bounds: Bounds,
    susp: Option<SuspiciousnessMap>,
) -> Result<FaultReport, DriverError> {
    DebugSession::new(program, input, mode, bounds, susp)?.run()
}

#[cfg(test)]
mod tests;
