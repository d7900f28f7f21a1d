//! Trace formulas: one clause per encoded statement, built incrementally
//! from traces or for all paths of an unrolled program at once.

mod concretize;
mod text;

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::arith::Width;
use crate::lang::Label;
use crate::logic::{formula_bits, Formula, Term, VarWidths, MAX_TERM_BITS};
use crate::solver::Weight;
use crate::ssa::{guard_name, FlatKind, FlatStmt, SsaProgram, SsaVar, StmtId, StmtKey};
use crate::tracer::Trace;

pub use concretize::{concretize, ConcretizePolicy};
pub use text::{parse_clause_line, write_clause_line, TextError};

pub type ClauseId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ClauseKind {
    Guard,
    Phi,
    Assign,
    /// Unroll-bound marker: the loop does not run past its last replica.
    Trunc,
    Input,
    Assert,
}

impl ClauseKind {
    pub fn name(self) -> &'static str {
        match self {
            ClauseKind::Guard => "guard",
            ClauseKind::Phi => "phi",
            ClauseKind::Assign => "assign",
            ClauseKind::Trunc => "trunc",
            ClauseKind::Input => "input",
            ClauseKind::Assert => "assert",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Hardness {
    Hard,
    Soft,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Origin {
    Stmt(StmtId),
    Input,
    Assertion,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Stmt(id) => write!(f, "{id}"),
            Origin::Input => write!(f, "input"),
            Origin::Assertion => write!(f, "assert"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub id: ClauseId,
    pub kind: ClauseKind,
    pub constraint: Formula,
    pub origin: Origin,
    pub hardness: Hardness,
    /// Only meaningful for soft clauses; `None` means weight 1.
    pub weight: Option<Weight>,
    /// Some operands were replaced by values observed at run time.
    pub concretized: bool,
}

impl Clause {
    pub fn is_soft(&self) -> bool {
        self.hardness == Hardness::Soft
    }

    pub fn stmt(&self) -> Option<&StmtId> {
        match &self.origin {
            Origin::Stmt(id) => Some(id),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EncodeError {
    #[error("trace step {0} is not a statement of the program")]
    UnknownStatement(StmtId),
    #[error("program still contains loops; unroll it before encoding")]
    ContainsLoops,
    #[error("statement {stmt}: arithmetic needs {bits} bits, beyond what the solver supports, and no concrete values are available")]
    Unsupported { stmt: StmtId, bits: u32 },
    #[error("clause {clause}: no logged value for `{var}`")]
    MissingValue { clause: ClauseId, var: String },
    #[error("all-paths formula would need {clauses} clauses, above the cap of {cap}")]
    BlowUp { clauses: usize, cap: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EncodeOptions {
    pub width: Width,
    /// Replace selected operands by logged values when a trace provides them.
    pub concretize: Option<ConcretizePolicy>,
}

/// Conjunction of statement clauses, each remembering the statement that
/// produced it. The set of encoded statements is the formula's scope.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TraceFormula {
    clauses: Vec<Clause>,
    by_stmt: BTreeMap<StmtId, ClauseId>,
    next_id: ClauseId,
}

impl TraceFormula {
    pub fn new() -> Self {
        TraceFormula { clauses: Vec::new(), by_stmt: BTreeMap::new(), next_id: 1 }
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn clauses_mut(&mut self) -> &mut [Clause] {
        &mut self.clauses
    }

    pub fn get(&self, id: ClauseId) -> Option<&Clause> {
        self.clauses.iter().find(|c| c.id == id)
    }

    pub fn clause_origin(&self, id: ClauseId) -> Option<&StmtId> {
        self.get(id).and_then(|c| c.stmt())
    }

    pub fn clause_of(&self, stmt: &StmtId) -> Option<&Clause> {
        self.by_stmt.get(stmt).and_then(|&id| self.get(id))
    }

    /// Statements encoded so far.
    pub fn scope(&self) -> impl Iterator<Item = &StmtId> {
        self.by_stmt.keys()
    }

    pub fn contains(&self, stmt: &StmtId) -> bool {
        self.by_stmt.contains_key(stmt)
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    /// Next id that [`TraceFormula::push`] would hand out.
    pub fn next_id(&self) -> ClauseId {
        self.next_id.max(1)
    }

    pub fn push(&mut self, kind: ClauseKind, constraint: Formula, origin: Origin, hardness: Hardness) -> ClauseId {
        let id = self.next_id();
        self.next_id = id + 1;
        if let Origin::Stmt(s) = &origin {
            self.by_stmt.insert(s.clone(), id);
        }
        self.clauses.push(Clause { id, kind, constraint, origin, hardness, weight: None, concretized: false });
        id
    }

    /// One line per clause in the documented text format.
    pub fn dump(&self) -> String {
        self.clauses.iter().map(|c| write_clause_line(c) + "\n").collect()
    }
}

fn var(v: &SsaVar) -> Term {
    Term::Var(v.name())
}

fn guard(id: &StmtId) -> Formula {
    Formula::var(guard_name(id))
}

/// Clause for one SSA statement, or `None` for statements that are not
/// encoded here (the assertion is added by the solver stage).
pub fn statement_clause(s: &FlatStmt) -> Result<Option<(ClauseKind, Formula, Hardness)>, EncodeError> {
    let name = |v: &SsaVar| v.name();
    Ok(Some(match &s.kind {
        FlatKind::Cond { pred } => {
            (ClauseKind::Guard, Formula::iff(guard(&s.id), Formula::from_pred(pred, &mut { name })), Hardness::Soft)
        }
        FlatKind::Phi(p) => {
            let g = guard(&p.conditional);
            let f = Formula::or(vec![
                Formula::and(vec![g.clone(), Formula::eq(var(&p.lhs), var(&p.rhs_true))]),
                Formula::and(vec![Formula::not(g), Formula::eq(var(&p.lhs), var(&p.rhs_false))]),
            ]);
            (ClauseKind::Phi, f, Hardness::Hard)
        }
        FlatKind::Assign { lhs, rhs } => {
            (ClauseKind::Assign, Formula::eq(var(lhs), rhs.map_vars(&mut { name })), Hardness::Soft)
        }
        FlatKind::Truncate { pred } => {
            let mut parts: Vec<Formula> =
                s.path.iter().map(|(c, pol)| if *pol { guard(c) } else { Formula::not(guard(c)) }).collect();
            parts.push(Formula::from_pred(pred, &mut { name }));
            (ClauseKind::Trunc, Formula::not(Formula::and(parts)), Hardness::Hard)
        }
        FlatKind::Assert { .. } => return Ok(None),
        FlatKind::Loop { .. } | FlatKind::LoopPhi(_) => return Err(EncodeError::ContainsLoops),
    }))
}

fn check_width(id: &StmtId, f: &Formula, width: Width) -> Result<(), EncodeError> {
    let bits = formula_bits(f, &VarWidths::uniform(width));
    if bits > MAX_TERM_BITS {
        return Err(EncodeError::Unsupported { stmt: id.clone(), bits });
    }
    Ok(())
}

/// Extends `tf` with a clause for every statement of `trace` not yet in
/// scope and returns the ids of the new clauses. Statements already in
/// scope are skipped, so re-encoding a trace is a no-op.
pub fn formula_generator(
    trace: &Trace,
    tf: &mut TraceFormula,
    ssa: &SsaProgram,
    opts: &EncodeOptions,
) -> Result<Vec<ClauseId>, EncodeError> {
    let reliable_until = trace.flip_step.unwrap_or(trace.steps.len());
    let log = opts.concretize.map(|_| trace.reliable_state());
    let mut added = Vec::new();
    for (i, step) in trace.steps.iter().enumerate() {
        if tf.contains(&step.id) {
            continue;
        }
        let stmt = ssa.get(&step.id).ok_or_else(|| EncodeError::UnknownStatement(step.id.clone()))?;
        let Some((kind, f, hardness)) = statement_clause(stmt)? else { continue };
        let id = tf.push(kind, f, Origin::Stmt(step.id.clone()), hardness);
        added.push(id);
        let clause = tf.clauses.last_mut().expect("just pushed");
        if let (Some(policy), Some(log), true) = (opts.concretize, &log, i < reliable_until) {
            *clause = concretize(clause, log, policy)?;
        }
        check_width(&step.id, &clause.constraint, opts.width)?;
    }
    Ok(added)
}

/// All-paths encoding: one clause per statement of the unrolled program,
/// in program order. Fails once the clause count would exceed `cap`.
pub fn encode_all_paths(ssa: &SsaProgram, opts: &EncodeOptions, cap: usize) -> Result<TraceFormula, EncodeError> {
    let count = ssa.statements().iter().filter(|s| !matches!(s.kind, FlatKind::Assert { .. })).count();
    if count > cap {
        return Err(EncodeError::BlowUp { clauses: count, cap });
    }
    let mut tf = TraceFormula::new();
    for s in ssa.statements() {
        if let Some((kind, f, hardness)) = statement_clause(s)? {
            check_width(&s.id, &f, opts.width)?;
            tf.push(kind, f, Origin::Stmt(s.id.clone()), hardness);
        }
    }
    Ok(tf)
}

/// Source line a statement id belongs to (φs map to their conditional).
pub fn source_line(ssa: &SsaProgram, id: &StmtId) -> Option<Label> {
    match id.key {
        StmtKey::Line(l) | StmtKey::Trunc(l) => Some(l),
        StmtKey::Phi(_) => ssa.get(id).map(|s| s.source),
    }
}
