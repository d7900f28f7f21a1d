//! Static single assignment form.
//!
//! MiniImp is structured, so SSA is built by a single renaming pass: every
//! assignment gets a fresh version and each `if` join receives one binary φ
//! per variable defined in either arm. Loops are kept with header φs by
//! [`to_ssa`] and turned into nested guarded replicas by [`unroll_loops`].

mod build;
mod dump;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

use crate::lang::{Expr, Label, Pred, Program};

pub use build::{to_ssa, unroll_loops, SsaError, DEFAULT_UNROLL};
pub use dump::dump;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SsaVar {
    pub base: String,
    pub version: u32,
}

impl SsaVar {
    pub fn new(base: impl Into<String>, version: u32) -> Self {
        SsaVar { base: base.into(), version }
    }

    /// Solver-level variable name, e.g. `a_3`.
    pub fn name(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for SsaVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.base, self.version)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StmtKey {
    Line(Label),
    Phi(u32),
    /// Loop-exit check after the last unrolled replica of the loop at this line.
    Trunc(Label),
}

/// Statement identity in the (possibly unrolled) SSA program: the source
/// statement plus the replica index of every enclosing loop.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StmtId {
    pub key: StmtKey,
    pub iters: Vec<u32>,
}

impl StmtId {
    pub fn line(label: Label) -> Self {
        StmtId { key: StmtKey::Line(label), iters: Vec::new() }
    }

    pub fn phi(n: u32) -> Self {
        StmtId { key: StmtKey::Phi(n), iters: Vec::new() }
    }

    pub fn is_phi(&self) -> bool {
        matches!(self.key, StmtKey::Phi(_))
    }
}

impl fmt::Display for StmtId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.key {
            StmtKey::Line(l) => write!(f, "{l}")?,
            StmtKey::Phi(n) => return write!(f, "phi{n}"),
            StmtKey::Trunc(l) => write!(f, "trunc{l}")?,
        }
        if !self.iters.is_empty() {
            let parts: Vec<String> = self.iters.iter().map(|i| i.to_string()).collect();
            write!(f, "#{}", parts.join("."))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed statement id `{0}`")]
pub struct StmtIdError(pub String);

impl std::str::FromStr for StmtId {
    type Err = StmtIdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || StmtIdError(s.to_string());
        let (head, iters) = match s.split_once('#') {
            Some((h, rest)) => {
                let iters = rest.split('.').map(|p| p.parse::<u32>().map_err(|_| bad())).collect::<Result<Vec<_>, _>>()?;
                (h, iters)
            }
            None => (s, Vec::new()),
        };
        let num = |t: &str| t.parse::<u32>().map_err(|_| bad());
        let key = if let Some(n) = head.strip_prefix("phi") {
            if !iters.is_empty() {
                return Err(bad());
            }
            StmtKey::Phi(num(n)?)
        } else if let Some(n) = head.strip_prefix("trunc") {
            StmtKey::Trunc(num(n)?)
        } else {
            StmtKey::Line(num(head)?)
        };
        Ok(StmtId { key, iters })
    }
}

impl Serialize for StmtId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Binary φ at the join point of its governing conditional.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PhiStmt {
    pub id: StmtId,
    pub lhs: SsaVar,
    pub conditional: StmtId,
    pub rhs_true: SsaVar,
    pub rhs_false: SsaVar,
}

/// Loop-header φ of a not-yet-unrolled loop.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LoopPhi {
    pub id: StmtId,
    pub lhs: SsaVar,
    pub entry: SsaVar,
    pub back: SsaVar,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SsaNode {
    Assign {
        id: StmtId,
        lhs: SsaVar,
        rhs: Expr<SsaVar>,
    },
    Cond {
        id: StmtId,
        pred: Pred<SsaVar>,
        then_branch: Vec<SsaNode>,
        else_branch: Vec<SsaNode>,
        phis: Vec<PhiStmt>,
    },
    Loop {
        id: StmtId,
        header: Vec<LoopPhi>,
        pred: Pred<SsaVar>,
        body: Vec<SsaNode>,
    },
    Assert {
        id: StmtId,
        pred: Pred<SsaVar>,
    },
    /// Reached only if the loop would run past the unroll bound. `pred` is
    /// the loop condition over the state after the last replica.
    Truncate {
        id: StmtId,
        pred: Pred<SsaVar>,
    },
}

impl SsaNode {
    pub fn id(&self) -> &StmtId {
        match self {
            SsaNode::Assign { id, .. }
            | SsaNode::Cond { id, .. }
            | SsaNode::Loop { id, .. }
            | SsaNode::Assert { id, .. }
            | SsaNode::Truncate { id, .. } => id,
        }
    }
}

/// Per-statement record in program order, used by the encoder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatStmt {
    pub id: StmtId,
    /// Source line the statement comes from (a φ maps to its conditional).
    pub source: Label,
    pub kind: FlatKind,
    /// Enclosing conditionals with the polarity of the arm containing this
    /// statement, outermost first.
    pub path: Vec<(StmtId, bool)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FlatKind {
    Assign { lhs: SsaVar, rhs: Expr<SsaVar> },
    Cond { pred: Pred<SsaVar> },
    Phi(PhiStmt),
    Loop { pred: Pred<SsaVar> },
    LoopPhi(LoopPhi),
    Assert { pred: Pred<SsaVar> },
    Truncate { pred: Pred<SsaVar> },
}

/// Guard variable name for a conditional occurrence, e.g. `guard[5]`.
pub fn guard_name(cond: &StmtId) -> String {
    format!("guard[{cond}]")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SsaProgram {
    pub(crate) source: Arc<Program>,
    pub(crate) params: Vec<SsaVar>,
    pub(crate) body: Vec<SsaNode>,
    pub(crate) flat: Vec<FlatStmt>,
    pub(crate) index: BTreeMap<StmtId, usize>,
    pub(crate) final_versions: BTreeMap<String, SsaVar>,
    pub(crate) unroll_bound: Option<u32>,
}

impl SsaProgram {
    pub fn source(&self) -> &Arc<Program> {
        &self.source
    }

    pub fn params(&self) -> &[SsaVar] {
        &self.params
    }

    pub fn body(&self) -> &[SsaNode] {
        &self.body
    }

    /// Statements in program order (conditional, then-arm, else-arm, φs).
    pub fn statements(&self) -> &[FlatStmt] {
        &self.flat
    }

    pub fn get(&self, id: &StmtId) -> Option<&FlatStmt> {
        self.index.get(id).map(|&i| &self.flat[i])
    }

    pub fn phis(&self) -> impl Iterator<Item = &PhiStmt> {
        self.flat.iter().filter_map(|s| match &s.kind {
            FlatKind::Phi(p) => Some(p),
            _ => None,
        })
    }

    /// Version of each source variable live at the end of the program.
    pub fn final_versions(&self) -> &BTreeMap<String, SsaVar> {
        &self.final_versions
    }

    /// Bound used by [`unroll_loops`], or `None` for the direct translation.
    pub fn unroll_bound(&self) -> Option<u32> {
        self.unroll_bound
    }

    pub fn has_loops(&self) -> bool {
        self.flat.iter().any(|s| matches!(s.kind, FlatKind::Loop { .. }))
    }

    pub fn has_truncation_points(&self) -> bool {
        self.flat.iter().any(|s| matches!(s.kind, FlatKind::Truncate { .. }))
    }

    pub fn assertion(&self) -> Option<&FlatStmt> {
        self.flat.iter().find(|s| matches!(s.kind, FlatKind::Assert { .. }))
    }

    /// Every SSA variable with the number of statements defining it.
    pub fn definition_counts(&self) -> BTreeMap<SsaVar, usize> {
        let mut out: BTreeMap<SsaVar, usize> = BTreeMap::new();
        for p in &self.params {
            *out.entry(p.clone()).or_default() += 1;
        }
        for s in &self.flat {
            let def = match &s.kind {
                FlatKind::Assign { lhs, .. } => lhs,
                FlatKind::Phi(p) => &p.lhs,
                FlatKind::LoopPhi(p) => &p.lhs,
                _ => continue,
            };
            *out.entry(def.clone()).or_default() += 1;
        }
        out
    }

    /// Source text of the statement an id refers to.
    pub fn source_text(&self, id: &StmtId) -> String {
        match &id.key {
            StmtKey::Line(l) => self.source.find(*l).map(|s| s.header()).unwrap_or_default(),
            StmtKey::Phi(_) => match self.get(id).map(|s| &s.kind) {
                Some(FlatKind::Phi(p)) => format!("{} = {}({}, {})", p.lhs, id, p.rhs_true, p.rhs_false),
                _ => String::new(),
            },
            StmtKey::Trunc(l) => format!("unroll bound reached for loop at {l}"),
        }
    }

    /// Number of complete paths through the loop-free program.
    pub fn path_count(&self) -> u128 {
        fn block(nodes: &[SsaNode]) -> u128 {
            nodes.iter().map(node).fold(1u128, |acc, n| acc.saturating_mul(n))
        }
        fn node(n: &SsaNode) -> u128 {
            match n {
                SsaNode::Cond { then_branch, else_branch, .. } => block(then_branch).saturating_add(block(else_branch)),
                SsaNode::Loop { body, .. } => block(body).saturating_add(1),
                _ => 1,
            }
        }
        block(&self.body)
    }
}

#[cfg(test)]
mod tests;
