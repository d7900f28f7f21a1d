use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use super::{FlatKind, FlatStmt, LoopPhi, PhiStmt, SsaNode, SsaProgram, SsaVar, StmtId, StmtKey};
use crate::lang::{Cfg, Expr, Label, Pred, Program, Stmt, StmtKind};

pub const DEFAULT_UNROLL: u32 = 8;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SsaError {
    #[error("unroll bound must be at least 1")]
    ZeroBound,
    #[error("statement {0}: variable `{1}` has no reaching definition")]
    Undefined(StmtId, String),
}

/// Structured statement with its SSA identity, the common input of the
/// direct and the unrolled translation.
struct UStmt {
    id: StmtId,
    source: Label,
    kind: UKind,
}

enum UKind {
    Assign { lhs: String, rhs: Expr },
    If { cond: Pred, then_branch: Vec<UStmt>, else_branch: Vec<UStmt> },
    While { cond: Pred, body: Vec<UStmt> },
    Assert(Pred),
    Truncate(Pred),
}

fn lift(stmts: &[Stmt], ctx: &[u32], bound: Option<u32>) -> Vec<UStmt> {
    stmts.iter().map(|s| lift_one(s, ctx, bound)).collect()
}

fn lift_one(s: &Stmt, ctx: &[u32], bound: Option<u32>) -> UStmt {
    let id = StmtId { key: StmtKey::Line(s.label), iters: ctx.to_vec() };
    let kind = match &s.kind {
        StmtKind::Assign { lhs, rhs } => UKind::Assign { lhs: lhs.clone(), rhs: rhs.clone() },
        StmtKind::If { cond, then_branch, else_branch } => UKind::If {
            cond: cond.clone(),
            then_branch: lift(then_branch, ctx, bound),
            else_branch: lift(else_branch, ctx, bound),
        },
        StmtKind::While { cond, body } => match bound {
            None => UKind::While { cond: cond.clone(), body: lift(body, ctx, bound) },
            Some(k) => return replica(s.label, cond, body, ctx, 1, k),
        },
        StmtKind::Assert(p) => UKind::Assert(p.clone()),
    };
    UStmt { id, source: s.label, kind }
}

/// `while (c) B` unrolled from iteration `i`:
/// `if (c) { B; <iteration i+1> }`, ending in a truncation check.
fn replica(label: Label, cond: &Pred, body: &[Stmt], ctx: &[u32], i: u32, k: u32) -> UStmt {
    let mut inner_ctx = ctx.to_vec();
    inner_ctx.push(i);
    let mut then_branch = lift(body, &inner_ctx, Some(k));
    if i < k {
        then_branch.push(replica(label, cond, body, ctx, i + 1, k));
    } else {
        let mut trunc_ctx = ctx.to_vec();
        trunc_ctx.push(k + 1);
        then_branch.push(UStmt {
            id: StmtId { key: StmtKey::Trunc(label), iters: trunc_ctx },
            source: label,
            kind: UKind::Truncate(cond.clone()),
        });
    }
    UStmt {
        id: StmtId { key: StmtKey::Line(label), iters: inner_ctx },
        source: label,
        kind: UKind::If { cond: cond.clone(), then_branch, else_branch: Vec::new() },
    }
}

fn assigned_vars(stmts: &[UStmt], out: &mut Vec<String>) {
    for s in stmts {
        match &s.kind {
            UKind::Assign { lhs, .. } => {
                if !out.contains(lhs) {
                    out.push(lhs.clone());
                }
            }
            UKind::If { then_branch, else_branch, .. } => {
                assigned_vars(then_branch, out);
                assigned_vars(else_branch, out);
            }
            UKind::While { body, .. } => assigned_vars(body, out),
            UKind::Assert(_) | UKind::Truncate(_) => {}
        }
    }
}

struct Renamer {
    counters: HashMap<String, u32>,
    phi_counter: u32,
    env: BTreeMap<String, SsaVar>,
    flat: Vec<FlatStmt>,
    path: Vec<(StmtId, bool)>,
}

impl Renamer {
    fn fresh(&mut self, base: &str) -> SsaVar {
        let c = self.counters.entry(base.to_string()).or_insert(0);
        *c += 1;
        SsaVar::new(base, *c)
    }

    /// φ numbers are unique program-wide, so φ ids carry no replica path.
    fn next_phi(&mut self) -> StmtId {
        self.phi_counter += 1;
        StmtId::phi(self.phi_counter)
    }

    fn use_var(&self, id: &StmtId, v: &String) -> Result<SsaVar, SsaError> {
        self.env.get(v).cloned().ok_or_else(|| SsaError::Undefined(id.clone(), v.clone()))
    }

    fn expr(&self, id: &StmtId, e: &Expr) -> Result<Expr<SsaVar>, SsaError> {
        e.try_map_vars(&mut |v| self.use_var(id, v))
    }

    fn pred(&self, id: &StmtId, p: &Pred) -> Result<Pred<SsaVar>, SsaError> {
        p.try_map_vars(&mut |v| self.use_var(id, v))
    }

    fn push(&mut self, id: &StmtId, source: Label, kind: FlatKind) {
        self.flat.push(FlatStmt { id: id.clone(), source, kind, path: self.path.clone() });
    }

    fn block(&mut self, stmts: &[UStmt]) -> Result<Vec<SsaNode>, SsaError> {
        stmts.iter().map(|s| self.stmt(s)).collect()
    }

    fn stmt(&mut self, s: &UStmt) -> Result<SsaNode, SsaError> {
        let id = &s.id;
        Ok(match &s.kind {
            UKind::Assign { lhs, rhs } => {
                let rhs = self.expr(id, rhs)?;
                let lhs_v = self.fresh(lhs);
                self.env.insert(lhs.clone(), lhs_v.clone());
                self.push(id, s.source, FlatKind::Assign { lhs: lhs_v.clone(), rhs: rhs.clone() });
                SsaNode::Assign { id: id.clone(), lhs: lhs_v, rhs }
            }
            UKind::If { cond, then_branch, else_branch } => {
                let pred = self.pred(id, cond)?;
                self.push(id, s.source, FlatKind::Cond { pred: pred.clone() });
                let before = self.env.clone();

                self.path.push((id.clone(), true));
                let t = self.block(then_branch)?;
                self.path.pop();
                let env_t = std::mem::replace(&mut self.env, before.clone());

                self.path.push((id.clone(), false));
                let e = self.block(else_branch)?;
                self.path.pop();
                let env_f = std::mem::replace(&mut self.env, before.clone());

                let mut defined = Vec::new();
                assigned_vars(then_branch, &mut defined);
                assigned_vars(else_branch, &mut defined);
                let mut phis = Vec::new();
                for v in defined {
                    let (Some(rt), Some(rf)) = (env_t.get(&v), env_f.get(&v)) else {
                        // not defined along one arm: dead after the join
                        continue;
                    };
                    if rt == rf {
                        continue;
                    }
                    let (rt, rf) = (rt.clone(), rf.clone());
                    let phi_id = self.next_phi();
                    let lhs = self.fresh(&v);
                    let phi = PhiStmt { id: phi_id.clone(), lhs: lhs.clone(), conditional: id.clone(), rhs_true: rt, rhs_false: rf };
                    self.push(&phi_id, s.source, FlatKind::Phi(phi.clone()));
                    self.env.insert(v, lhs);
                    phis.push(phi);
                }
                SsaNode::Cond { id: id.clone(), pred, then_branch: t, else_branch: e, phis }
            }
            UKind::While { cond, body } => {
                let mut defined = Vec::new();
                assigned_vars(body, &mut defined);
                let mut header = Vec::new();
                for v in defined {
                    if let Some(entry) = self.env.get(&v).cloned() {
                        let phi_id = self.next_phi();
                        let lhs = self.fresh(&v);
                        self.env.insert(v.clone(), lhs.clone());
                        header.push((v, LoopPhi { id: phi_id, lhs, entry, back: SsaVar::new("", 0) }));
                    }
                }
                let pred = self.pred(id, cond)?;
                self.push(id, s.source, FlatKind::Loop { pred: pred.clone() });
                let at_header = self.env.clone();
                self.path.push((id.clone(), true));
                let body = self.block(body)?;
                self.path.pop();
                let at_latch = std::mem::replace(&mut self.env, at_header);
                let header: Vec<LoopPhi> = header
                    .into_iter()
                    .map(|(v, mut phi)| {
                        phi.back = at_latch[&v].clone();
                        phi
                    })
                    .collect();
                for phi in &header {
                    self.push(&phi.id, s.source, FlatKind::LoopPhi(phi.clone()));
                }
                SsaNode::Loop { id: id.clone(), header, pred, body }
            }
            UKind::Assert(p) => {
                let pred = self.pred(id, p)?;
                self.push(id, s.source, FlatKind::Assert { pred: pred.clone() });
                SsaNode::Assert { id: id.clone(), pred }
            }
            UKind::Truncate(p) => {
                let pred = self.pred(id, p)?;
                self.push(id, s.source, FlatKind::Truncate { pred: pred.clone() });
                SsaNode::Truncate { id: id.clone(), pred }
            }
        })
    }
}

fn rename(source: Arc<Program>, bound: Option<u32>) -> Result<SsaProgram, SsaError> {
    let stmts = lift(&source.body, &[], bound);
    let mut r = Renamer { counters: HashMap::new(), phi_counter: 0, env: BTreeMap::new(), flat: Vec::new(), path: Vec::new() };
    let params: Vec<SsaVar> = source
        .params
        .iter()
        .map(|p| {
            let v = r.fresh(p);
            r.env.insert(p.clone(), v.clone());
            v
        })
        .collect();
    let body = r.block(&stmts)?;
    let index = r.flat.iter().enumerate().map(|(i, s)| (s.id.clone(), i)).collect();
    Ok(SsaProgram {
        source,
        params,
        body,
        flat: r.flat,
        index,
        final_versions: r.env,
        unroll_bound: bound,
    })
}

/// Translates a program to SSA. Loops keep their header φs; use
/// [`unroll_loops`] to obtain the loop-free form the tracer and encoder need.
pub fn to_ssa(cfg: &Cfg) -> Result<SsaProgram, SsaError> {
    rename(cfg.program().clone(), None)
}

/// Replaces every loop by `bound` nested guarded replicas, each re-versioned,
/// followed by a truncation check on the loop condition. Loops nested in
/// loops are unrolled with the same bound per loop.
pub fn unroll_loops(ssa: &SsaProgram, bound: u32) -> Result<SsaProgram, SsaError> {
    if bound == 0 {
        return Err(SsaError::ZeroBound);
    }
    rename(ssa.source.clone(), Some(bound))
}
