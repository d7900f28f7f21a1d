use std::collections::BTreeMap;

use super::{Clause, ClauseKind, EncodeError};
use crate::lang::{BinOp, CmpOp, Expr};
use crate::logic::{Formula, Term};
use crate::tracer::Value;

/// Which operands are replaced by the values a trace logged for them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConcretizePolicy {
    /// Right operand of every product of two non-constant terms, which keeps
    /// the formula linear.
    #[default]
    NonlinearProducts,
    /// Every variable on the right-hand side of an assignment.
    AllOperands,
}

fn has_var(t: &Term) -> bool {
    let mut found = false;
    t.for_each_var(&mut |_| found = true);
    found
}

fn value_of(t: &Term, log: &BTreeMap<String, Value>, clause: u32) -> Result<Term, EncodeError> {
    let mut missing = None;
    let lookup = |v: &String| match log.get(v) {
        Some(Value::Int(n)) => Some(*n as i128),
        _ => None,
    };
    t.for_each_var(&mut |v| {
        if missing.is_none() && !matches!(log.get(v), Some(Value::Int(_))) {
            missing = Some(v.clone());
        }
    });
    if let Some(var) = missing {
        return Err(EncodeError::MissingValue { clause, var });
    }
    let v = t.eval(&lookup).and_then(|v| i64::try_from(v).ok());
    // a logged run never produces values outside i64
    Ok(Expr::Int(v.expect("logged values evaluate in range")))
}

fn linearize(t: &Term, log: &BTreeMap<String, Value>, clause: u32, changed: &mut bool) -> Result<Term, EncodeError> {
    Ok(match t {
        Expr::Int(_) | Expr::Var(_) => t.clone(),
        Expr::Neg(e) => Expr::Neg(Box::new(linearize(e, log, clause, changed)?)),
        Expr::Bin(op, a, b) => {
            let a = linearize(a, log, clause, changed)?;
            let b = linearize(b, log, clause, changed)?;
            if *op == BinOp::Mul && has_var(&a) && has_var(&b) {
                *changed = true;
                Expr::bin(*op, a, value_of(&b, log, clause)?)
            } else {
                Expr::bin(*op, a, b)
            }
        }
    })
}

fn map_terms_fallible(
    f: &Formula,
    g: &mut impl FnMut(&Term) -> Result<Term, EncodeError>,
) -> Result<Formula, EncodeError> {
    let mut err = None;
    let out = f.map_terms(&mut |t| match g(t) {
        Ok(t) => t,
        Err(e) => {
            err.get_or_insert(e);
            t.clone()
        }
    });
    err.map_or(Ok(out), Err)
}

/// Returns `clause` with operands replaced by values from `log` according
/// to `policy`. Clauses without matching operands come back unchanged.
pub fn concretize(clause: &Clause, log: &BTreeMap<String, Value>, policy: ConcretizePolicy) -> Result<Clause, EncodeError> {
    let mut out = clause.clone();
    let mut changed = false;
    match (policy, clause.kind, &clause.constraint) {
        (ConcretizePolicy::AllOperands, ClauseKind::Assign, Formula::Cmp(CmpOp::Eq, lhs, rhs)) => {
            if has_var(rhs) {
                changed = true;
                out.constraint = Formula::Cmp(CmpOp::Eq, lhs.clone(), value_of(rhs, log, clause.id)?);
            }
        }
        (_, ClauseKind::Assign | ClauseKind::Guard, f) => {
            out.constraint = map_terms_fallible(f, &mut |t| linearize(t, log, clause.id, &mut changed))?;
        }
        _ => {}
    }
    out.concretized = clause.concretized || changed;
    Ok(out)
}
