use std::collections::{BTreeSet, HashSet};

use super::ast::{Program, Stmt, StmtKind};
use super::LangError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidationMode {
    RequireAssert,
    AssertOptional,
}

/// Checks the program invariants: unique labels, at most (or exactly) one
/// assert as the last top-level statement, and definite assignment before
/// every use.
pub fn validate(p: &Program, mode: ValidationMode) -> Result<(), LangError> {
    let mut seen = HashSet::new();
    let mut dup = None;
    p.walk(&mut |s| {
        if !seen.insert(s.label) && dup.is_none() {
            dup = Some(s.label);
        }
    });
    if let Some(l) = dup {
        return Err(LangError::Semantic { label: Some(l), msg: format!("duplicate statement label {l}") });
    }

    let mut params = HashSet::new();
    for prm in &p.params {
        if !params.insert(prm.as_str()) {
            return Err(LangError::Semantic { label: None, msg: format!("duplicate parameter `{prm}`") });
        }
    }

    let mut asserts = 0;
    p.walk(&mut |s| {
        if matches!(s.kind, StmtKind::Assert(_)) {
            asserts += 1;
        }
    });
    match (asserts, mode) {
        (0, ValidationMode::RequireAssert) => {
            return Err(LangError::Semantic { label: None, msg: "program has no assert statement".into() })
        }
        (n, _) if n > 1 => {
            return Err(LangError::Semantic { label: None, msg: format!("program has {n} assert statements; exactly one is allowed") })
        }
        _ => {}
    }
    if asserts == 1 {
        let last = p.body.last();
        if !matches!(last.map(|s| &s.kind), Some(StmtKind::Assert(_))) {
            let mut label = None;
            p.walk(&mut |s| {
                if matches!(s.kind, StmtKind::Assert(_)) {
                    label = Some(s.label);
                }
            });
            return Err(LangError::Semantic {
                label,
                msg: "the assert must be the last top-level statement".into(),
            });
        }
    }

    let defined: BTreeSet<String> = p.params.iter().cloned().collect();
    check_defs(&p.body, defined)?;
    Ok(())
}

fn check_defs(stmts: &[Stmt], mut defined: BTreeSet<String>) -> Result<BTreeSet<String>, LangError> {
    for s in stmts {
        let check = |vars: Vec<&String>, defined: &BTreeSet<String>| -> Result<(), LangError> {
            for v in vars {
                if !defined.contains(v) {
                    return Err(LangError::Semantic {
                        label: Some(s.label),
                        msg: format!("variable `{v}` may be used before it is assigned"),
                    });
                }
            }
            Ok(())
        };
        match &s.kind {
            StmtKind::Assign { lhs, rhs } => {
                let mut vars = Vec::new();
                rhs.for_each_var(&mut |v| vars.push(v));
                check(vars, &defined)?;
                defined.insert(lhs.clone());
            }
            StmtKind::If { cond, then_branch, else_branch } => {
                let mut vars = Vec::new();
                cond.for_each_var(&mut |v| vars.push(v));
                check(vars, &defined)?;
                let t = check_defs(then_branch, defined.clone())?;
                let e = check_defs(else_branch, defined.clone())?;
                defined = t.intersection(&e).cloned().collect();
            }
            StmtKind::While { cond, body } => {
                let mut vars = Vec::new();
                cond.for_each_var(&mut |v| vars.push(v));
                check(vars, &defined)?;
                // the body may run zero times: its definitions don't escape
                check_defs(body, defined.clone())?;
            }
            StmtKind::Assert(pred) => {
                let mut vars = Vec::new();
                pred.for_each_var(&mut |v| vars.push(v));
                check(vars, &defined)?;
            }
        }
    }
    Ok(defined)
}
