use std::fmt::Write;

use super::ast::{Program, Stmt, StmtKind};

/// Renders a program in canonical MiniImp syntax with explicit labels, so
/// that parsing the output reproduces the same AST.
pub fn pretty(p: &Program) -> String {
    let mut out = String::new();
    let params: Vec<String> = p.params.iter().map(|x| format!("int {x}")).collect();
    let _ = writeln!(out, "int {}({}) {{", p.name, params.join(", "));
    for s in &p.body {
        stmt(&mut out, s, 1);
    }
    out.push_str("}\n");
    out
}

fn stmt(out: &mut String, s: &Stmt, depth: usize) {
    let pad = "  ".repeat(depth);
    match &s.kind {
        StmtKind::If { cond, then_branch, else_branch } => {
            let _ = writeln!(out, "{pad}{}: if ({cond}) {{", s.label);
            for t in then_branch {
                stmt(out, t, depth + 1);
            }
            if else_branch.is_empty() {
                let _ = writeln!(out, "{pad}}}");
            } else {
                let _ = writeln!(out, "{pad}}} else {{");
                for e in else_branch {
                    stmt(out, e, depth + 1);
                }
                let _ = writeln!(out, "{pad}}}");
            }
        }
        StmtKind::While { cond, body } => {
            let _ = writeln!(out, "{pad}{}: while ({cond}) {{", s.label);
            for b in body {
                stmt(out, b, depth + 1);
            }
            let _ = writeln!(out, "{pad}}}");
        }
        _ => {
            let _ = writeln!(out, "{pad}{}: {}", s.label, s.header());
        }
    }
}
