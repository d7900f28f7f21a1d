use std::fmt::Write;

use super::{SsaNode, SsaProgram};

/// Renders SSA in the layout of the source program: one statement per line,
/// prefixed by its identifier, with φ pseudo-statements after each join.
pub fn dump(ssa: &SsaProgram) -> String {
    let mut out = String::new();
    let params: Vec<String> = ssa.params.iter().map(|p| format!("int {p}")).collect();
    let _ = writeln!(out, "int {}({}) {{", ssa.source.name, params.join(", "));
    let width = ssa.flat.iter().map(|s| s.id.to_string().len()).max().unwrap_or(1) + 1;
    block(&mut out, &ssa.body, 0, width);
    out.push_str("}\n");
    out
}

fn line(out: &mut String, id: &str, depth: usize, width: usize, text: &str) {
    let tag = if id.is_empty() { String::new() } else { format!("{id}:") };
    let _ = writeln!(out, "  {tag:<width$} {}{text}", "  ".repeat(depth), width = width);
}

fn block(out: &mut String, nodes: &[SsaNode], depth: usize, width: usize) {
    for n in nodes {
        node(out, n, depth, width);
    }
}

fn node(out: &mut String, n: &SsaNode, depth: usize, width: usize) {
    match n {
        SsaNode::Assign { id, lhs, rhs } => line(out, &id.to_string(), depth, width, &format!("{lhs} = {rhs};")),
        SsaNode::Cond { id, pred, then_branch, else_branch, phis } => {
            line(out, &id.to_string(), depth, width, &format!("if ({pred})"));
            block(out, then_branch, depth + 1, width);
            if !else_branch.is_empty() {
                line(out, "", depth, width, "else");
                block(out, else_branch, depth + 1, width);
            }
            for p in phis {
                let text = format!("{} = {}({}, {});", p.lhs, p.id, p.rhs_true, p.rhs_false);
                line(out, &p.id.to_string(), depth, width, &text);
            }
        }
        SsaNode::Loop { id, header, pred, body } => {
            for p in header {
                let text = format!("{} = {}({}, {});", p.lhs, p.id, p.entry, p.back);
                line(out, &p.id.to_string(), depth, width, &text);
            }
            line(out, &id.to_string(), depth, width, &format!("while ({pred})"));
            block(out, body, depth + 1, width);
        }
        SsaNode::Assert { id, pred } => line(out, &id.to_string(), depth, width, &format!("assert({pred});")),
        SsaNode::Truncate { id, pred } => line(out, &id.to_string(), depth, width, &format!("assume(!({pred}));")),
    }
}
