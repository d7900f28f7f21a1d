//! Reference interpreter over the source AST. Used as the semantic baseline
//! for SSA construction and to run golden programs.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::{Label, Program, Stmt, StmtKind};
use crate::arith::{Inputs, Width};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Passed,
    Violated,
    /// Ran to completion on a program without an assert.
    Finished,
    Overflow(Label),
    /// A loop exceeded the iteration budget.
    Diverged(Label),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Run {
    pub outcome: Outcome,
    /// Final value of every variable assigned at the end of the run.
    pub vars: BTreeMap<String, i64>,
    /// Labels in execution order.
    pub executed: Vec<Label>,
    /// Conditional outcomes observed, as (label, taken branch).
    pub branches: BTreeSet<(Label, bool)>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InputError {
    #[error("missing value for parameter `{0}`")]
    Missing(String),
    #[error("unknown parameter `{0}`")]
    Unknown(String),
    #[error("value {value} for parameter `{name}` does not fit in {width} bits")]
    OutOfRange { name: String, value: i64, width: Width },
}

pub fn check_inputs(params: &[String], input: &Inputs, width: Width) -> Result<(), InputError> {
    for p in params {
        match input.get(p) {
            None => return Err(InputError::Missing(p.clone())),
            Some(&v) if !width.contains(v as i128) => {
                return Err(InputError::OutOfRange { name: p.clone(), value: v, width })
            }
            _ => {}
        }
    }
    if let Some(k) = input.keys().find(|k| !params.contains(k)) {
        return Err(InputError::Unknown(k.clone()));
    }
    Ok(())
}

enum Stop {
    Overflow(Label),
    Diverged(Label),
    Assert(bool),
}

struct Machine {
    width: Width,
    max_iters: u64,
    vars: BTreeMap<String, i64>,
    executed: Vec<Label>,
    branches: BTreeSet<(Label, bool)>,
}

impl Machine {
    fn block(&mut self, stmts: &[Stmt]) -> Result<(), Stop> {
        for s in stmts {
            self.stmt(s)?;
        }
        Ok(())
    }

    fn lookup(&self) -> impl Fn(&String) -> Option<i128> + '_ {
        |v| self.vars.get(v).map(|&x| x as i128)
    }

    fn stmt(&mut self, s: &Stmt) -> Result<(), Stop> {
        self.executed.push(s.label);
        match &s.kind {
            StmtKind::Assign { lhs, rhs } => {
                let v = rhs.eval(&self.lookup()).filter(|v| self.width.contains(*v)).ok_or(Stop::Overflow(s.label))?;
                self.vars.insert(lhs.clone(), v as i64);
            }
            StmtKind::If { cond, then_branch, else_branch } => {
                let c = cond.eval(&self.lookup()).ok_or(Stop::Overflow(s.label))?;
                self.branches.insert((s.label, c));
                self.block(if c { then_branch } else { else_branch })?;
            }
            StmtKind::While { cond, body } => {
                let mut n = 0u64;
                loop {
                    let c = cond.eval(&self.lookup()).ok_or(Stop::Overflow(s.label))?;
                    self.branches.insert((s.label, c));
                    if !c {
                        break;
                    }
                    n += 1;
                    if n > self.max_iters {
                        return Err(Stop::Diverged(s.label));
                    }
                    self.block(body)?;
                    self.executed.push(s.label);
                }
            }
            StmtKind::Assert(p) => {
                let ok = p.eval(&self.lookup()).ok_or(Stop::Overflow(s.label))?;
                return Err(Stop::Assert(ok));
            }
        }
        Ok(())
    }
}

/// Runs `program` on `input`. Loops may iterate at most `max_iters` times
/// per entry before the run is reported as diverged.
pub fn run(program: &Program, input: &Inputs, width: Width, max_iters: u64) -> Result<Run, InputError> {
    check_inputs(&program.params, input, width)?;
    let mut m = Machine { width, max_iters, vars: input.clone(), executed: Vec::new(), branches: BTreeSet::new() };
    let outcome = match m.block(&program.body) {
        Ok(()) => Outcome::Finished,
        Err(Stop::Assert(true)) => Outcome::Passed,
        Err(Stop::Assert(false)) => Outcome::Violated,
        Err(Stop::Overflow(l)) => Outcome::Overflow(l),
        Err(Stop::Diverged(l)) => Outcome::Diverged(l),
    };
    Ok(Run { outcome, vars: m.vars, executed: m.executed, branches: m.branches })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;

    fn inputs(pairs: &[(&str, i64)]) -> Inputs {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn loop_and_overflow() {
        let p = parse("int f(int n) {\n i = 0;\n s = 0;\n while (i < n) {\n s = s + 100;\n i = i + 1;\n }\n assert(s >= 0);\n}").unwrap();
        let r = run(&p, &inputs(&[("n", 1)]), Width::W8, 10).unwrap();
        assert_eq!(r.outcome, Outcome::Passed);
        assert_eq!(r.vars["s"], 100);
        let r = run(&p, &inputs(&[("n", 2)]), Width::W8, 10).unwrap();
        assert_eq!(r.outcome, Outcome::Overflow(5));
        let r = run(&p, &inputs(&[("n", 20)]), Width::W32, 10).unwrap();
        assert_eq!(r.outcome, Outcome::Diverged(4));
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = parse("int f(int n) { assert(n > 0); }").unwrap();
        assert!(matches!(run(&p, &inputs(&[]), Width::W8, 1), Err(InputError::Missing(_))));
        assert!(matches!(run(&p, &inputs(&[("n", 300)]), Width::W8, 1), Err(InputError::OutOfRange { .. })));
    }
}
