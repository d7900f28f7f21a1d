//! Spectrum-based suspiciousness (Ochiai) and the clause weights derived
//! from it: `weight = 1 / susp`, with never-failing statements getting the
//! top weight.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::arith::Width;
use crate::encoder::{Clause, Origin};
use crate::lang::{interp, Label, Program};
use crate::solver::Weight;
use crate::ssa::StmtKey;
use crate::suite::{SuiteError, TestSuite};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestCoverage {
    pub id: String,
    pub passed: bool,
    pub lines: BTreeSet<Label>,
    /// Conditional outcomes, as (label, taken branch).
    pub branches: BTreeSet<(Label, bool)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CoverageMatrix {
    pub tests: Vec<TestCoverage>,
}

pub type SuspiciousnessMap = BTreeMap<Label, f64>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CoverageError {
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("coverage matrix has no failing test")]
    NoFailingTest,
    #[error("test `{test}` covers label {label}, which is not in the program")]
    UnknownLabel { test: String, label: Label },
    #[error(transparent)]
    Suite(#[from] SuiteError),
}

fn list<T>(items: impl IntoIterator<Item = T>, f: impl Fn(T) -> String) -> String {
    let v: Vec<String> = items.into_iter().map(f).collect();
    if v.is_empty() {
        "-".into()
    } else {
        v.join(",")
    }
}

impl CoverageMatrix {
    pub fn failing(&self) -> usize {
        self.tests.iter().filter(|t| !t.passed).count()
    }

    /// One test per line: `id<TAB>pass|fail<TAB>labels<TAB>branches`, with
    /// comma-separated lists (`-` when empty) and branches written `5T`/`5F`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for t in &self.tests {
            let lines = list(&t.lines, |l| l.to_string());
            let branches = list(&t.branches, |(l, b)| format!("{l}{}", if *b { 'T' } else { 'F' }));
            let _ = writeln!(out, "{}\t{}\t{lines}\t{branches}", t.id, if t.passed { "pass" } else { "fail" });
        }
        out
    }

    pub fn parse(text: &str) -> Result<CoverageMatrix, CoverageError> {
        let mut tests = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let err = |msg: String| CoverageError::Format { line: n + 1, msg };
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = raw.split('\t').collect();
            if fields.len() != 4 {
                return Err(err(format!("expected 4 tab-separated fields, found {}", fields.len())));
            }
            if fields[0].is_empty() {
                return Err(err("empty test id".into()));
            }
            let passed = match fields[1] {
                "pass" => true,
                "fail" => false,
                o => return Err(err(format!("expected `pass` or `fail`, found `{o}`"))),
            };
            let items = |s: &str| -> Vec<String> {
                if s == "-" {
                    Vec::new()
                } else {
                    s.split(',').map(str::to_string).collect()
                }
            };
            let mut lines = BTreeSet::new();
            for l in items(fields[2]) {
                lines.insert(l.parse::<Label>().map_err(|_| err(format!("bad label `{l}`")))?);
            }
            let mut branches = BTreeSet::new();
            for b in items(fields[3]) {
                let (label, pol) = match b.strip_suffix('T') {
                    Some(l) => (l, true),
                    None => (b.strip_suffix('F').ok_or_else(|| err(format!("bad branch `{b}`")))?, false),
                };
                branches.insert((label.parse::<Label>().map_err(|_| err(format!("bad branch `{b}`")))?, pol));
            }
            tests.push(TestCoverage { id: fields[0].to_string(), passed, lines, branches });
        }
        Ok(CoverageMatrix { tests })
    }

    /// Checks that the matrix has a failing test and mentions only labels of
    /// `program`.
    pub fn validate(&self, program: &Program) -> Result<(), CoverageError> {
        if self.failing() == 0 {
            return Err(CoverageError::NoFailingTest);
        }
        let known: BTreeSet<Label> = program.statements().iter().map(|s| s.label).collect();
        for t in &self.tests {
            for &l in t.lines.iter().chain(t.branches.iter().map(|(l, _)| l)) {
                if !known.contains(&l) {
                    return Err(CoverageError::UnknownLabel { test: t.id.clone(), label: l });
                }
            }
        }
        Ok(())
    }
}

/// Runs every test of `suite` on `program` (each with its own assertion)
/// and records what it covered. Anything but a passing assert is a failure.
pub fn collect_coverage(program: &Program, suite: &TestSuite, width: Width, max_iters: u64) -> Result<CoverageMatrix, CoverageError> {
    let mut tests = Vec::new();
    for t in &suite.tests {
        let p = suite.program_for(t, program)?;
        let run = interp::run(&p, &t.inputs, width, max_iters)
            .map_err(|err| SuiteError::Input { id: t.id.clone(), err })?;
        tests.push(TestCoverage {
            id: t.id.clone(),
            passed: run.outcome == interp::Outcome::Passed,
            lines: run.executed.iter().copied().collect(),
            branches: run.branches,
        });
    }
    Ok(CoverageMatrix { tests })
}

/// `susp(e) = ef / sqrt(F * (ef + ep))` for every covered statement; those
/// covered by no failing test get 0.
pub fn ochiai(cov: &CoverageMatrix) -> Result<SuspiciousnessMap, CoverageError> {
    let total_failed = cov.failing();
    if total_failed == 0 {
        return Err(CoverageError::NoFailingTest);
    }
    let mut counts: BTreeMap<Label, (usize, usize)> = BTreeMap::new();
    for t in &cov.tests {
        for &l in &t.lines {
            let e = counts.entry(l).or_default();
            if t.passed {
                e.1 += 1;
            } else {
                e.0 += 1;
            }
        }
    }
    Ok(counts
        .into_iter()
        .map(|(l, (ef, ep))| {
            let s = if ef == 0 { 0.0 } else { ef as f64 / ((total_failed * (ef + ep)) as f64).sqrt() };
            (l, s)
        })
        .collect())
}

/// `1 / susp`, computed exactly from the binary value of `susp`; zero (or
/// anything not positive) maps to the top weight.
pub fn weight_of(susp: f64) -> Weight {
    match BigRational::from_float(susp) {
        Some(r) if r > BigRational::zero() => Weight::Finite(BigRational::one() / r),
        _ => Weight::Top,
    }
}

/// Sets the weight of every soft clause from the suspiciousness of its
/// source statement; statements missing from `susp` count as 0.
pub fn to_weights(susp: &SuspiciousnessMap, clauses: &mut [Clause]) {
    for c in clauses.iter_mut().filter(|c| c.is_soft()) {
        let s = match &c.origin {
            Origin::Stmt(id) => match id.key {
                StmtKey::Line(l) | StmtKey::Trunc(l) => susp.get(&l).copied().unwrap_or(0.0),
                StmtKey::Phi(_) => 0.0,
            },
            Origin::Input | Origin::Assertion => 0.0,
        };
        c.weight = Some(weight_of(s));
    }
}

#[cfg(test)]
mod tests;
