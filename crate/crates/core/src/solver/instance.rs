//! MAX-SAT instances and their text form: a header, the clause lines of
//! the trace formula dump, and a weights section.
//!
//! ```text
//! width 8
//! max-comss 5
//! mode weighted
//! clauses
//! 1 soft - 2 assign (= a_1 x_1)
//! 2 hard - input input (= x_1 0)
//! weights
//! 1 5/2
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{Weight, WeightParseError};
use crate::arith::{Width, WidthError};
use crate::encoder::{parse_clause_line, write_clause_line, Clause, ClauseId, ClauseKind, Hardness, TextError};
use crate::lang::CmpOp;
use crate::logic::{term_range, Formula, Term, VarWidths};

/// Defined variable and defining terms of an assignment (`lhs = rhs`) or
/// φ clause (`g ∧ lhs = t ∨ ¬g ∧ lhs = f`).
fn definition(c: &Clause) -> Option<(&str, Vec<&Term>)> {
    fn eq(f: &Formula) -> Option<(&str, &Term)> {
        match f {
            Formula::Cmp(CmpOp::Eq, Term::Var(v), rhs) => Some((v.as_str(), rhs)),
            _ => None,
        }
    }
    match (c.kind, &c.constraint) {
        (ClauseKind::Assign, f) => eq(f).map(|(v, t)| (v, vec![t])),
        (ClauseKind::Phi, Formula::Or(arms)) => {
            let mut lhs = None;
            let mut terms = Vec::new();
            for arm in arms {
                let Formula::And(parts) = arm else { return None };
                let (v, t) = parts.iter().find_map(eq)?;
                if lhs.is_some_and(|l| l != v) {
                    return None;
                }
                lhs = Some(v);
                terms.push(t);
            }
            Some((lhs?, terms))
        }
        _ => None,
    }
}

/// Plain instances treat every soft clause as weight 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Plain,
    Weighted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaxSatInstance {
    pub width: Width,
    pub clauses: Vec<Clause>,
}

impl MaxSatInstance {
    pub fn new(width: Width, clauses: Vec<Clause>) -> Self {
        MaxSatInstance { width, clauses }
    }

    pub fn hard(&self) -> impl Iterator<Item = &Clause> {
        self.clauses.iter().filter(|c| !c.is_soft())
    }

    pub fn soft(&self) -> impl Iterator<Item = &Clause> {
        self.clauses.iter().filter(|c| c.is_soft())
    }

    pub fn weight(&self, c: &Clause, mode: Mode) -> Weight {
        match mode {
            Mode::Plain => Weight::one(),
            Mode::Weighted => c.weight.clone().unwrap_or_else(Weight::one),
        }
    }

    /// Integer ranges for solving. Inputs, and variables without a
    /// definition, range over the instance width. A variable defined by an
    /// assignment or φ clause also covers every value its definition can
    /// produce from its operands, so a definition never restricts the values
    /// flowing into it; statements off the executed path therefore cannot
    /// make a correction fail by overflowing.
    pub fn var_widths(&self) -> VarWidths {
        let mut widths = VarWidths::uniform(self.width);
        let defs: Vec<(&str, Vec<&Term>)> = self.clauses.iter().filter_map(|c| definition(c)).collect();
        let full = (i64::MIN, i64::MAX);
        // SSA definitions are acyclic, so ranges settle after one pass per
        // definition; anything still growing after that gets the full range.
        for round in 0..=defs.len() + 1 {
            let mut changed = false;
            for (lhs, rhs) in &defs {
                let (mut lo, mut hi) = (self.width.min_value() as i128, self.width.max_value() as i128);
                for t in rhs {
                    let (a, b) = term_range(t, &widths);
                    (lo, hi) = (lo.min(a), hi.max(b));
                }
                let mut r = (lo.max(i64::MIN as i128) as i64, hi.min(i64::MAX as i128) as i64);
                if round > defs.len() {
                    r = full;
                }
                let old = widths.range(lhs);
                let grown = (r.0.min(old.0), r.1.max(old.1));
                if grown != old {
                    widths.ranges.insert(lhs.to_string(), grown);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        widths
    }

    /// Writes the instance with its enumeration settings.
    pub fn dump(&self, max_comss: usize, mode: Mode) -> String {
        let mut out = String::new();
        let mode_name = match mode {
            Mode::Plain => "plain",
            Mode::Weighted => "weighted",
        };
        let _ = writeln!(out, "width {}\nmax-comss {max_comss}\nmode {mode_name}\nclauses", self.width);
        for c in &self.clauses {
            let mut c = c.clone();
            c.weight = None;
            let _ = writeln!(out, "{}", write_clause_line(&c));
        }
        out.push_str("weights\n");
        for c in self.soft() {
            if let Some(w) = &c.weight {
                let _ = writeln!(out, "{} {w}", c.id);
            }
        }
        out
    }

    /// Parses the text form back into the instance and its settings.
    pub fn parse(text: &str) -> Result<(MaxSatInstance, usize, Mode), InstanceError> {
        #[derive(PartialEq)]
        enum Section {
            Header,
            Clauses,
            Weights,
        }
        let mut section = Section::Header;
        let (mut width, mut max_comss, mut mode) = (None, None, None);
        let mut clauses: Vec<Clause> = Vec::new();
        let mut ids = BTreeSet::new();
        let mut weights: BTreeMap<ClauseId, Weight> = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let err = |kind: InstanceErrorKind| InstanceError { line, kind };
            let l = raw.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            match (l, &section) {
                ("clauses", Section::Header) => {
                    section = Section::Clauses;
                    continue;
                }
                ("weights", Section::Clauses) => {
                    section = Section::Weights;
                    continue;
                }
                _ => {}
            }
            match section {
                Section::Header => {
                    let (key, value) = l.split_once(' ').ok_or_else(|| err(InstanceErrorKind::Header(l.to_string())))?;
                    let value = value.trim();
                    let dup = match key {
                        "width" => {
                            let bits = value.parse().map_err(|_| err(InstanceErrorKind::Header(l.to_string())))?;
                            width.replace(Width::new(bits).map_err(|e| err(e.into()))?).is_some()
                        }
                        "max-comss" => {
                            let k: usize = value.parse().map_err(|_| err(InstanceErrorKind::Header(l.to_string())))?;
                            if k == 0 {
                                return Err(err(InstanceErrorKind::Header(l.to_string())));
                            }
                            max_comss.replace(k).is_some()
                        }
                        "mode" => {
                            let m = match value {
                                "plain" => Mode::Plain,
                                "weighted" => Mode::Weighted,
                                _ => return Err(err(InstanceErrorKind::Header(l.to_string()))),
                            };
                            mode.replace(m).is_some()
                        }
                        _ => return Err(err(InstanceErrorKind::Header(l.to_string()))),
                    };
                    if dup {
                        return Err(err(InstanceErrorKind::Duplicate(key.to_string())));
                    }
                }
                Section::Clauses => {
                    let c = parse_clause_line(l).map_err(|e| err(e.into()))?;
                    if !ids.insert(c.id) {
                        return Err(err(InstanceErrorKind::Duplicate(format!("clause {}", c.id))));
                    }
                    clauses.push(c);
                }
                Section::Weights => {
                    let (id, w) = l.split_once(' ').ok_or_else(|| err(InstanceErrorKind::WeightLine(l.to_string())))?;
                    let id: ClauseId = id.parse().map_err(|_| err(InstanceErrorKind::WeightLine(l.to_string())))?;
                    let w: Weight = w.trim().parse().map_err(|e: WeightParseError| err(e.into()))?;
                    if weights.insert(id, w).is_some() {
                        return Err(err(InstanceErrorKind::Duplicate(format!("weight {id}"))));
                    }
                }
            }
        }
        let end = text.lines().count();
        let missing = |what: &str| InstanceError { line: end, kind: InstanceErrorKind::Missing(what.to_string()) };
        if section == Section::Header {
            return Err(missing("clauses"));
        }
        for (id, w) in weights {
            let c = clauses.iter_mut().find(|c| c.id == id).ok_or_else(|| missing(&format!("clause {id}")))?;
            if c.hardness == Hardness::Hard {
                return Err(InstanceError { line: end, kind: InstanceErrorKind::WeightedHard(id) });
            }
            if c.weight.is_some() {
                return Err(InstanceError { line: end, kind: InstanceErrorKind::Duplicate(format!("weight {id}")) });
            }
            c.weight = Some(w);
        }
        let width = width.ok_or_else(|| missing("width"))?;
        Ok((MaxSatInstance { width, clauses }, max_comss.unwrap_or(5), mode.unwrap_or_default()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {kind}")]
pub struct InstanceError {
    pub line: usize,
    pub kind: InstanceErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InstanceErrorKind {
    #[error("bad header line `{0}`")]
    Header(String),
    #[error(transparent)]
    Width(#[from] WidthError),
    #[error(transparent)]
    Clause(#[from] TextError),
    #[error(transparent)]
    Weight(#[from] WeightParseError),
    #[error("bad weight line `{0}`")]
    WeightLine(String),
    #[error("{0} given twice")]
    Duplicate(String),
    #[error("missing {0}")]
    Missing(String),
    #[error("hard clause {0} has a weight")]
    WeightedHard(ClauseId),
}
