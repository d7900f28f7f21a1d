use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use serde::Serialize;

use super::RunMode;
use crate::encoder::ClauseId;
use crate::lang::Label;

/// One blamed statement inside a CoMSS.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportStmt {
    pub clause: ClauseId,
    pub stmt: String,
    pub line: Label,
    pub source: String,
    pub constraint: String,
    pub concretized: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportEntry {
    /// 1-based; averaged ranks after a merge may be fractional.
    pub rank: f64,
    pub statements: Vec<ReportStmt>,
}

impl ReportEntry {
    pub fn lines(&self) -> BTreeSet<Label> {
        self.statements.iter().map(|s| s.line).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FaultReport {
    pub mode: RunMode,
    /// Whether entry order carries meaning. Unweighted runs report a set.
    pub ordered: bool,
    pub entries: Vec<ReportEntry>,
    pub iterations: usize,
    pub converged: bool,
    /// Every solver call finished within its budget.
    pub complete: bool,
    pub paths_explored: usize,
    /// Decimal, since the count can exceed 64 bits.
    pub paths_total: String,
    pub statement_clauses: usize,
    pub soft_clauses: usize,
    pub total_ms: f64,
    pub iteration_ms: Vec<f64>,
    pub notes: Vec<String>,
}

impl FaultReport {
    /// Distinct source lines in order of first appearance.
    pub fn lines(&self) -> Vec<Label> {
        let mut seen = BTreeSet::new();
        self.entries.iter().flat_map(|e| e.statements.iter().map(|s| s.line)).filter(|l| seen.insert(*l)).collect()
    }

    /// Blamed line sets, one per entry.
    pub fn line_sets(&self) -> Vec<BTreeSet<Label>> {
        self.entries.iter().map(ReportEntry::lines).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "mode {}  iterations {}  paths {}/{}  clauses {} ({} soft)  {:.1} ms",
            self.mode,
            self.iterations,
            self.paths_explored,
            self.paths_total,
            self.statement_clauses,
            self.soft_clauses,
            self.total_ms
        );
        if !self.ordered {
            let _ = writeln!(out, "(unordered: entries form a set)");
        }
        if self.entries.is_empty() {
            let _ = writeln!(out, "no correction found");
        } else {
            let _ = writeln!(out, "{:>5}  {:>5}  {:<28}  constraint", "rank", "line", "statement");
        }
        for e in &self.entries {
            for (i, s) in e.statements.iter().enumerate() {
                let rank = if i == 0 { fmt_rank(e.rank) } else { String::new() };
                let star = if s.concretized { "*" } else { "" };
                let _ = writeln!(out, "{rank:>5}  {:>5}  {:<28}  {}{star}", s.line, s.source, s.constraint);
            }
        }
        for n in &self.notes {
            let _ = writeln!(out, "note: {n}");
        }
        out
    }
}

fn fmt_rank(r: f64) -> String {
    if r.fract() == 0.0 {
        format!("{r:.0}")
    } else {
        format!("{r:.2}")
    }
}

/// Rank of the fault: for ordered reports the 1-based position of the
/// first faulty line among the distinct reported lines; for unordered ones
/// half the number of distinct lines. `None` if no fault line is reported.
pub fn fault_rank(report: &FaultReport, fault_lines: &[Label]) -> Option<f64> {
    let lines = report.lines();
    let pos = lines.iter().position(|l| fault_lines.contains(l))?;
    Some(if report.ordered { (pos + 1) as f64 } else { lines.len() as f64 / 2.0 })
}

/// Keeps the lines present in every report, ranked by the average of the
/// rank of the first entry naming them; ties go to the lower line.
pub fn merge_reports(reports: &[FaultReport]) -> Option<FaultReport> {
    let first = reports.first()?;
    let ranks: Vec<BTreeMap<Label, f64>> = reports
        .iter()
        .map(|r| {
            let mut m = BTreeMap::new();
            for e in &r.entries {
                for s in &e.statements {
                    m.entry(s.line).or_insert(e.rank);
                }
            }
            m
        })
        .collect();
    let mut merged: Vec<(f64, Label)> = ranks[0]
        .keys()
        .filter(|l| ranks.iter().all(|m| m.contains_key(l)))
        .map(|l| (ranks.iter().map(|m| m[l]).sum::<f64>() / ranks.len() as f64, *l))
        .collect();
    merged.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let entries = merged
        .into_iter()
        .map(|(rank, line)| {
            let statements = first.entries.iter().flat_map(|e| &e.statements).filter(|s| s.line == line).take(1).cloned().collect();
            ReportEntry { rank, statements }
        })
        .collect::<Vec<_>>();
    let mut notes = vec![format!("merged from {} reports", reports.len())];
    if entries.is_empty() {
        notes.push("no statement appears in every report".to_string());
    }
    Some(FaultReport {
        mode: first.mode,
        ordered: true,
        entries,
        iterations: reports.iter().map(|r| r.iterations).sum(),
        converged: reports.iter().all(|r| r.converged),
        complete: reports.iter().all(|r| r.complete),
        paths_explored: reports.iter().map(|r| r.paths_explored).max().unwrap_or(0),
        paths_total: first.paths_total.clone(),
        statement_clauses: reports.iter().map(|r| r.statement_clauses).max().unwrap_or(0),
        soft_clauses: reports.iter().map(|r| r.soft_clauses).max().unwrap_or(0),
        total_ms: reports.iter().map(|r| r.total_ms).sum(),
        iteration_ms: reports.iter().flat_map(|r| r.iteration_ms.iter().copied()).collect(),
        notes,
    })
}
