use itertools::Itertools;

use super::bitblast::Blaster;
use super::cdcl::{Budget, Lit, SolveResult};
use super::instance::{MaxSatInstance, Mode};
use super::{check_formulas, sat_in, verify, Cost, SatResult, SolverError};
use crate::encoder::{Clause, ClauseId};
use crate::logic::{Formula, Model, VarWidths};

pub const BRUTE_FORCE_MAX_SOFT: usize = 20;
pub const BRUTE_FORCE_MAX_WIDTH: u32 = 8;

/// A minimal correction subset: soft clauses whose removal makes the
/// instance satisfiable, none of which can be kept.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoMss {
    /// Ascending clause ids.
    pub clauses: Vec<ClauseId>,
    /// Total weight of the dropped clauses.
    pub dropped: Cost,
    /// Total weight of the kept soft clauses.
    pub mss_weight: Cost,
    /// A model of the hard and kept clauses, when the enumerator found one.
    pub witness: Option<Model>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Enumeration {
    pub comss: Vec<CoMss>,
    /// False if the budget ran out before enumeration finished.
    pub complete: bool,
    pub sat_calls: u64,
}

fn make(inst: &MaxSatInstance, mut ids: Vec<ClauseId>, mode: Mode) -> CoMss {
    ids.sort_unstable();
    let (mut dropped, mut kept) = (Cost::zero(), Cost::zero());
    for c in inst.soft() {
        let w = inst.weight(c, mode);
        if ids.binary_search(&c.id).is_ok() {
            dropped.add(&w);
        } else {
            kept.add(&w);
        }
    }
    CoMss { clauses: ids, dropped, mss_weight: kept, witness: None }
}

/// Heaviest MSS first, then smaller CoMSSs, then clause ids.
fn sort(list: &mut [CoMss]) {
    list.sort_by(|a, b| {
        a.dropped.cmp(&b.dropped).then(a.clauses.len().cmp(&b.clauses.len())).then_with(|| a.clauses.cmp(&b.clauses))
    });
}

/// Sequential-counter encoding of "at most `k` of `xs` are true".
fn at_most(b: &mut Blaster, xs: &[Lit], k: usize) {
    let n = xs.len();
    if k >= n {
        return;
    }
    if k == 0 {
        for &x in xs {
            b.sat.add_clause(&[!x]);
        }
        return;
    }
    let mut prev: Vec<Lit> = Vec::new();
    for (i, &x) in xs.iter().enumerate() {
        if i == n - 1 {
            b.sat.add_clause(&[!x, !prev[k - 1]]);
            break;
        }
        let s: Vec<Lit> = (0..k).map(|_| Lit::new(b.sat.new_var(), false)).collect();
        b.sat.add_clause(&[!x, s[0]]);
        if i == 0 {
            for &sj in &s[1..] {
                b.sat.add_clause(&[!sj]);
            }
        } else {
            b.sat.add_clause(&[!prev[0], s[0]]);
            for j in 1..k {
                b.sat.add_clause(&[!x, !prev[j - 1], s[j]]);
                b.sat.add_clause(&[!prev[j], s[j]]);
            }
            b.sat.add_clause(&[!x, !prev[k - 1]]);
        }
        prev = s;
    }
}

/// Enumerates every CoMSS with at most `max_size` clauses.
///
/// Each soft clause is represented by the literal of its constraint. A
/// cardinality constraint bounds the number of falsified soft clauses; each
/// model is grown into a maximal satisfiable subset, its complement is
/// reported and blocked by requiring one of its clauses to hold. The result
/// is then ordered by decreasing MSS weight, size and clause ids.
pub fn enumerate_comss(inst: &MaxSatInstance, max_size: usize, mode: Mode, budget: &Budget) -> Result<Enumeration, SolverError> {
    let widths = inst.var_widths();
    check_formulas(inst.clauses.iter().map(|c| &c.constraint), &widths)?;
    let mut b = Blaster::new(widths.clone());
    let hard: Vec<&Formula> = inst.hard().map(|c| &c.constraint).collect();
    for f in &hard {
        b.declare(f);
        let r = b.formula(f);
        b.sat.add_clause(&[r]);
    }
    let softs: Vec<&Clause> = inst.soft().collect();
    let sel: Vec<Lit> = softs
        .iter()
        .map(|c| {
            b.declare(&c.constraint);
            b.formula(&c.constraint)
        })
        .collect();
    let mut out = Enumeration { comss: Vec::new(), complete: false, sat_calls: 0 };
    let solve = |b: &mut Blaster, assumptions: &[Lit], out: &mut Enumeration| {
        out.sat_calls += 1;
        if budget.expired() {
            SolveResult::Unknown
        } else {
            b.sat.solve(assumptions, budget)
        }
    };
    match solve(&mut b, &[], &mut out) {
        SolveResult::Unsat => return Err(SolverError::HardUnsat),
        SolveResult::Unknown => return Ok(out),
        SolveResult::Sat => {}
    }
    match solve(&mut b, &sel, &mut out) {
        SolveResult::Sat => {
            out.complete = true;
            return Ok(out);
        }
        SolveResult::Unknown => return Ok(out),
        SolveResult::Unsat => {}
    }
    let dropped: Vec<Lit> = sel.iter().map(|&l| !l).collect();
    at_most(&mut b, &dropped, max_size);
    let holds = |b: &Blaster| -> Vec<bool> { sel.iter().map(|&l| b.sat.model_lit(l)).collect() };
    loop {
        match solve(&mut b, &[], &mut out) {
            SolveResult::Unsat => break,
            SolveResult::Unknown => {
                sort(&mut out.comss);
                return Ok(out);
            }
            SolveResult::Sat => {}
        }
        let mut kept = holds(&b);
        let mut model = b.model();
        for i in 0..sel.len() {
            if kept[i] {
                continue;
            }
            let mut assume: Vec<Lit> = (0..sel.len()).filter(|&j| kept[j]).map(|j| sel[j]).collect();
            assume.push(sel[i]);
            match solve(&mut b, &assume, &mut out) {
                SolveResult::Sat => {
                    kept = holds(&b);
                    model = b.model();
                }
                SolveResult::Unsat => {}
                SolveResult::Unknown => {
                    sort(&mut out.comss);
                    return Ok(out);
                }
            }
        }
        let kept_formulas = softs.iter().zip(&kept).filter(|(_, &k)| k).map(|(c, _)| &c.constraint);
        verify(hard.iter().copied().chain(kept_formulas), &model, &widths)?;
        let ids: Vec<ClauseId> = (0..sel.len()).filter(|&i| !kept[i]).map(|i| softs[i].id).collect();
        let block: Vec<Lit> = (0..sel.len()).filter(|&i| !kept[i]).map(|i| sel[i]).collect();
        out.comss.push(CoMss { witness: Some(model), ..make(inst, ids, mode) });
        if !b.sat.add_clause(&block) {
            break;
        }
    }
    sort(&mut out.comss);
    out.complete = true;
    Ok(out)
}

fn sat_of(fs: Vec<&Formula>, widths: &VarWidths) -> Result<bool, SolverError> {
    let fs: Vec<Formula> = fs.into_iter().cloned().collect();
    match sat_in(&fs, widths, &Budget::default())? {
        SatResult::Sat(_) => Ok(true),
        SatResult::Unsat => Ok(false),
        SatResult::Unknown => unreachable!("unlimited budget"),
    }
}

/// Checks a candidate against the definition: dropping it restores
/// satisfiability, and putting back any one of its clauses breaks it again.
/// Returns `(correction, minimal)`.
pub fn check_comss(inst: &MaxSatInstance, ids: &[ClauseId]) -> Result<(bool, bool), SolverError> {
    let widths = inst.var_widths();
    let kept: Vec<&Formula> = inst.clauses.iter().filter(|c| !c.is_soft() || !ids.contains(&c.id)).map(|c| &c.constraint).collect();
    if !sat_of(kept.clone(), &widths)? {
        return Ok((false, false));
    }
    for id in ids {
        let Some(c) = inst.clauses.iter().find(|c| c.id == *id && c.is_soft()) else {
            return Ok((true, false));
        };
        let mut with = kept.clone();
        with.push(&c.constraint);
        if sat_of(with, &widths)? {
            return Ok((true, false));
        }
    }
    Ok((true, true))
}

/// Reference enumeration: tries soft subsets by increasing size and keeps
/// those passing [`check_comss`]. Supersets of found CoMSSs are skipped,
/// as they can never be minimal.
pub fn brute_force_comss(inst: &MaxSatInstance, max_size: usize, mode: Mode) -> Result<Vec<CoMss>, SolverError> {
    let softs: Vec<ClauseId> = inst.soft().map(|c| c.id).collect();
    if softs.len() > BRUTE_FORCE_MAX_SOFT || inst.width.bits() > BRUTE_FORCE_MAX_WIDTH {
        return Err(SolverError::TooLarge { max_soft: BRUTE_FORCE_MAX_SOFT, max_width: BRUTE_FORCE_MAX_WIDTH });
    }
    let widths = inst.var_widths();
    check_formulas(inst.clauses.iter().map(|c| &c.constraint), &widths)?;
    if !sat_of(inst.hard().map(|c| &c.constraint).collect(), &widths)? {
        return Err(SolverError::HardUnsat);
    }
    if sat_of(inst.clauses.iter().map(|c| &c.constraint).collect(), &widths)? {
        return Ok(Vec::new());
    }
    let mut found: Vec<Vec<ClauseId>> = Vec::new();
    for size in 1..=max_size.min(softs.len()) {
        for cand in softs.iter().copied().combinations(size) {
            if found.iter().any(|m| m.iter().all(|id| cand.contains(id))) {
                continue;
            }
            if check_comss(inst, &cand)? == (true, true) {
                found.push(cand);
            }
        }
    }
    let mut list: Vec<CoMss> = found.into_iter().map(|ids| make(inst, ids, mode)).collect();
    sort(&mut list);
    Ok(list)
}
