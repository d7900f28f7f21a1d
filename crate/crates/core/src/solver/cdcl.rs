//! Conflict-driven clause learning over propositional clauses: two watched
//! literals, first-UIP learning, VSIDS with phase saving, Luby restarts and
//! solving under assumptions. Clauses may be added between calls.

use std::ops::Not;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(u32);

impl Lit {
    pub fn new(var: u32, negated: bool) -> Lit {
        Lit(var << 1 | negated as u32)
    }

    pub fn var(self) -> u32 {
        self.0 >> 1
    }

    pub fn is_neg(self) -> bool {
        self.0 & 1 == 1
    }

    fn idx(self) -> usize {
        self.0 as usize
    }
}

impl Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LBool {
    True,
    False,
    Undef,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveResult {
    Sat,
    Unsat,
    Unknown,
}

/// Resource limits for a single call. `None` means unlimited.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Budget {
    pub deadline: Option<Instant>,
    pub conflicts: Option<u64>,
}

impl Budget {
    pub fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }
}

struct Watcher {
    cref: usize,
    blocker: Lit,
}

/// Max-heap of variables keyed by activity.
#[derive(Default)]
struct VarHeap {
    heap: Vec<u32>,
    pos: Vec<Option<usize>>,
}

impl VarHeap {
    fn contains(&self, v: u32) -> bool {
        self.pos[v as usize].is_some()
    }

    fn swap(&mut self, i: usize, j: usize) {
        self.heap.swap(i, j);
        self.pos[self.heap[i] as usize] = Some(i);
        self.pos[self.heap[j] as usize] = Some(j);
    }

    fn up(&mut self, mut i: usize, act: &[f64]) {
        while i > 0 {
            let parent = (i - 1) / 2;
            if act[self.heap[i] as usize] <= act[self.heap[parent] as usize] {
                break;
            }
            self.swap(i, parent);
            i = parent;
        }
    }

    fn down(&mut self, mut i: usize, act: &[f64]) {
        loop {
            let (l, r) = (2 * i + 1, 2 * i + 2);
            let mut best = i;
            if l < self.heap.len() && act[self.heap[l] as usize] > act[self.heap[best] as usize] {
                best = l;
            }
            if r < self.heap.len() && act[self.heap[r] as usize] > act[self.heap[best] as usize] {
                best = r;
            }
            if best == i {
                break;
            }
            self.swap(i, best);
            i = best;
        }
    }

    fn insert(&mut self, v: u32, act: &[f64]) {
        if self.pos.len() <= v as usize {
            self.pos.resize(v as usize + 1, None);
        }
        if self.contains(v) {
            return;
        }
        self.heap.push(v);
        let i = self.heap.len() - 1;
        self.pos[v as usize] = Some(i);
        self.up(i, act);
    }

    fn pop(&mut self, act: &[f64]) -> Option<u32> {
        let top = *self.heap.first()?;
        let last = self.heap.len() - 1;
        self.swap(0, last);
        self.heap.pop();
        self.pos[top as usize] = None;
        if !self.heap.is_empty() {
            self.down(0, act);
        }
        Some(top)
    }

    fn bumped(&mut self, v: u32, act: &[f64]) {
        if let Some(i) = self.pos[v as usize] {
            self.up(i, act);
        }
    }
}

fn luby(y: f64, mut x: u64) -> f64 {
    let (mut size, mut seq) = (1u64, 0i32);
    while size < x + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    y.powi(seq)
}

pub struct Cdcl {
    clauses: Vec<Vec<Lit>>,
    watches: Vec<Vec<Watcher>>,
    assigns: Vec<LBool>,
    level: Vec<u32>,
    reason: Vec<Option<usize>>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    heap: VarHeap,
    phase: Vec<bool>,
    seen: Vec<bool>,
    model: Vec<bool>,
    ok: bool,
    conflicts: u64,
}

impl Default for Cdcl {
    fn default() -> Self {
        Self::new()
    }
}

impl Cdcl {
    pub fn new() -> Cdcl {
        Cdcl {
            clauses: Vec::new(),
            watches: Vec::new(),
            assigns: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: Vec::new(),
            var_inc: 1.0,
            heap: VarHeap::default(),
            phase: Vec::new(),
            seen: Vec::new(),
            model: Vec::new(),
            ok: true,
            conflicts: 0,
        }
    }

    pub fn num_vars(&self) -> u32 {
        self.assigns.len() as u32
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    /// Total conflicts over all calls so far.
    pub fn conflicts(&self) -> u64 {
        self.conflicts
    }

    pub fn new_var(&mut self) -> u32 {
        let v = self.assigns.len() as u32;
        self.assigns.push(LBool::Undef);
        self.level.push(0);
        self.reason.push(None);
        self.activity.push(0.0);
        self.phase.push(true);
        self.seen.push(false);
        self.watches.push(Vec::new());
        self.watches.push(Vec::new());
        self.heap.insert(v, &self.activity);
        v
    }

    fn value(&self, l: Lit) -> LBool {
        match self.assigns[l.var() as usize] {
            LBool::Undef => LBool::Undef,
            LBool::True if l.is_neg() => LBool::False,
            LBool::False if l.is_neg() => LBool::True,
            v => v,
        }
    }

    /// Value of `v` in the last satisfying assignment.
    pub fn model_value(&self, v: u32) -> bool {
        self.model[v as usize]
    }

    pub fn model_lit(&self, l: Lit) -> bool {
        self.model_value(l.var()) != l.is_neg()
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn enqueue(&mut self, l: Lit, reason: Option<usize>) {
        let v = l.var() as usize;
        self.assigns[v] = if l.is_neg() { LBool::False } else { LBool::True };
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    fn attach(&mut self, cref: usize) {
        let c = &self.clauses[cref];
        let (a, b) = (c[0], c[1]);
        self.watches[(!a).idx()].push(Watcher { cref, blocker: b });
        self.watches[(!b).idx()].push(Watcher { cref, blocker: a });
    }

    /// Adds a clause; must be called between solves. Returns false once the
    /// clause set is known to be unsatisfiable.
    pub fn add_clause(&mut self, lits: &[Lit]) -> bool {
        if !self.ok {
            return false;
        }
        debug_assert_eq!(self.decision_level(), 0);
        let mut c: Vec<Lit> = lits.to_vec();
        c.sort();
        c.dedup();
        let mut out = Vec::with_capacity(c.len());
        for (i, &l) in c.iter().enumerate() {
            if i + 1 < c.len() && c[i + 1] == !l {
                return true;
            }
            match self.value(l) {
                LBool::True => return true,
                LBool::False => {}
                LBool::Undef => out.push(l),
            }
        }
        match out.len() {
            0 => self.ok = false,
            1 => {
                self.enqueue(out[0], None);
                self.ok = self.propagate().is_none();
            }
            _ => {
                self.clauses.push(out);
                self.attach(self.clauses.len() - 1);
            }
        }
        self.ok
    }

    fn propagate(&mut self) -> Option<usize> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let mut ws = std::mem::take(&mut self.watches[p.idx()]);
            let false_lit = !p;
            let (mut i, mut j) = (0, 0);
            let mut conflict = None;
            while i < ws.len() {
                let w = Watcher { cref: ws[i].cref, blocker: ws[i].blocker };
                i += 1;
                if self.value(w.blocker) == LBool::True {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let cref = w.cref;
                let c = &mut self.clauses[cref];
                if c[0] == false_lit {
                    c.swap(0, 1);
                }
                let first = c[0];
                if first != w.blocker && self.value(first) == LBool::True {
                    ws[j] = Watcher { cref, blocker: first };
                    j += 1;
                    continue;
                }
                let mut moved = false;
                for k in 2..self.clauses[cref].len() {
                    let l = self.clauses[cref][k];
                    if self.value(l) != LBool::False {
                        let c = &mut self.clauses[cref];
                        c.swap(1, k);
                        self.watches[(!l).idx()].push(Watcher { cref, blocker: first });
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = Watcher { cref, blocker: first };
                j += 1;
                if self.value(first) == LBool::False {
                    conflict = Some(cref);
                    while i < ws.len() {
                        ws[j] = Watcher { cref: ws[i].cref, blocker: ws[i].blocker };
                        i += 1;
                        j += 1;
                    }
                    self.qhead = self.trail.len();
                } else {
                    self.enqueue(first, Some(cref));
                }
            }
            ws.truncate(j);
            self.watches[p.idx()] = ws;
            if conflict.is_some() {
                return conflict;
            }
        }
        None
    }

    fn bump(&mut self, v: u32) {
        self.activity[v as usize] += self.var_inc;
        if self.activity[v as usize] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.bumped(v, &self.activity);
    }

    fn analyze(&mut self, mut confl: usize) -> (Vec<Lit>, u32) {
        let mut learnt = vec![Lit(0)];
        let mut path = 0;
        let mut p: Option<Lit> = None;
        let mut index = self.trail.len();
        loop {
            let start = usize::from(p.is_some());
            for k in start..self.clauses[confl].len() {
                let q = self.clauses[confl][k];
                let v = q.var() as usize;
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.bump(q.var());
                    if self.level[v] >= self.decision_level() {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[self.trail[index].var() as usize] {
                    break;
                }
            }
            let lit = self.trail[index];
            self.seen[lit.var() as usize] = false;
            path -= 1;
            p = Some(lit);
            if path == 0 {
                break;
            }
            confl = self.reason[lit.var() as usize].expect("implied literal has a reason");
        }
        learnt[0] = !p.expect("conflict involves the current level");
        for l in &learnt[1..] {
            self.seen[l.var() as usize] = false;
        }
        let mut bt = 0;
        if learnt.len() > 1 {
            let mut max_i = 1;
            for k in 2..learnt.len() {
                if self.level[learnt[k].var() as usize] > self.level[learnt[max_i].var() as usize] {
                    max_i = k;
                }
            }
            learnt.swap(1, max_i);
            bt = self.level[learnt[1].var() as usize];
        }
        (learnt, bt)
    }

    fn cancel_until(&mut self, lvl: u32) {
        if self.decision_level() <= lvl {
            return;
        }
        let lim = self.trail_lim[lvl as usize];
        for k in (lim..self.trail.len()).rev() {
            let l = self.trail[k];
            let v = l.var() as usize;
            self.phase[v] = l.is_neg();
            self.assigns[v] = LBool::Undef;
            self.reason[v] = None;
            self.heap.insert(l.var(), &self.activity);
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(lvl as usize);
        self.qhead = lim;
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        while let Some(v) = self.heap.pop(&self.activity) {
            if self.assigns[v as usize] == LBool::Undef {
                return Some(Lit::new(v, self.phase[v as usize]));
            }
        }
        None
    }

    /// Searches for an assignment satisfying all clauses and `assumptions`.
    /// `Unsat` with non-empty assumptions means unsatisfiable under them.
    pub fn solve(&mut self, assumptions: &[Lit], budget: &Budget) -> SolveResult {
        if !self.ok {
            return SolveResult::Unsat;
        }
        let start_conflicts = self.conflicts;
        let mut restart = 0u64;
        let result = 'outer: loop {
            let limit = (luby(2.0, restart) * 100.0) as u64;
            restart += 1;
            let mut local = 0u64;
            loop {
                if let Some(confl) = self.propagate() {
                    self.conflicts += 1;
                    local += 1;
                    if self.decision_level() == 0 {
                        self.ok = false;
                        break 'outer SolveResult::Unsat;
                    }
                    let (learnt, bt) = self.analyze(confl);
                    self.cancel_until(bt);
                    if learnt.len() == 1 {
                        self.enqueue(learnt[0], None);
                    } else {
                        self.clauses.push(learnt);
                        let cref = self.clauses.len() - 1;
                        self.attach(cref);
                        let first = self.clauses[cref][0];
                        self.enqueue(first, Some(cref));
                    }
                    self.var_inc /= 0.95;
                    let used = self.conflicts - start_conflicts;
                    if budget.conflicts.is_some_and(|c| used >= c) || (used.is_multiple_of(64) && budget.expired()) {
                        break 'outer SolveResult::Unknown;
                    }
                    continue;
                }
                if local >= limit {
                    self.cancel_until(0);
                    break;
                }
                let mut next = None;
                while (self.decision_level() as usize) < assumptions.len() {
                    let a = assumptions[self.decision_level() as usize];
                    match self.value(a) {
                        LBool::True => self.trail_lim.push(self.trail.len()),
                        LBool::False => break 'outer SolveResult::Unsat,
                        LBool::Undef => {
                            next = Some(a);
                            break;
                        }
                    }
                }
                let next = match next {
                    Some(a) => a,
                    None => match self.pick_branch() {
                        Some(l) => l,
                        None => break 'outer SolveResult::Sat,
                    },
                };
                self.trail_lim.push(self.trail.len());
                self.enqueue(next, None);
            }
        };
        if result == SolveResult::Sat {
            self.model = self.assigns.iter().map(|&a| a == LBool::True).collect();
        }
        self.cancel_until(0);
        result
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lit(d: i32) -> Lit {
        Lit::new(d.unsigned_abs() - 1, d < 0)
    }

    fn solver(n: u32, clauses: &[Vec<i32>]) -> Cdcl {
        let mut s = Cdcl::new();
        for _ in 0..n {
            s.new_var();
        }
        for c in clauses {
            s.add_clause(&c.iter().map(|&d| lit(d)).collect::<Vec<_>>());
        }
        s
    }

    fn brute(n: u32, clauses: &[Vec<i32>]) -> bool {
        (0..1u32 << n).any(|m| clauses.iter().all(|c| c.iter().any(|&d| (m >> (d.unsigned_abs() - 1) & 1 == 1) == (d > 0))))
    }

    #[test]
    fn pigeonhole_three_into_two_is_unsat() {
        // p(i,j): pigeon i in hole j, var 2*i+j+1
        let p = |i: i32, j: i32| 2 * i + j + 1;
        let mut cs: Vec<Vec<i32>> = (0..3).map(|i| vec![p(i, 0), p(i, 1)]).collect();
        for j in 0..2 {
            for a in 0..3 {
                for b in a + 1..3 {
                    cs.push(vec![-p(a, j), -p(b, j)]);
                }
            }
        }
        assert_eq!(solver(6, &cs).solve(&[], &Budget::default()), SolveResult::Unsat);
    }

    #[test]
    fn assumptions_do_not_stick() {
        let mut s = solver(2, &[vec![1, 2]]);
        assert_eq!(s.solve(&[lit(-1), lit(-2)], &Budget::default()), SolveResult::Unsat);
        assert_eq!(s.solve(&[lit(-1)], &Budget::default()), SolveResult::Sat);
        assert!(s.model_lit(lit(2)));
    }

    proptest! {
        #[test]
        fn agrees_with_truth_tables(
            n in 1u32..8,
            raw in prop::collection::vec(prop::collection::vec((1i32..8, any::<bool>()), 1..4), 0..30),
        ) {
            let clauses: Vec<Vec<i32>> = raw
                .iter()
                .map(|c| c.iter().map(|&(v, pos)| { let v = (v - 1) % n as i32 + 1; if pos { v } else { -v } }).collect())
                .collect();
            let mut s = solver(n, &clauses);
            let r = s.solve(&[], &Budget::default());
            prop_assert_eq!(r == SolveResult::Sat, brute(n, &clauses));
            if r == SolveResult::Sat {
                for c in &clauses {
                    prop_assert!(c.iter().any(|&d| s.model_lit(lit(d))));
                }
            }
        }
    }
}
