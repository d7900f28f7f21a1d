//! Translation of formulas to clauses. Integer terms become two's complement
//! bit vectors just wide enough for their exact value range, so arithmetic
//! never wraps. Every gate is defined by full equivalence, which makes the
//! literal returned for a formula usable as its truth value in both
//! polarities.

use std::collections::{BTreeMap, HashMap};

use super::cdcl::{Cdcl, Lit};
use crate::arith::signed_bits;
use crate::lang::{BinOp, CmpOp, Expr};
use crate::logic::{Formula, Model, Term, VarWidths};

pub struct Blaster {
    pub sat: Cdcl,
    widths: VarWidths,
    t: Lit,
    ands: HashMap<(Lit, Lit), Lit>,
    xors: HashMap<(Lit, Lit), Lit>,
    ints: BTreeMap<String, Vec<Lit>>,
    bools: BTreeMap<String, Lit>,
}

type Bv = Vec<Lit>;

impl Blaster {
    pub fn new(widths: impl Into<VarWidths>) -> Blaster {
        let mut sat = Cdcl::new();
        let t = Lit::new(sat.new_var(), false);
        sat.add_clause(&[t]);
        Blaster { sat, widths: widths.into(), t, ands: HashMap::new(), xors: HashMap::new(), ints: BTreeMap::new(), bools: BTreeMap::new() }
    }

    pub fn true_lit(&self) -> Lit {
        self.t
    }

    fn fresh(&mut self) -> Lit {
        Lit::new(self.sat.new_var(), false)
    }

    pub fn and2(&mut self, a: Lit, b: Lit) -> Lit {
        let f = !self.t;
        if a == f || b == f || a == !b {
            return f;
        }
        if a == self.t || a == b {
            return b;
        }
        if b == self.t {
            return a;
        }
        let key = (a.min(b), a.max(b));
        if let Some(&g) = self.ands.get(&key) {
            return g;
        }
        let g = self.fresh();
        self.sat.add_clause(&[!g, a]);
        self.sat.add_clause(&[!g, b]);
        self.sat.add_clause(&[g, !a, !b]);
        self.ands.insert(key, g);
        g
    }

    pub fn or2(&mut self, a: Lit, b: Lit) -> Lit {
        !self.and2(!a, !b)
    }

    fn xor2(&mut self, a: Lit, b: Lit) -> Lit {
        let f = !self.t;
        if a == f {
            return b;
        }
        if b == f {
            return a;
        }
        if a == self.t {
            return !b;
        }
        if b == self.t {
            return !a;
        }
        if a == b {
            return f;
        }
        if a == !b {
            return self.t;
        }
        // normalise to positive inputs: x ^ !y = !(x ^ y)
        let flip = a.is_neg() != b.is_neg();
        let (pa, pb) = (Lit::new(a.var(), false), Lit::new(b.var(), false));
        let key = (pa.min(pb), pa.max(pb));
        let g = match self.xors.get(&key) {
            Some(&g) => g,
            None => {
                let g = self.fresh();
                let (x, y) = key;
                self.sat.add_clause(&[!g, x, y]);
                self.sat.add_clause(&[!g, !x, !y]);
                self.sat.add_clause(&[g, !x, y]);
                self.sat.add_clause(&[g, x, !y]);
                self.xors.insert(key, g);
                g
            }
        };
        if flip {
            !g
        } else {
            g
        }
    }

    fn and_all(&mut self, lits: impl IntoIterator<Item = Lit>) -> Lit {
        let mut acc = self.t;
        for l in lits {
            acc = self.and2(acc, l);
        }
        acc
    }

    fn constant(&self, n: i64) -> Bv {
        let bits = signed_bits(n as i128);
        (0..bits).map(|i| if (n as i128 >> i) & 1 == 1 { self.t } else { !self.t }).collect()
    }

    fn int_var(&mut self, name: &str) -> Bv {
        if let Some(v) = self.ints.get(name) {
            return v.clone();
        }
        let bits = self.widths.bits(name);
        let v: Bv = (0..bits).map(|_| self.fresh()).collect();
        self.ints.insert(name.to_string(), v.clone());
        let (lo, hi) = self.widths.range(name);
        if lo as i128 != -(1i128 << (bits - 1)) {
            let c = self.constant(lo);
            let below = self.lt(&v, &c);
            self.sat.add_clause(&[!below]);
        }
        if hi as i128 != (1i128 << (bits - 1)) - 1 {
            let c = self.constant(hi);
            let above = self.lt(&c, &v);
            self.sat.add_clause(&[!above]);
        }
        v
    }

    fn bool_var(&mut self, name: &str) -> Lit {
        if let Some(&l) = self.bools.get(name) {
            return l;
        }
        let l = self.fresh();
        self.bools.insert(name.to_string(), l);
        l
    }

    fn extend(v: &Bv, n: usize) -> Bv {
        let mut out = v.clone();
        let sign = *v.last().expect("bit vectors are non-empty");
        out.resize(n.max(v.len()), sign);
        out
    }

    /// `a + b + cin`, truncated to the common length of `a` and `b`.
    fn add_n(&mut self, a: &Bv, b: &Bv, cin: Lit) -> Bv {
        let mut carry = cin;
        let mut out = Vec::with_capacity(a.len());
        for (&x, &y) in a.iter().zip(b) {
            let xy = self.xor2(x, y);
            out.push(self.xor2(xy, carry));
            let g = self.and2(x, y);
            let p = self.and2(xy, carry);
            carry = self.or2(g, p);
        }
        out
    }

    fn add(&mut self, a: &Bv, b: &Bv) -> Bv {
        let n = a.len().max(b.len()) + 1;
        let f = !self.t;
        self.add_n(&Self::extend(a, n), &Self::extend(b, n), f)
    }

    fn sub_n(&mut self, a: &Bv, b: &Bv, n: usize) -> Bv {
        let nb: Bv = Self::extend(b, n).into_iter().map(|l| !l).collect();
        let t = self.t;
        self.add_n(&Self::extend(a, n), &nb, t)
    }

    fn mul(&mut self, a: &Bv, b: &Bv) -> Bv {
        let n = a.len() + b.len();
        let (a, b) = (Self::extend(a, n), Self::extend(b, n));
        let f = !self.t;
        let mut acc = vec![f; n];
        for (i, &bi) in b.iter().enumerate() {
            if bi == f {
                continue;
            }
            let mut row = vec![f; n];
            for j in 0..n - i {
                row[i + j] = self.and2(a[j], bi);
            }
            acc = self.add_n(&acc, &row, f);
        }
        acc
    }

    fn term(&mut self, t: &Term) -> Bv {
        match t {
            Expr::Int(n) => self.constant(*n),
            Expr::Var(v) => self.int_var(v),
            Expr::Neg(e) => {
                let e = self.term(e);
                let zero = vec![!self.t];
                self.sub_n(&zero, &e, e.len() + 1)
            }
            Expr::Bin(op, a, b) => {
                let (a, b) = (self.term(a), self.term(b));
                match op {
                    BinOp::Add => self.add(&a, &b),
                    BinOp::Sub => self.sub_n(&a, &b, a.len().max(b.len()) + 1),
                    BinOp::Mul => self.mul(&a, &b),
                }
            }
        }
    }

    fn lt(&mut self, a: &Bv, b: &Bv) -> Lit {
        let d = self.sub_n(a, b, a.len().max(b.len()) + 1);
        *d.last().expect("non-empty")
    }

    fn eq(&mut self, a: &Bv, b: &Bv) -> Lit {
        let n = a.len().max(b.len());
        let (a, b) = (Self::extend(a, n), Self::extend(b, n));
        let mut same = Vec::with_capacity(n);
        for (&x, &y) in a.iter().zip(&b) {
            same.push(!self.xor2(x, y));
        }
        self.and_all(same)
    }

    /// Literal equivalent to `f`.
    pub fn formula(&mut self, f: &Formula) -> Lit {
        match f {
            Formula::Const(b) => {
                if *b {
                    self.t
                } else {
                    !self.t
                }
            }
            Formula::Var(v) => self.bool_var(v),
            Formula::Cmp(op, a, b) => {
                let (a, b) = (self.term(a), self.term(b));
                match op {
                    CmpOp::Eq => self.eq(&a, &b),
                    CmpOp::Ne => !self.eq(&a, &b),
                    CmpOp::Lt => self.lt(&a, &b),
                    CmpOp::Gt => self.lt(&b, &a),
                    CmpOp::Le => !self.lt(&b, &a),
                    CmpOp::Ge => !self.lt(&a, &b),
                }
            }
            Formula::Not(g) => !self.formula(g),
            Formula::And(gs) => {
                let lits: Vec<Lit> = gs.iter().map(|g| self.formula(g)).collect();
                self.and_all(lits)
            }
            Formula::Or(gs) => {
                let lits: Vec<Lit> = gs.iter().map(|g| !self.formula(g)).collect();
                !self.and_all(lits)
            }
            Formula::Iff(a, b) => {
                let (a, b) = (self.formula(a), self.formula(b));
                !self.xor2(a, b)
            }
        }
    }

    /// Makes sure every variable of `f` is known even if it folds away.
    pub fn declare(&mut self, f: &Formula) {
        f.visit_vars(&mut |name, sort| match sort {
            crate::logic::Sort::Int => {
                self.int_var(name);
            }
            crate::logic::Sort::Bool => {
                self.bool_var(name);
            }
        });
    }

    /// Reads the last satisfying assignment back into named values.
    pub fn model(&self) -> Model {
        let mut m = Model::default();
        for (name, bits) in &self.ints {
            let mut v: i64 = 0;
            for (i, &b) in bits.iter().enumerate() {
                if self.sat.model_lit(b) {
                    v |= 1 << i;
                }
            }
            let w = bits.len();
            if w < 64 && v >> (w - 1) & 1 == 1 {
                v -= 1 << w;
            }
            m.ints.insert(name.clone(), v);
        }
        for (name, &l) in &self.bools {
            m.bools.insert(name.clone(), self.sat.model_lit(l));
        }
        m
    }
}
