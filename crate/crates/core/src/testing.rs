//! Shared fixtures for tests and examples.

/// The running example: `a` is the absolute value of `x`, and the fault is
/// on line 6, which should decrement instead of increment.
pub const P_SOURCE: &str = "\
int P(int x, int y) {
1: if (x >= 0)
2:   a = x;
   else
4:   a = -x;
5: if (y < 5)
6:   b = a + 1;
   else
8:   b = a + 2;
9: assert(b <= a);
}
";

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::arith::Width;
use crate::encoder::{Clause, ClauseKind, Hardness, Origin};
use crate::lang::{BinOp, CmpOp, Expr};
use crate::logic::{Formula, Model, Sort, Term, Universe};
use crate::solver::{MaxSatInstance, Weight};
use crate::ssa::StmtId;

/// Exhaustive model search, the reference for the solver. Returns `None`
/// when no assignment of the formulas' variables satisfies all of them.
///
/// Panics if the search space exceeds 2^22 assignments.
pub fn exhaustive_sat(formulas: &[Formula], width: Width) -> Option<Model> {
    let u = Universe::of(formulas).expect("well-sorted formulas");
    let vars: Vec<(&String, Sort)> = u.vars.iter().map(|(k, &s)| (k, s)).collect();
    let bits: u32 = vars.iter().map(|(_, s)| if *s == Sort::Int { width.bits() } else { 1 }).sum();
    assert!(bits <= 22, "search space too large for exhaustive search");
    for code in 0u64..1 << bits {
        let mut m = Model::default();
        let mut rest = code;
        for (name, sort) in &vars {
            match sort {
                Sort::Bool => {
                    m.bools.insert(name.to_string(), rest & 1 == 1);
                    rest >>= 1;
                }
                Sort::Int => {
                    let span = 1u64 << width.bits();
                    m.ints.insert(name.to_string(), width.min_value() + (rest % span) as i64);
                    rest >>= width.bits();
                }
            }
        }
        if formulas.iter().all(|f| f.eval(&m) == Some(true)) {
            return Some(m);
        }
    }
    None
}

const INT_VARS: [&str; 3] = ["x", "y", "z"];
const BOOL_VARS: [&str; 2] = ["p", "q"];

fn random_term(rng: &mut ChaCha8Rng, depth: u32) -> Term {
    match rng.gen_range(0..if depth == 0 { 2 } else { 5 }) {
        0 => Expr::Int(rng.gen_range(-6..=6)),
        1 => Expr::Var(INT_VARS[rng.gen_range(0..INT_VARS.len())].to_string()),
        2 => Expr::Neg(Box::new(random_term(rng, depth - 1))),
        n => {
            let op = [BinOp::Add, BinOp::Sub, BinOp::Mul][(n as usize + rng.gen_range(0..2)) % 3];
            Expr::bin(op, random_term(rng, depth - 1), random_term(rng, depth - 1))
        }
    }
}

/// Random formula over integer variables `x`, `y`, `z` and booleans `p`, `q`.
pub fn random_formula(rng: &mut ChaCha8Rng, depth: u32) -> Formula {
    match rng.gen_range(0..if depth == 0 { 3 } else { 7 }) {
        0 => Formula::var(BOOL_VARS[rng.gen_range(0..BOOL_VARS.len())]),
        1 | 2 => Formula::Cmp(CmpOp::ALL[rng.gen_range(0..6)], random_term(rng, 1), random_term(rng, 1)),
        3 => Formula::not(random_formula(rng, depth - 1)),
        4 => Formula::and((0..rng.gen_range(1..=3)).map(|_| random_formula(rng, depth - 1)).collect()),
        5 => Formula::or((0..rng.gen_range(1..=3)).map(|_| random_formula(rng, depth - 1)).collect()),
        _ => Formula::iff(random_formula(rng, depth - 1), random_formula(rng, depth - 1)),
    }
}

/// Random MAX-SAT instance over 4-bit integers with satisfiable hard part,
/// up to 8 soft clauses and weights from {1/2, 1, 2, 3, top}.
pub fn random_instance(seed: u64) -> MaxSatInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = Width::new(4).expect("valid width");
    loop {
        let mut clauses = Vec::new();
        let hard = rng.gen_range(0..=2);
        let soft = rng.gen_range(1..=8);
        for i in 0..hard + soft {
            let is_soft = i >= hard;
            let weight = is_soft.then(|| match rng.gen_range(0..5) {
                0 => Weight::finite(1, 2),
                1 => Weight::one(),
                2 => Weight::finite(2, 1),
                3 => Weight::finite(3, 1),
                _ => Weight::Top,
            });
            clauses.push(Clause {
                id: i as u32 + 1,
                kind: ClauseKind::Assign,
                constraint: random_formula(&mut rng, 2),
                origin: Origin::Stmt(StmtId::line(i as u32 + 1)),
                hardness: if is_soft { Hardness::Soft } else { Hardness::Hard },
                weight,
                concretized: false,
            });
        }
        let hard_fs: Vec<Formula> = clauses.iter().filter(|c| !c.is_soft()).map(|c| c.constraint.clone()).collect();
        if exhaustive_sat(&hard_fs, width).is_some() {
            return MaxSatInstance::new(width, clauses);
        }
    }
}
