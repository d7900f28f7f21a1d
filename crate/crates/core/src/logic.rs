//! Constraint language shared by the encoder and the solver: boolean
//! combinations of comparisons over exact integer terms whose variables are
//! signed `W`-bit values.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::arith::{signed_bits, Width};
use crate::lang::{BinOp, CmpOp, Expr, Pred};

/// Integer term. Variables are named solver variables.
pub type Term = Expr<String>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Const(bool),
    Var(String),
    Cmp(CmpOp, Term, Term),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Iff(Box<Formula>, Box<Formula>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sort {
    Int,
    Bool,
}

/// Variable universe: every variable with its sort. Integers share one width.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Universe {
    pub vars: BTreeMap<String, Sort>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("variable `{0}` is used both as an integer and as a boolean")]
pub struct SortConflict(pub String);

impl Universe {
    pub fn add(&mut self, name: &str, sort: Sort) -> Result<(), SortConflict> {
        match self.vars.get(name) {
            Some(&s) if s != sort => Err(SortConflict(name.to_string())),
            Some(_) => Ok(()),
            None => {
                self.vars.insert(name.to_string(), sort);
                Ok(())
            }
        }
    }

    pub fn add_formula(&mut self, f: &Formula) -> Result<(), SortConflict> {
        let mut res = Ok(());
        f.visit_vars(&mut |name, sort| {
            if res.is_ok() {
                res = self.add(name, sort);
            }
        });
        res
    }

    pub fn of<'a>(formulas: impl IntoIterator<Item = &'a Formula>) -> Result<Universe, SortConflict> {
        let mut u = Universe::default();
        for f in formulas {
            u.add_formula(f)?;
        }
        Ok(u)
    }
}

/// Assignment to every variable of a universe.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Model {
    pub ints: BTreeMap<String, i64>,
    pub bools: BTreeMap<String, bool>,
}

impl Model {
    pub fn int(&self, name: &str) -> Option<i64> {
        self.ints.get(name).copied()
    }

    pub fn bool(&self, name: &str) -> Option<bool> {
        self.bools.get(name).copied()
    }
}

impl Formula {
    pub fn and(parts: Vec<Formula>) -> Formula {
        Formula::And(parts)
    }

    pub fn or(parts: Vec<Formula>) -> Formula {
        Formula::Or(parts)
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    pub fn var(name: impl Into<String>) -> Formula {
        Formula::Var(name.into())
    }

    pub fn eq(a: Term, b: Term) -> Formula {
        Formula::Cmp(CmpOp::Eq, a, b)
    }

    pub fn from_pred<V>(p: &Pred<V>, name: &mut impl FnMut(&V) -> String) -> Formula {
        match p {
            Pred::Bool(b) => Formula::Const(*b),
            Pred::Cmp(op, a, b) => Formula::Cmp(*op, a.map_vars(name), b.map_vars(name)),
            Pred::Not(q) => Formula::not(Formula::from_pred(q, name)),
            Pred::And(a, b) => Formula::And(vec![Formula::from_pred(a, name), Formula::from_pred(b, name)]),
            Pred::Or(a, b) => Formula::Or(vec![Formula::from_pred(a, name), Formula::from_pred(b, name)]),
        }
    }

    pub fn visit_vars(&self, f: &mut impl FnMut(&str, Sort)) {
        match self {
            Formula::Const(_) => {}
            Formula::Var(v) => f(v, Sort::Bool),
            Formula::Cmp(_, a, b) => {
                a.for_each_var(&mut |v| f(v, Sort::Int));
                b.for_each_var(&mut |v| f(v, Sort::Int));
            }
            Formula::Not(g) => g.visit_vars(f),
            Formula::And(gs) | Formula::Or(gs) => gs.iter().for_each(|g| g.visit_vars(f)),
            Formula::Iff(a, b) => {
                a.visit_vars(f);
                b.visit_vars(f);
            }
        }
    }

    /// Rewrites integer terms bottom-up.
    pub fn map_terms(&self, f: &mut impl FnMut(&Term) -> Term) -> Formula {
        match self {
            Formula::Const(_) | Formula::Var(_) => self.clone(),
            Formula::Cmp(op, a, b) => Formula::Cmp(*op, f(a), f(b)),
            Formula::Not(g) => Formula::not(g.map_terms(f)),
            Formula::And(gs) => Formula::And(gs.iter().map(|g| g.map_terms(f)).collect()),
            Formula::Or(gs) => Formula::Or(gs.iter().map(|g| g.map_terms(f)).collect()),
            Formula::Iff(a, b) => Formula::iff(a.map_terms(f), b.map_terms(f)),
        }
    }

    /// Evaluates under `model` with exact arithmetic. Integer variables are
    /// read as-is; the caller is responsible for them being in range.
    /// Returns `None` if a variable is unassigned.
    pub fn eval(&self, model: &Model) -> Option<bool> {
        let lookup = |v: &String| model.ints.get(v).map(|&x| x as i128);
        Some(match self {
            Formula::Const(b) => *b,
            Formula::Var(v) => model.bool(v)?,
            Formula::Cmp(op, a, b) => op.holds(a.eval(&lookup)?, b.eval(&lookup)?),
            Formula::Not(g) => !g.eval(model)?,
            Formula::And(gs) => {
                let mut all = true;
                for g in gs {
                    all &= g.eval(model)?;
                }
                all
            }
            Formula::Or(gs) => {
                let mut any = false;
                for g in gs {
                    any |= g.eval(model)?;
                }
                any
            }
            Formula::Iff(a, b) => a.eval(model)? == b.eval(model)?,
        })
    }

    /// Renders the formula as an S-expression (the dump format).
    pub fn to_sexpr(&self) -> String {
        let mut s = String::new();
        write_formula(&mut s, self);
        s
    }
}

/// Value range of every integer variable: the signed `default` width unless
/// listed in `ranges`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarWidths {
    pub default: Width,
    pub ranges: BTreeMap<String, (i64, i64)>,
}

impl VarWidths {
    pub fn uniform(width: Width) -> Self {
        VarWidths { default: width, ranges: BTreeMap::new() }
    }

    pub fn range(&self, name: &str) -> (i64, i64) {
        self.ranges.get(name).copied().unwrap_or((self.default.min_value(), self.default.max_value()))
    }

    /// Bits of the smallest two's complement vector holding the range.
    pub fn bits(&self, name: &str) -> u32 {
        let (lo, hi) = self.range(name);
        signed_bits(lo as i128).max(signed_bits(hi as i128))
    }

    pub fn contains(&self, name: &str, v: i128) -> bool {
        let (lo, hi) = self.range(name);
        (lo as i128..=hi as i128).contains(&v)
    }
}

impl From<Width> for VarWidths {
    fn from(w: Width) -> Self {
        VarWidths::uniform(w)
    }
}

/// Bits needed to hold every value `t` can take when its variables range
/// over their widths, so that arithmetic on it is exact.
pub fn term_bits(t: &Term, widths: &VarWidths) -> u32 {
    match t {
        Expr::Int(n) => signed_bits(*n as i128),
        Expr::Var(v) => widths.bits(v),
        Expr::Neg(e) => term_bits(e, widths) + 1,
        Expr::Bin(BinOp::Mul, a, b) => term_bits(a, widths) + term_bits(b, widths),
        Expr::Bin(_, a, b) => term_bits(a, widths).max(term_bits(b, widths)) + 1,
    }
}

/// Interval of the values `t` can take when its variables range over
/// theirs. Bounds saturate at the `i128` limits.
pub fn term_range(t: &Term, widths: &VarWidths) -> (i128, i128) {
    match t {
        Expr::Int(n) => (*n as i128, *n as i128),
        Expr::Var(v) => {
            let (lo, hi) = widths.range(v);
            (lo as i128, hi as i128)
        }
        Expr::Neg(e) => {
            let (lo, hi) = term_range(e, widths);
            (hi.saturating_neg(), lo.saturating_neg())
        }
        Expr::Bin(op, a, b) => {
            let ((al, ah), (bl, bh)) = (term_range(a, widths), term_range(b, widths));
            match op {
                BinOp::Add => (al.saturating_add(bl), ah.saturating_add(bh)),
                BinOp::Sub => (al.saturating_sub(bh), ah.saturating_sub(bl)),
                BinOp::Mul => {
                    let corners = [al.saturating_mul(bl), al.saturating_mul(bh), ah.saturating_mul(bl), ah.saturating_mul(bh)];
                    (*corners.iter().min().expect("four corners"), *corners.iter().max().expect("four corners"))
                }
            }
        }
    }
}

/// Widest term of a formula, in bits.
pub fn formula_bits(f: &Formula, widths: &VarWidths) -> u32 {
    match f {
        Formula::Const(_) | Formula::Var(_) => 0,
        Formula::Cmp(_, a, b) => term_bits(a, widths).max(term_bits(b, widths)),
        Formula::Not(g) => formula_bits(g, widths),
        Formula::And(gs) | Formula::Or(gs) => gs.iter().map(|g| formula_bits(g, widths)).max().unwrap_or(0),
        Formula::Iff(a, b) => formula_bits(a, widths).max(formula_bits(b, widths)),
    }
}

/// Largest term width the solver and interpreter both handle exactly.
pub const MAX_TERM_BITS: u32 = 127;

/// Checks that every integer in `model` fits the width of its variable.
pub fn model_in_range(model: &Model, widths: &VarWidths) -> bool {
    model.ints.iter().all(|(k, &v)| widths.contains(k, v as i128))
}

fn write_term(out: &mut String, t: &Term) {
    match t {
        Expr::Int(n) => out.push_str(&n.to_string()),
        Expr::Var(v) => out.push_str(v),
        Expr::Neg(e) => {
            out.push_str("(- ");
            write_term(out, e);
            out.push(')');
        }
        Expr::Bin(op, a, b) => {
            out.push('(');
            out.push_str(op.symbol());
            out.push(' ');
            write_term(out, a);
            out.push(' ');
            write_term(out, b);
            out.push(')');
        }
    }
}

fn cmp_sexpr(op: CmpOp) -> &'static str {
    match op {
        CmpOp::Eq => "=",
        CmpOp::Ne => "distinct",
        CmpOp::Lt => "<",
        CmpOp::Le => "<=",
        CmpOp::Gt => ">",
        CmpOp::Ge => ">=",
    }
}

fn write_formula(out: &mut String, f: &Formula) {
    match f {
        Formula::Const(b) => out.push_str(if *b { "true" } else { "false" }),
        Formula::Var(v) => out.push_str(v),
        Formula::Cmp(op, a, b) => {
            out.push('(');
            out.push_str(cmp_sexpr(*op));
            out.push(' ');
            write_term(out, a);
            out.push(' ');
            write_term(out, b);
            out.push(')');
        }
        Formula::Not(g) => {
            out.push_str("(not ");
            write_formula(out, g);
            out.push(')');
        }
        Formula::And(gs) | Formula::Or(gs) => {
            out.push_str(if matches!(f, Formula::And(_)) { "(and" } else { "(or" });
            for g in gs {
                out.push(' ');
                write_formula(out, g);
            }
            out.push(')');
        }
        Formula::Iff(a, b) => {
            out.push_str("(iff ");
            write_formula(out, a);
            out.push(' ');
            write_formula(out, b);
            out.push(')');
        }
    }
}

impl fmt::Display for Formula {
    /// Human-readable infix form used in reports.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn atom(g: &Formula) -> bool {
            matches!(g, Formula::Const(_) | Formula::Var(_) | Formula::Not(_))
        }
        fn cmp_symbol(op: CmpOp) -> &'static str {
            if op == CmpOp::Eq {
                "="
            } else {
                op.symbol()
            }
        }
        match self {
            Formula::Const(b) => write!(f, "{b}"),
            Formula::Var(v) => write!(f, "{v}"),
            Formula::Cmp(op, a, b) => write!(f, "{a} {} {b}", cmp_symbol(*op)),
            Formula::Not(g) if atom(g) => write!(f, "!{g}"),
            Formula::Not(g) => write!(f, "!({g})"),
            Formula::And(gs) | Formula::Or(gs) => {
                let sep = if matches!(self, Formula::And(_)) { " && " } else { " || " };
                if gs.is_empty() {
                    return write!(f, "{}", matches!(self, Formula::And(_)));
                }
                for (i, g) in gs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "{sep}")?;
                    }
                    if atom(g) {
                        write!(f, "{g}")?;
                    } else {
                        write!(f, "({g})")?;
                    }
                }
                Ok(())
            }
            Formula::Iff(a, b) => {
                let side = |g: &Formula| if atom(g) { g.to_string() } else { format!("({g})") };
                write!(f, "{} = {}", side(a), side(b))
            }
        }
    }
}

/// Parser for the S-expression constraint syntax written by [`Formula::to_sexpr`].
pub mod sexpr {
    use super::*;

    #[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
    #[error("constraint syntax error at offset {offset}: {msg}")]
    pub struct SexprError {
        pub offset: usize,
        pub msg: String,
    }

    #[derive(Debug, Clone, PartialEq, Eq)]
    enum Node {
        Atom(String, usize),
        List(Vec<Node>, usize),
    }

    impl Node {
        fn offset(&self) -> usize {
            match self {
                Node::Atom(_, o) | Node::List(_, o) => *o,
            }
        }
    }

    const MAX_DEPTH: usize = 256;

    fn err<T>(offset: usize, msg: impl Into<String>) -> Result<T, SexprError> {
        Err(SexprError { offset, msg: msg.into() })
    }

    fn read(src: &str) -> Result<Node, SexprError> {
        let bytes = src.as_bytes();
        let mut stack: Vec<(Vec<Node>, usize)> = Vec::new();
        let mut result: Option<Node> = None;
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i];
            if c.is_ascii_whitespace() {
                i += 1;
                continue;
            }
            if result.is_some() {
                return err(i, "trailing input after expression");
            }
            let node = match c {
                b'(' => {
                    if stack.len() >= MAX_DEPTH {
                        return err(i, "nesting too deep");
                    }
                    stack.push((Vec::new(), i));
                    i += 1;
                    continue;
                }
                b')' => {
                    let Some((items, start)) = stack.pop() else {
                        return err(i, "unbalanced `)`");
                    };
                    i += 1;
                    Node::List(items, start)
                }
                _ => {
                    let start = i;
                    while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'(' && bytes[i] != b')' {
                        i += 1;
                    }
                    Node::Atom(src[start..i].to_string(), start)
                }
            };
            match stack.last_mut() {
                Some((items, _)) => items.push(node),
                None => result = Some(node),
            }
        }
        if let Some((_, start)) = stack.last() {
            return err(*start, "unclosed `(`");
        }
        result.ok_or(SexprError { offset: src.len(), msg: "empty constraint".into() })
    }

    fn is_name(s: &str) -> bool {
        let mut chars = s.chars();
        matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
            && s.chars().all(|c| c.is_ascii_alphanumeric() || "_[]#.@!".contains(c))
    }

    fn term(n: &Node) -> Result<Term, SexprError> {
        match n {
            Node::Atom(a, o) => {
                if let Ok(v) = a.parse::<i64>() {
                    Ok(Expr::Int(v))
                } else if is_name(a) {
                    Ok(Expr::Var(a.clone()))
                } else {
                    err(*o, format!("bad term `{a}`"))
                }
            }
            Node::List(items, o) => {
                let head = match items.first() {
                    Some(Node::Atom(h, _)) => h.as_str(),
                    _ => return err(*o, "expected operator"),
                };
                let args = &items[1..];
                match (head, args.len()) {
                    ("-", 1) => Ok(Expr::Neg(Box::new(term(&args[0])?))),
                    ("+" | "-" | "*", 2) => {
                        let op = match head {
                            "+" => BinOp::Add,
                            "-" => BinOp::Sub,
                            _ => BinOp::Mul,
                        };
                        Ok(Expr::bin(op, term(&args[0])?, term(&args[1])?))
                    }
                    _ => err(*o, format!("bad term operator `{head}` with {} operands", args.len())),
                }
            }
        }
    }

    fn formula(n: &Node) -> Result<Formula, SexprError> {
        match n {
            Node::Atom(a, o) => match a.as_str() {
                "true" => Ok(Formula::Const(true)),
                "false" => Ok(Formula::Const(false)),
                _ if is_name(a) => Ok(Formula::Var(a.clone())),
                _ => err(*o, format!("bad formula `{a}`")),
            },
            Node::List(items, o) => {
                let head = match items.first() {
                    Some(Node::Atom(h, _)) => h.as_str(),
                    _ => return err(*o, "expected operator"),
                };
                let args = &items[1..];
                let cmp = match head {
                    "=" => Some(CmpOp::Eq),
                    "distinct" => Some(CmpOp::Ne),
                    "<" => Some(CmpOp::Lt),
                    "<=" => Some(CmpOp::Le),
                    ">" => Some(CmpOp::Gt),
                    ">=" => Some(CmpOp::Ge),
                    _ => None,
                };
                if let Some(op) = cmp {
                    if args.len() != 2 {
                        return err(*o, format!("`{head}` takes two operands"));
                    }
                    return Ok(Formula::Cmp(op, term(&args[0])?, term(&args[1])?));
                }
                match (head, args.len()) {
                    ("not", 1) => Ok(Formula::not(formula(&args[0])?)),
                    ("and", _) => Ok(Formula::And(args.iter().map(formula).collect::<Result<_, _>>()?)),
                    ("or", _) => Ok(Formula::Or(args.iter().map(formula).collect::<Result<_, _>>()?)),
                    ("iff", 2) => Ok(Formula::iff(formula(&args[0])?, formula(&args[1])?)),
                    _ => err(n.offset(), format!("bad formula operator `{head}` with {} operands", args.len())),
                }
            }
        }
    }

    pub fn parse_formula(src: &str) -> Result<Formula, SexprError> {
        formula(&read(src)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> Term {
        Expr::Var(s.into())
    }

    #[test]
    fn infix_rendering() {
        let phi = Formula::or(vec![
            Formula::and(vec![Formula::var("guard[1]"), Formula::eq(v("a_3"), v("a_1"))]),
            Formula::and(vec![Formula::not(Formula::var("guard[1]")), Formula::eq(v("a_3"), v("a_2"))]),
        ]);
        assert_eq!(phi.to_string(), "(guard[1] && (a_3 = a_1)) || (!guard[1] && (a_3 = a_2))");
        let g = Formula::iff(Formula::var("guard[5]"), Formula::Cmp(CmpOp::Lt, v("y_1"), Expr::Int(5)));
        assert_eq!(g.to_string(), "guard[5] = (y_1 < 5)");
    }

    #[test]
    fn sexpr_roundtrip() {
        let f = Formula::or(vec![
            Formula::iff(Formula::var("g"), Formula::Cmp(CmpOp::Ge, v("x_1"), Expr::Int(-3))),
            Formula::not(Formula::eq(v("b_1"), Expr::bin(BinOp::Mul, Expr::Neg(Box::new(v("a"))), Expr::Int(2)))),
            Formula::Cmp(CmpOp::Ne, v("a"), v("b")),
        ]);
        let text = f.to_sexpr();
        assert_eq!(sexpr::parse_formula(&text).unwrap(), f);
    }

    #[test]
    fn sexpr_errors() {
        assert!(sexpr::parse_formula("(and x").is_err());
        assert!(sexpr::parse_formula("(+ 1 2)").is_err());
        assert!(sexpr::parse_formula("x y").is_err());
        assert!(sexpr::parse_formula(")").is_err());
    }

    #[test]
    fn sort_conflicts_detected() {
        let f = Formula::and(vec![Formula::var("x"), Formula::eq(v("x"), Expr::Int(1))]);
        assert!(Universe::of([&f]).is_err());
    }
}
