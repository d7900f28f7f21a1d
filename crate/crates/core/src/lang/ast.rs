use std::fmt;

use serde::{Deserialize, Serialize};

/// Statement label. Defaults to the source line number of the statement.
pub type Label = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub const ALL: [CmpOp; 6] = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge];

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn holds<T: Ord>(self, lhs: T, rhs: T) -> bool {
        match self {
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ne => lhs != rhs,
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
        }
    }
}

/// Integer expression, generic over the variable representation so the
/// same tree serves source programs (`String`) and SSA form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr<V = String> {
    Int(i64),
    Var(V),
    Neg(Box<Expr<V>>),
    Bin(BinOp, Box<Expr<V>>, Box<Expr<V>>),
}

/// Boolean predicate used by conditionals, loops and asserts.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Pred<V = String> {
    Bool(bool),
    Cmp(CmpOp, Expr<V>, Expr<V>),
    Not(Box<Pred<V>>),
    And(Box<Pred<V>>, Box<Pred<V>>),
    Or(Box<Pred<V>>, Box<Pred<V>>),
}

impl<V> Expr<V> {
    pub fn var(v: V) -> Self {
        Expr::Var(v)
    }

    pub fn bin(op: BinOp, lhs: Expr<V>, rhs: Expr<V>) -> Self {
        Expr::Bin(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn map_vars<W>(&self, f: &mut impl FnMut(&V) -> W) -> Expr<W> {
        match self {
            Expr::Int(n) => Expr::Int(*n),
            Expr::Var(v) => Expr::Var(f(v)),
            Expr::Neg(e) => Expr::Neg(Box::new(e.map_vars(f))),
            Expr::Bin(op, a, b) => Expr::Bin(*op, Box::new(a.map_vars(f)), Box::new(b.map_vars(f))),
        }
    }

    pub fn try_map_vars<W, E>(&self, f: &mut impl FnMut(&V) -> Result<W, E>) -> Result<Expr<W>, E> {
        Ok(match self {
            Expr::Int(n) => Expr::Int(*n),
            Expr::Var(v) => Expr::Var(f(v)?),
            Expr::Neg(e) => Expr::Neg(Box::new(e.try_map_vars(f)?)),
            Expr::Bin(op, a, b) => Expr::Bin(*op, Box::new(a.try_map_vars(f)?), Box::new(b.try_map_vars(f)?)),
        })
    }

    pub fn for_each_var<'a>(&'a self, f: &mut impl FnMut(&'a V)) {
        match self {
            Expr::Int(_) => {}
            Expr::Var(v) => f(v),
            Expr::Neg(e) => e.for_each_var(f),
            Expr::Bin(_, a, b) => {
                a.for_each_var(f);
                b.for_each_var(f);
            }
        }
    }

    /// Evaluates with exact arithmetic. Returns `None` when an
    /// intermediate value leaves the `i128` range or a variable is unbound.
    pub fn eval(&self, lookup: &impl Fn(&V) -> Option<i128>) -> Option<i128> {
        match self {
            Expr::Int(n) => Some(*n as i128),
            Expr::Var(v) => lookup(v),
            Expr::Neg(e) => e.eval(lookup)?.checked_neg(),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(lookup)?, b.eval(lookup)?);
                match op {
                    BinOp::Add => a.checked_add(b),
                    BinOp::Sub => a.checked_sub(b),
                    BinOp::Mul => a.checked_mul(b),
                }
            }
        }
    }
}

impl<V> Pred<V> {
    pub fn not(p: Pred<V>) -> Self {
        Pred::Not(Box::new(p))
    }

    pub fn map_vars<W>(&self, f: &mut impl FnMut(&V) -> W) -> Pred<W> {
        match self {
            Pred::Bool(b) => Pred::Bool(*b),
            Pred::Cmp(op, a, b) => Pred::Cmp(*op, a.map_vars(f), b.map_vars(f)),
            Pred::Not(p) => Pred::Not(Box::new(p.map_vars(f))),
            Pred::And(a, b) => Pred::And(Box::new(a.map_vars(f)), Box::new(b.map_vars(f))),
            Pred::Or(a, b) => Pred::Or(Box::new(a.map_vars(f)), Box::new(b.map_vars(f))),
        }
    }

    pub fn try_map_vars<W, E>(&self, f: &mut impl FnMut(&V) -> Result<W, E>) -> Result<Pred<W>, E> {
        Ok(match self {
            Pred::Bool(b) => Pred::Bool(*b),
            Pred::Cmp(op, a, b) => Pred::Cmp(*op, a.try_map_vars(f)?, b.try_map_vars(f)?),
            Pred::Not(p) => Pred::Not(Box::new(p.try_map_vars(f)?)),
            Pred::And(a, b) => Pred::And(Box::new(a.try_map_vars(f)?), Box::new(b.try_map_vars(f)?)),
            Pred::Or(a, b) => Pred::Or(Box::new(a.try_map_vars(f)?), Box::new(b.try_map_vars(f)?)),
        })
    }

    pub fn for_each_var<'a>(&'a self, f: &mut impl FnMut(&'a V)) {
        match self {
            Pred::Bool(_) => {}
            Pred::Cmp(_, a, b) => {
                a.for_each_var(f);
                b.for_each_var(f);
            }
            Pred::Not(p) => p.for_each_var(f),
            Pred::And(a, b) | Pred::Or(a, b) => {
                a.for_each_var(f);
                b.for_each_var(f);
            }
        }
    }

    pub fn eval(&self, lookup: &impl Fn(&V) -> Option<i128>) -> Option<bool> {
        Some(match self {
            Pred::Bool(b) => *b,
            Pred::Cmp(op, a, b) => op.holds(a.eval(lookup)?, b.eval(lookup)?),
            Pred::Not(p) => !p.eval(lookup)?,
            Pred::And(a, b) => a.eval(lookup)? & b.eval(lookup)?,
            Pred::Or(a, b) => a.eval(lookup)? | b.eval(lookup)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub label: Label,
    pub kind: StmtKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    Assign { lhs: String, rhs: Expr },
    If { cond: Pred, then_branch: Vec<Stmt>, else_branch: Vec<Stmt> },
    While { cond: Pred, body: Vec<Stmt> },
    Assert(Pred),
}

impl Stmt {
    pub fn is_conditional(&self) -> bool {
        matches!(self.kind, StmtKind::If { .. } | StmtKind::While { .. })
    }

    /// One-line rendering of the statement header, used in reports.
    pub fn header(&self) -> String {
        match &self.kind {
            StmtKind::Assign { lhs, rhs } => format!("{lhs} = {rhs};"),
            StmtKind::If { cond, .. } => format!("if ({cond})"),
            StmtKind::While { cond, .. } => format!("while ({cond})"),
            StmtKind::Assert(p) => format!("assert({p});"),
        }
    }
}

/// A parsed MiniImp procedure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub name: String,
    pub params: Vec<String>,
    pub body: Vec<Stmt>,
}

impl Program {
    /// Depth-first, source-order walk over every statement.
    pub fn walk(&self, f: &mut impl FnMut(&Stmt)) {
        fn go(stmts: &[Stmt], f: &mut impl FnMut(&Stmt)) {
            for s in stmts {
                f(s);
                match &s.kind {
                    StmtKind::If { then_branch, else_branch, .. } => {
                        go(then_branch, f);
                        go(else_branch, f);
                    }
                    StmtKind::While { body, .. } => go(body, f),
                    _ => {}
                }
            }
        }
        go(&self.body, f)
    }

    pub fn statements(&self) -> Vec<&Stmt> {
        let mut out = Vec::new();
        fn go<'a>(stmts: &'a [Stmt], out: &mut Vec<&'a Stmt>) {
            for s in stmts {
                out.push(s);
                match &s.kind {
                    StmtKind::If { then_branch, else_branch, .. } => {
                        go(then_branch, out);
                        go(else_branch, out);
                    }
                    StmtKind::While { body, .. } => go(body, out),
                    _ => {}
                }
            }
        }
        go(&self.body, &mut out);
        out
    }

    pub fn find(&self, label: Label) -> Option<&Stmt> {
        self.statements().into_iter().find(|s| s.label == label)
    }

    pub fn assertion(&self) -> Option<&Stmt> {
        self.body.iter().find(|s| matches!(s.kind, StmtKind::Assert(_)))
    }

    pub fn max_label(&self) -> Label {
        self.statements().iter().map(|s| s.label).max().unwrap_or(0)
    }

    pub fn has_loops(&self) -> bool {
        self.statements().iter().any(|s| matches!(s.kind, StmtKind::While { .. }))
    }

    pub fn conditional_count(&self) -> usize {
        self.statements().iter().filter(|s| s.is_conditional()).count()
    }
}

impl<V: fmt::Display> Expr<V> {
    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, ctx: u8) -> fmt::Result {
        match self {
            Expr::Int(n) if *n < 0 && ctx > 0 => write!(f, "({n})"),
            Expr::Int(n) => write!(f, "{n}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Neg(e) => {
                write!(f, "-")?;
                e.fmt_prec(f, 3)
            }
            Expr::Bin(op, a, b) => {
                let p = op.precedence();
                if p < ctx {
                    write!(f, "(")?;
                }
                a.fmt_prec(f, p)?;
                write!(f, " {} ", op.symbol())?;
                // left-associative: the right operand binds tighter
                b.fmt_prec(f, p + 1)?;
                if p < ctx {
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

impl<V: fmt::Display> fmt::Display for Expr<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl<V: fmt::Display> Pred<V> {
    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, ctx: u8) -> fmt::Result {
        match self {
            Pred::Bool(b) => write!(f, "{b}"),
            Pred::Cmp(op, a, b) => {
                if ctx > 2 {
                    write!(f, "(")?;
                }
                write!(f, "{a} {} {b}", op.symbol())?;
                if ctx > 2 {
                    write!(f, ")")?;
                }
                Ok(())
            }
            Pred::Not(p) => {
                write!(f, "!")?;
                p.fmt_prec(f, 3)
            }
            Pred::And(a, b) => {
                if ctx > 1 {
                    write!(f, "(")?;
                }
                a.fmt_prec(f, 1)?;
                write!(f, " && ")?;
                b.fmt_prec(f, 2)?;
                if ctx > 1 {
                    write!(f, ")")?;
                }
                Ok(())
            }
            Pred::Or(a, b) => {
                if ctx > 0 {
                    write!(f, "(")?;
                }
                a.fmt_prec(f, 0)?;
                write!(f, " || ")?;
                b.fmt_prec(f, 1)?;
                if ctx > 0 {
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

impl<V: fmt::Display> fmt::Display for Pred<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}
