//! Recursive-descent parser for MiniImp (grammar in `docs/lang.md`).

use std::fmt;

use super::ast::{BinOp, CmpOp, Expr, Label, Pred, Program, Stmt, StmtKind};
use super::validate::{validate, ValidationMode};
use super::LangError;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(u64),
    Kw(Keyword),
    Sym(&'static str),
    Eof,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Keyword {
    Int,
    If,
    Else,
    While,
    Assert,
    True,
    False,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Int(n) => write!(f, "integer `{n}`"),
            Tok::Kw(k) => write!(f, "keyword `{}`", format!("{k:?}").to_lowercase()),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: u32,
    col: u32,
}

const SYMBOLS: [&str; 20] = [
    "==", "!=", "<=", ">=", "&&", "||", "<", ">", "=", "!", "+", "-", "*", "(", ")", "{", "}", ";", ",", ":",
];

fn lex(src: &str) -> Result<Vec<Token>, LangError> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    while i < bytes.len() {
        let c = bytes[i];
        if c == b'\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let (start_line, start_col) = (line, col);
        if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let text = &src[start..i];
            let n: u64 = text.parse().map_err(|_| LangError::Syntax {
                line: start_line,
                col: start_col,
                msg: format!("integer literal `{text}` is too large"),
            })?;
            col += (i - start) as u32;
            out.push(Token { tok: Tok::Int(n), line: start_line, col: start_col });
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let word = &src[start..i];
            col += (i - start) as u32;
            let tok = match word {
                "int" => Tok::Kw(Keyword::Int),
                "if" => Tok::Kw(Keyword::If),
                "else" => Tok::Kw(Keyword::Else),
                "while" => Tok::Kw(Keyword::While),
                "assert" => Tok::Kw(Keyword::Assert),
                "true" => Tok::Kw(Keyword::True),
                "false" => Tok::Kw(Keyword::False),
                _ => Tok::Ident(word.to_string()),
            };
            out.push(Token { tok, line: start_line, col: start_col });
            continue;
        }
        let rest = &src[i..];
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(sym) => {
                i += sym.len();
                col += sym.len() as u32;
                out.push(Token { tok: Tok::Sym(sym), line: start_line, col: start_col });
            }
            None => {
                let ch = rest.chars().next().unwrap_or('?');
                return Err(LangError::Syntax {
                    line: start_line,
                    col: start_col,
                    msg: format!("unexpected character `{ch}`"),
                });
            }
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    depth: usize,
}

// Bounds recursion on adversarial input (deeply nested parens/blocks).
const MAX_DEPTH: usize = 200;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let idx = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[idx].tok
    }

    fn here(&self) -> (u32, u32) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T, LangError> {
        let (line, col) = self.here();
        Err(LangError::Syntax { line, col, msg: msg.into() })
    }

    fn expected<T>(&self, what: &str) -> Result<T, LangError> {
        self.error(format!("expected {what}, found {}", self.peek()))
    }

    fn eat_sym(&mut self, sym: &str) -> bool {
        if matches!(self.peek(), Tok::Sym(s) if *s == sym) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, sym: &str) -> Result<(), LangError> {
        if self.eat_sym(sym) {
            Ok(())
        } else {
            self.expected(&format!("`{sym}`"))
        }
    }

    fn eat_kw(&mut self, kw: Keyword) -> bool {
        if *self.peek() == Tok::Kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<String, LangError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.expected("identifier"),
        }
    }

    fn enter(&mut self) -> Result<(), LangError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return self.error("nesting too deep");
        }
        Ok(())
    }

    fn program(&mut self) -> Result<Program, LangError> {
        if !self.eat_kw(Keyword::Int) {
            if let Tok::Ident(ty) = self.peek().clone() {
                return Err(LangError::Semantic {
                    label: None,
                    msg: format!("unsupported return type `{ty}`: only `int` is allowed"),
                });
            }
            return self.expected("`int`");
        }
        let name = self.ident()?;
        self.expect_sym("(")?;
        let mut params = Vec::new();
        if !self.eat_sym(")") {
            loop {
                if !self.eat_kw(Keyword::Int) {
                    if let (Tok::Ident(ty), Tok::Ident(p)) = (self.peek().clone(), self.peek_at(1).clone()) {
                        return Err(LangError::Semantic {
                            label: None,
                            msg: format!("parameter `{p}` has non-integer type `{ty}`"),
                        });
                    }
                    return self.expected("`int`");
                }
                params.push(self.ident()?);
                if self.eat_sym(")") {
                    break;
                }
                self.expect_sym(",")?;
            }
        }
        self.expect_sym("{")?;
        let mut body = Vec::new();
        while !self.eat_sym("}") {
            body.push(self.stmt()?);
        }
        if *self.peek() != Tok::Eof {
            return self.expected("end of input");
        }
        Ok(Program { name, params, body })
    }

    fn stmt(&mut self) -> Result<Stmt, LangError> {
        self.enter()?;
        let (line, _) = self.here();
        let mut label: Label = line;
        if let (Tok::Int(n), Tok::Sym(":")) = (self.peek().clone(), self.peek_at(1).clone()) {
            label = u32::try_from(n).or_else(|_| self.error("statement label out of range"))?;
            self.bump();
            self.bump();
        }
        let kind = match self.peek().clone() {
            Tok::Kw(Keyword::If) => {
                self.bump();
                self.expect_sym("(")?;
                let cond = self.pred()?;
                self.expect_sym(")")?;
                let then_branch = self.block()?;
                let else_branch = if self.eat_kw(Keyword::Else) { self.block()? } else { Vec::new() };
                StmtKind::If { cond, then_branch, else_branch }
            }
            Tok::Kw(Keyword::While) => {
                self.bump();
                self.expect_sym("(")?;
                let cond = self.pred()?;
                self.expect_sym(")")?;
                let body = self.block()?;
                StmtKind::While { cond, body }
            }
            Tok::Kw(Keyword::Assert) => {
                self.bump();
                self.expect_sym("(")?;
                let p = self.pred()?;
                self.expect_sym(")")?;
                self.expect_sym(";")?;
                StmtKind::Assert(p)
            }
            Tok::Kw(Keyword::Int) => {
                // `int v = e;` is accepted as a plain assignment.
                self.bump();
                let lhs = self.ident()?;
                self.expect_sym("=")?;
                let rhs = self.expr()?;
                self.expect_sym(";")?;
                StmtKind::Assign { lhs, rhs }
            }
            Tok::Ident(_) => {
                let lhs = self.ident()?;
                self.expect_sym("=")?;
                let rhs = self.expr()?;
                self.expect_sym(";")?;
                StmtKind::Assign { lhs, rhs }
            }
            _ => return self.expected("statement"),
        };
        self.depth -= 1;
        Ok(Stmt { label, kind })
    }

    fn block(&mut self) -> Result<Vec<Stmt>, LangError> {
        if self.eat_sym("{") {
            let mut out = Vec::new();
            while !self.eat_sym("}") {
                if *self.peek() == Tok::Eof {
                    return self.expected("`}`");
                }
                out.push(self.stmt()?);
            }
            Ok(out)
        } else {
            Ok(vec![self.stmt()?])
        }
    }

    fn pred(&mut self) -> Result<Pred, LangError> {
        self.enter()?;
        let mut lhs = self.pred_and()?;
        while self.eat_sym("||") {
            let rhs = self.pred_and()?;
            lhs = Pred::Or(Box::new(lhs), Box::new(rhs));
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn pred_and(&mut self) -> Result<Pred, LangError> {
        let mut lhs = self.pred_not()?;
        while self.eat_sym("&&") {
            let rhs = self.pred_not()?;
            lhs = Pred::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn pred_not(&mut self) -> Result<Pred, LangError> {
        self.enter()?;
        let p = if self.eat_sym("!") {
            Pred::Not(Box::new(self.pred_not()?))
        } else if self.eat_kw(Keyword::True) {
            Pred::Bool(true)
        } else if self.eat_kw(Keyword::False) {
            Pred::Bool(false)
        } else if matches!(self.peek(), Tok::Sym("(")) {
            // `(` opens either a parenthesized predicate or the left operand
            // of a comparison; try the comparison first and backtrack.
            let save = (self.pos, self.depth);
            match self.comparison() {
                Ok(p) => p,
                Err(_) => {
                    (self.pos, self.depth) = save;
                    self.expect_sym("(")?;
                    let p = self.pred()?;
                    self.expect_sym(")")?;
                    p
                }
            }
        } else {
            self.comparison()?
        };
        self.depth -= 1;
        Ok(p)
    }

    fn comparison(&mut self) -> Result<Pred, LangError> {
        let lhs = self.expr()?;
        let op = match self.peek() {
            Tok::Sym("==") => CmpOp::Eq,
            Tok::Sym("!=") => CmpOp::Ne,
            Tok::Sym("<") => CmpOp::Lt,
            Tok::Sym("<=") => CmpOp::Le,
            Tok::Sym(">") => CmpOp::Gt,
            Tok::Sym(">=") => CmpOp::Ge,
            _ => return self.expected("comparison operator"),
        };
        self.bump();
        let rhs = self.expr()?;
        Ok(Pred::Cmp(op, lhs, rhs))
    }

    fn expr(&mut self) -> Result<Expr, LangError> {
        self.enter()?;
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Sym("+") => BinOp::Add,
                Tok::Sym("-") => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, LangError> {
        let mut lhs = self.unary()?;
        while self.eat_sym("*") {
            let rhs = self.unary()?;
            lhs = Expr::bin(BinOp::Mul, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, LangError> {
        self.enter()?;
        let e = if self.eat_sym("-") {
            if let Tok::Int(n) = self.peek().clone() {
                self.bump();
                if n > i64::MAX as u64 {
                    return self.error("integer literal out of range");
                }
                Expr::Int(-(n as i64))
            } else {
                Expr::Neg(Box::new(self.unary()?))
            }
        } else {
            match self.bump() {
                Tok::Int(n) => {
                    if n > i64::MAX as u64 {
                        self.pos -= 1;
                        return self.error("integer literal out of range");
                    }
                    Expr::Int(n as i64)
                }
                Tok::Ident(v) => Expr::Var(v),
                Tok::Sym("(") => {
                    let e = self.expr()?;
                    self.expect_sym(")")?;
                    e
                }
                _ => {
                    self.pos -= 1;
                    return self.expected("expression");
                }
            }
        };
        self.depth -= 1;
        Ok(e)
    }
}

fn parse_raw(source: &str) -> Result<Program, LangError> {
    let toks = lex(source)?;
    Parser { toks, pos: 0, depth: 0 }.program()
}

/// Parses and validates a complete program, which must carry exactly one
/// top-level `assert` as its final statement.
pub fn parse(source: &str) -> Result<Program, LangError> {
    let p = parse_raw(source)?;
    validate(&p, ValidationMode::RequireAssert)?;
    Ok(p)
}

/// Parses a program that may omit its assertion; the test harness attaches
/// one per test via [`Program::with_assertion`].
pub fn parse_unasserted(source: &str) -> Result<Program, LangError> {
    let p = parse_raw(source)?;
    validate(&p, ValidationMode::AssertOptional)?;
    Ok(p)
}

/// Parses a standalone predicate, e.g. an assertion from a test-suite file.
pub fn parse_pred(source: &str) -> Result<Pred, LangError> {
    let toks = lex(source)?;
    let mut p = Parser { toks, pos: 0, depth: 0 };
    let pred = p.pred()?;
    if *p.peek() != Tok::Eof {
        return p.expected("end of predicate");
    }
    Ok(pred)
}

impl Program {
    /// Returns a copy with `pred` installed as the program's assertion,
    /// replacing any existing one. A fresh assert gets the next free label.
    pub fn with_assertion(&self, pred: Pred) -> Result<Program, LangError> {
        let mut p = self.clone();
        let label = match p.body.iter().position(|s| matches!(s.kind, StmtKind::Assert(_))) {
            Some(idx) => p.body.remove(idx).label,
            None => p.max_label() + 1,
        };
        p.body.push(Stmt { label, kind: StmtKind::Assert(pred) });
        validate(&p, ValidationMode::RequireAssert)?;
        Ok(p)
    }

    /// Removes the assertion, if any.
    pub fn without_assertion(&self) -> Program {
        let mut p = self.clone();
        p.body.retain(|s| !matches!(s.kind, StmtKind::Assert(_)));
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const P: &str = "\
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

    #[test]
    fn parses_running_example() {
        let p = parse(P).unwrap();
        assert_eq!(p.params, vec!["x", "y"]);
        let labels: Vec<_> = p.statements().iter().map(|s| s.label).collect();
        assert_eq!(labels, vec![1, 2, 4, 5, 6, 8, 9]);
        assert!(matches!(p.find(1).unwrap().kind, StmtKind::If { .. }));
        assert!(matches!(p.find(5).unwrap().kind, StmtKind::If { .. }));
        assert!(matches!(p.find(9).unwrap().kind, StmtKind::Assert(_)));
    }

    #[test]
    fn labels_default_to_line_numbers() {
        let p = parse("int f(int x) {\n  y = x;\n\n  assert(y == x);\n}\n").unwrap();
        let labels: Vec<_> = p.statements().iter().map(|s| s.label).collect();
        assert_eq!(labels, vec![2, 4]);
    }

    #[test]
    fn degenerate_program() {
        let p = parse("int f() { assert(true); }").unwrap();
        assert_eq!(p.body.len(), 1);
    }

    #[test]
    fn use_before_def_rejected() {
        let err = parse("int f(int x) {\n b = a + 1;\n assert(b > 0);\n}").unwrap_err();
        assert!(matches!(err, LangError::Semantic { label: Some(2), .. }), "{err:?}");
    }

    #[test]
    fn missing_assert_rejected() {
        assert!(matches!(parse("int f(int x) { y = x; }"), Err(LangError::Semantic { .. })));
        assert!(parse_unasserted("int f(int x) { y = x; }").is_ok());
    }

    #[test]
    fn non_integer_param_rejected() {
        let err = parse("int f(bool x) { assert(true); }").unwrap_err();
        assert!(err.to_string().contains("non-integer"), "{err}");
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse("int f(int x) {\n  y = x +;\n}").unwrap_err();
        match err {
            LangError::Syntax { line, col, .. } => assert_eq!((line, col), (2, 10)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parenthesized_predicates_and_expressions() {
        let p = parse_pred("(x + 1) * 2 > y && !(y == 3 || (x < 0))").unwrap();
        assert_eq!(p.to_string(), "(x + 1) * 2 > y && !(y == 3 || x < 0)");
    }

    #[test]
    fn with_assertion_appends_after_last_label() {
        let p = parse_unasserted("int f(int x) {\n y = x;\n}").unwrap();
        let q = p.with_assertion(parse_pred("y == 3").unwrap()).unwrap();
        assert_eq!(q.assertion().unwrap().label, 3);
    }
}
