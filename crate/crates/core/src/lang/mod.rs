//! MiniImp frontend: parsing, validation, pretty-printing, a reference
//! interpreter and control-flow graphs.

pub mod ast;
pub mod cfg;
pub mod interp;
mod parser;
mod pretty;
mod validate;

pub use ast::{BinOp, CmpOp, Expr, Label, Pred, Program, Stmt, StmtKind};
pub use cfg::{build_cfg, Cfg, CfgBranch, CfgNode, EdgeKind};
pub use parser::{parse, parse_pred, parse_unasserted};
pub use pretty::pretty;
pub use validate::{validate, ValidationMode};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LangError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: u32, col: u32, msg: String },
    #[error("{}{msg}", label.map(|l| format!("statement {l}: ")).unwrap_or_default())]
    Semantic { label: Option<Label>, msg: String },
}
