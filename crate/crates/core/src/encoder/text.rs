//! Line format for clauses:
//! `<id> <hard|soft> <weight|-> <origin> <kind>[*] <constraint>`,
//! where a `*` after the kind marks a concretized clause and the
//! constraint is an S-expression.

use super::{Clause, ClauseId, ClauseKind, Hardness, Origin};
use crate::logic::sexpr::{parse_formula, SexprError};
use crate::solver::{Weight, WeightParseError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TextError {
    #[error("expected 6 fields, found {0}")]
    Fields(usize),
    #[error("bad clause id `{0}`")]
    Id(String),
    #[error("expected `hard` or `soft`, found `{0}`")]
    Hardness(String),
    #[error(transparent)]
    Weight(#[from] WeightParseError),
    #[error("hard clause {0} carries a weight")]
    WeightedHard(ClauseId),
    #[error("bad origin `{0}`")]
    Origin(String),
    #[error("unknown clause kind `{0}`")]
    Kind(String),
    #[error(transparent)]
    Constraint(#[from] SexprError),
}

pub fn write_clause_line(c: &Clause) -> String {
    let hardness = match c.hardness {
        Hardness::Hard => "hard",
        Hardness::Soft => "soft",
    };
    let weight = c.weight.as_ref().map_or("-".to_string(), |w| w.to_string());
    let star = if c.concretized { "*" } else { "" };
    format!("{} {hardness} {weight} {} {}{star} {}", c.id, c.origin, c.kind.name(), c.constraint.to_sexpr())
}

fn parse_kind(s: &str) -> Option<ClauseKind> {
    Some(match s {
        "guard" => ClauseKind::Guard,
        "phi" => ClauseKind::Phi,
        "assign" => ClauseKind::Assign,
        "trunc" => ClauseKind::Trunc,
        "input" => ClauseKind::Input,
        "assert" => ClauseKind::Assert,
        _ => return None,
    })
}

pub fn parse_clause_line(line: &str) -> Result<Clause, TextError> {
    let fields: Vec<&str> = line.trim().splitn(6, char::is_whitespace).collect();
    if fields.len() != 6 {
        return Err(TextError::Fields(fields.len()));
    }
    let id: ClauseId = fields[0].parse().map_err(|_| TextError::Id(fields[0].to_string()))?;
    let hardness = match fields[1] {
        "hard" => Hardness::Hard,
        "soft" => Hardness::Soft,
        other => return Err(TextError::Hardness(other.to_string())),
    };
    let weight = match fields[2] {
        "-" => None,
        w => Some(w.parse::<Weight>()?),
    };
    if weight.is_some() && hardness == Hardness::Hard {
        return Err(TextError::WeightedHard(id));
    }
    let origin = match fields[3] {
        "input" => Origin::Input,
        "assert" => Origin::Assertion,
        s => Origin::Stmt(s.parse().map_err(|_| TextError::Origin(s.to_string()))?),
    };
    let (kind, concretized) = match fields[4].strip_suffix('*') {
        Some(k) => (k, true),
        None => (fields[4], false),
    };
    let kind = parse_kind(kind).ok_or_else(|| TextError::Kind(fields[4].to_string()))?;
    let constraint = parse_formula(fields[5])?;
    Ok(Clause { id, kind, constraint, origin, hardness, weight, concretized })
}
