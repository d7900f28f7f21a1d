//! Satisfiability of fixed-width integer constraints and enumeration of
//! minimal correction subsets for (weighted) partial MAX-SAT instances.

mod bitblast;
pub mod cdcl;
mod instance;
mod maxsat;
mod weight;

use crate::arith::Width;
use crate::logic::{formula_bits, model_in_range, Formula, Model, SortConflict, Universe, VarWidths, MAX_TERM_BITS};

pub use bitblast::Blaster;
pub use cdcl::Budget;
pub use instance::{InstanceError, InstanceErrorKind, MaxSatInstance, Mode};
pub use maxsat::{brute_force_comss, check_comss, enumerate_comss, CoMss, Enumeration, BRUTE_FORCE_MAX_SOFT, BRUTE_FORCE_MAX_WIDTH};
pub use weight::{top_value, Cost, Weight, WeightParseError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SolverError {
    #[error(transparent)]
    Sort(#[from] SortConflict),
    #[error("a term needs {0} bits, more than the supported {MAX_TERM_BITS}")]
    TermTooWide(u32),
    #[error("the hard clauses alone are unsatisfiable (inputs contradict the program or assertion)")]
    HardUnsat,
    #[error("brute-force oracle refuses instances with more than {max_soft} soft clauses or width above {max_width}")]
    TooLarge { max_soft: usize, max_width: u32 },
    #[error("solver produced a model that violates `{0}`")]
    BadModel(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatResult {
    Sat(Model),
    Unsat,
    /// The budget ran out before an answer was found.
    Unknown,
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }
}

pub(crate) fn check_formulas<'a>(formulas: impl IntoIterator<Item = &'a Formula>, widths: &VarWidths) -> Result<Universe, SolverError> {
    let mut u = Universe::default();
    for f in formulas {
        u.add_formula(f)?;
        let bits = formula_bits(f, widths);
        if bits > MAX_TERM_BITS {
            return Err(SolverError::TermTooWide(bits));
        }
    }
    Ok(u)
}

/// Decides the conjunction of `formulas` over signed `width`-bit integers.
/// Models are checked against the formulas before being returned.
pub fn sat(formulas: &[Formula], width: Width, budget: &Budget) -> Result<SatResult, SolverError> {
    sat_in(formulas, &VarWidths::uniform(width), budget)
}

/// Like [`sat`], with a width per variable.
pub fn sat_in(formulas: &[Formula], widths: &VarWidths, budget: &Budget) -> Result<SatResult, SolverError> {
    check_formulas(formulas, widths)?;
    let mut b = Blaster::new(widths.clone());
    let mut roots = Vec::new();
    for f in formulas {
        b.declare(f);
        roots.push(b.formula(f));
    }
    for &r in &roots {
        b.sat.add_clause(&[r]);
    }
    match b.sat.solve(&[], budget) {
        cdcl::SolveResult::Unsat => Ok(SatResult::Unsat),
        cdcl::SolveResult::Unknown => Ok(SatResult::Unknown),
        cdcl::SolveResult::Sat => {
            let m = b.model();
            verify(formulas, &m, widths)?;
            Ok(SatResult::Sat(m))
        }
    }
}

pub(crate) fn verify<'a>(formulas: impl IntoIterator<Item = &'a Formula>, m: &Model, widths: &VarWidths) -> Result<(), SolverError> {
    for f in formulas {
        if f.eval(m) != Some(true) || !model_in_range(m, widths) {
            return Err(SolverError::BadModel(f.to_sexpr()));
        }
    }
    Ok(())
}
