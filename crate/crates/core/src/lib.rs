//! Formula-based fault localization for MiniImp programs.
//!
//! A failing run is encoded as an unsatisfiable constraint formula whose
//! minimal correction subsets point at candidate faulty statements. The
//! formula is either built for every path of the (unrolled) program at once,
//! or computed on demand from concrete traces and widened only where a
//! correction implicates an unexplored branch.

pub mod arith;
pub mod corpus;
pub mod driver;
pub mod encoder;
pub mod lang;
pub mod logic;
pub mod solver;
pub mod ssa;
pub mod suite;
pub mod testing;
pub mod tracer;
pub mod weights;

pub use arith::{Inputs, Width};
