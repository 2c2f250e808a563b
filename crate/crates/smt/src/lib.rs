//! Word-level terms over 256-bit machine integers and decision procedures
//! for constraints built from them.

pub mod eval;
pub mod solver;
pub mod term;
pub mod word;

pub use eval::Model;
pub use solver::{BitBlastSolver, CheckResult, EnumerationSolver, Solver};
pub use term::{BinOp, Op, Term, VarId};
pub use word::Word;
