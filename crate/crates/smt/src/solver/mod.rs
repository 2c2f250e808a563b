//! Satisfiability checking for word constraints.
//!
//! A constraint is a term read as a truth value: satisfied when it
//! evaluates to a nonzero word.

mod bitblast;
mod cnf;
mod enumerate;

use std::time::Duration;

use crate::eval::Model;
use crate::term::{Term, VarId};
use crate::word::Word;

pub use bitblast::BitBlastSolver;
pub use enumerate::EnumerationSolver;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckResult {
    Sat(Model),
    Unsat,
    Unknown(String),
}

impl CheckResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, CheckResult::Sat(_))
    }

    pub fn is_unsat(&self) -> bool {
        matches!(self, CheckResult::Unsat)
    }
}

pub trait Solver: Send {
    /// Adds a constraint to the current set.
    fn assert(&mut self, constraint: Term);

    /// Records that keccak over `input` is `output`, so that symbolic
    /// hashes can be related to concretely computed ones.
    fn add_hash_fact(&mut self, input: Vec<u8>, output: Word);

    /// Decides the constraints asserted so far within `budget`.
    fn check(&mut self, budget: Duration) -> CheckResult;

    /// Like [`Solver::check`], but a satisfying model is made
    /// lexicographically minimal over `order` (most significant bit of the
    /// first variable first) as far as the budget allows.
    fn check_minimal(&mut self, order: &[VarId], budget: Duration) -> CheckResult;

    fn name(&self) -> &'static str;
}

/// Selects a solver implementation by name.
pub fn by_name(name: &str) -> Option<Box<dyn Solver>> {
    match name {
        "bitblast" | "sat" => Some(Box::new(BitBlastSolver::new())),
        "enumerate" | "naive" => Some(Box::new(EnumerationSolver::new(16))),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{self, BinOp};

    fn solvers() -> Vec<Box<dyn Solver>> {
        vec![
            Box::new(BitBlastSolver::new()),
            Box::new(EnumerationSolver::new(16)),
        ]
    }

    #[test]
    fn both_backends_agree_on_small_problems() {
        for mut s in solvers() {
            let x = term::var(VarId(0), 8, 0);
            s.assert(term::bin(BinOp::Gt, x.clone(), term::from_u64(10)));
            s.assert(term::lt(x.clone(), term::from_u64(5)));
            assert_eq!(s.check(Duration::from_secs(5)), CheckResult::Unsat, "{}", s.name());
        }
        for mut s in solvers() {
            let x = term::var(VarId(0), 8, 0);
            s.assert(term::eq(
                term::bin(BinOp::And, term::bin(BinOp::Mul, x.clone(), term::from_u64(3)), term::from_u64(0xff)),
                term::from_u64(7),
            ));
            match s.check(Duration::from_secs(5)) {
                CheckResult::Sat(m) => assert_eq!(m.get(VarId(0)), Word::from(173u32)),
                other => panic!("{}: {other:?}", s.name()),
            }
        }
    }
}
