//! Brute-force fallback solver.
//!
//! When the free variables fit in `max_bits` bits in total the search is
//! exhaustive and its answers are exact. Otherwise each variable is tried
//! over a truncated domain (small values plus constants that occur in the
//! constraints); an exhausted truncated search reports unknown, never
//! unsatisfiable.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use super::{CheckResult, Solver};
use crate::eval::{Evaluator, Model};
use crate::term::{self, Op, Term, VarId};
use crate::word::Word;

pub struct EnumerationSolver {
    max_bits: u32,
    asserted: Vec<Term>,
}

impl EnumerationSolver {
    pub fn new(max_bits: u32) -> Self {
        EnumerationSolver {
            max_bits,
            asserted: Vec::new(),
        }
    }

    fn candidates(&self, width: u32, per_var_bits: u32, consts: &BTreeSet<Word>) -> Vec<Word> {
        let bits = per_var_bits.min(width);
        let mut out: BTreeSet<Word> = (0..(1u64 << bits)).map(Word::from).collect();
        let limit = if width >= 256 {
            Word::MAX
        } else {
            (Word::from(1u8) << width as usize) - Word::from(1u8)
        };
        for c in consts {
            for d in [c.wrapping_sub(Word::from(1u8)), *c, c.wrapping_add(Word::from(1u8))] {
                if d <= limit {
                    out.insert(d);
                }
            }
        }
        out.into_iter().collect()
    }

    fn search(&self, order: &[VarId], deadline: Instant) -> CheckResult {
        if self.asserted.iter().any(|t| t.as_const() == Some(Word::ZERO)) {
            return CheckResult::Unsat;
        }
        let mut vars = term::free_vars(&self.asserted);
        // Minimisation order first, then the rest by id.
        vars.sort_by_key(|(v, _)| (order.iter().position(|o| o == v).unwrap_or(usize::MAX), *v));
        let total: u32 = vars.iter().map(|(_, w)| *w).sum();
        let mut uninterpreted = false;
        let mut consts = BTreeSet::new();
        term::visit(&self.asserted, |t| match t.op() {
            Op::Apply(..) => uninterpreted = true,
            Op::Const(c) => {
                consts.insert(*c);
            }
            _ => {}
        });
        let exhaustive = total <= self.max_bits;
        let domains: Vec<Vec<Word>> = if exhaustive {
            vars.iter()
                .map(|(_, w)| (0..(1u64 << w)).map(Word::from).collect())
                .collect()
        } else {
            let per = (self.max_bits / vars.len().max(1) as u32).max(1);
            vars.iter()
                .map(|(_, w)| self.candidates(*w, per, &consts))
                .collect()
        };
        let mut idx = vec![0usize; vars.len()];
        let mut steps: u64 = 0;
        loop {
            let mut m = Model::new();
            for (k, (v, _)) in vars.iter().enumerate() {
                m.set(*v, domains[k][idx[k]]);
            }
            let mut ev = Evaluator::new(&m);
            if self.asserted.iter().all(|t| !ev.eval(t).is_zero()) {
                return CheckResult::Sat(m);
            }
            steps += 1;
            if steps % 1024 == 0 && Instant::now() >= deadline {
                return CheckResult::Unknown("enumeration budget exhausted".into());
            }
            // Odometer increment, last variable fastest so that earlier
            // variables in the order stay minimal.
            let mut k = vars.len();
            loop {
                if k == 0 {
                    return if exhaustive && !uninterpreted {
                        CheckResult::Unsat
                    } else {
                        CheckResult::Unknown("truncated enumeration found no model".into())
                    };
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < domains[k].len() {
                    break;
                }
                idx[k] = 0;
            }
        }
    }
}

impl Solver for EnumerationSolver {
    fn assert(&mut self, constraint: Term) {
        self.asserted.push(constraint);
    }

    fn add_hash_fact(&mut self, _input: Vec<u8>, _output: Word) {}

    fn check(&mut self, budget: Duration) -> CheckResult {
        self.search(&[], Instant::now() + budget)
    }

    fn check_minimal(&mut self, order: &[VarId], budget: Duration) -> CheckResult {
        self.search(order, Instant::now() + budget)
    }

    fn name(&self) -> &'static str {
        "enumerate"
    }
}
