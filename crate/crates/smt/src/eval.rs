//! Concrete evaluation of terms under an assignment.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use crate::term::{Op, Term, VarId};
use crate::word::{self, Word};

/// Values for free variables and uninterpreted applications. Anything not
/// listed evaluates to zero.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Model {
    pub vars: BTreeMap<VarId, Word>,
    pub apps: BTreeMap<(u32, Vec<Word>), Word>,
}

impl Model {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, v: VarId) -> Word {
        self.vars.get(&v).copied().unwrap_or(Word::ZERO)
    }

    pub fn set(&mut self, v: VarId, value: Word) {
        self.vars.insert(v, value);
    }

    pub fn eval(&self, t: &Term) -> Word {
        Evaluator::new(self).eval(t)
    }

    /// True when every term evaluates to a nonzero word.
    pub fn satisfies(&self, terms: &[Term]) -> bool {
        let mut ev = Evaluator::new(self);
        terms.iter().all(|t| !ev.eval(t).is_zero())
    }
}

fn mask(value: Word, width: u32) -> Word {
    if width >= 256 {
        value
    } else {
        value & ((Word::from(1u8) << width as usize) - Word::from(1u8))
    }
}

/// Memoising evaluator; reuse one instance across terms that share nodes.
pub struct Evaluator<'m> {
    model: &'m Model,
    memo: HashMap<usize, Word>,
    keep: Vec<Term>,
}

impl<'m> Evaluator<'m> {
    pub fn new(model: &'m Model) -> Self {
        Evaluator {
            model,
            memo: HashMap::new(),
            keep: Vec::new(),
        }
    }

    pub fn eval(&mut self, t: &Term) -> Word {
        let key = Arc::as_ptr(t) as usize;
        if let Some(v) = self.memo.get(&key) {
            return *v;
        }
        let v = self.compute(t);
        self.memo.insert(key, v);
        self.keep.push(t.clone());
        v
    }

    fn bytes(&mut self, v: &[Term]) -> Vec<u8> {
        v.iter().map(|b| self.eval(b).as_limbs()[0] as u8).collect()
    }

    fn compute(&mut self, t: &Term) -> Word {
        match t.op() {
            Op::Const(c) => *c,
            Op::Var(v) => mask(self.model.get(*v), t.width()),
            Op::Not(a) => word::not(self.eval(a)),
            Op::IsZero(a) => word::iszero(self.eval(a)),
            Op::Bin(op, a, b) => {
                let x = self.eval(a);
                let y = self.eval(b);
                op.apply(x, y)
            }
            Op::AddMod(a, b, n) => {
                let (x, y, m) = (self.eval(a), self.eval(b), self.eval(n));
                word::addmod(x, y, m)
            }
            Op::MulMod(a, b, n) => {
                let (x, y, m) = (self.eval(a), self.eval(b), self.eval(n));
                word::mulmod(x, y, m)
            }
            Op::Ite(c, a, b) => {
                if self.eval(c).is_zero() {
                    self.eval(b)
                } else {
                    self.eval(a)
                }
            }
            Op::Concat(v) => {
                let mut acc = Word::ZERO;
                for b in v {
                    acc = (acc << 8) | (self.eval(b) & Word::from(0xffu8));
                }
                acc
            }
            Op::Keccak(v) => {
                let data = self.bytes(v);
                word::keccak(&data)
            }
            Op::Apply(s, args) => {
                let vals: Vec<Word> = args.iter().map(|a| self.eval(a)).collect();
                self.model
                    .apps
                    .get(&(*s, vals))
                    .copied()
                    .unwrap_or(Word::ZERO)
            }
        }
    }
}
