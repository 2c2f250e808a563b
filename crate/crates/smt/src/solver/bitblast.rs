//! Bit-blasting of word terms into CNF for CaDiCaL.
//!
//! Keccak applications and the uninterpreted symbols become fresh words
//! related pairwise by functional consistency; keccak is additionally
//! treated as injective and its outputs as exceeding `2^128`. Symbolic
//! `EXP`, `ADDMOD`, `MULMOD` and `SIGNEXTEND` are likewise abstracted. A
//! model found under such abstractions is only returned after it has been
//! confirmed by concrete evaluation.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;
use std::time::{Duration, Instant};

use super::cnf::{Cnf, Deadline, Lit, FALSE, TRUE};
use super::{CheckResult, Solver};
use crate::eval::Model;
use crate::term::{BinOp, Op, Term, VarId};
use crate::word::Word;

type Bits = Arc<Vec<Lit>>;

const W: usize = 256;

/// Symbol space for abstracted operators, kept clear of caller symbols.
const APPROX_BASE: u32 = u32::MAX - 16;

struct Application {
    symbol: u32,
    args: Vec<Bits>,
    out: Bits,
}

struct Hash {
    input: Vec<Bits>,
    out: Bits,
}

pub struct BitBlastSolver {
    cnf: Cnf,
    memo: HashMap<usize, Bits>,
    keep: Vec<Term>,
    vars: BTreeMap<VarId, (u32, Bits)>,
    apps: Vec<Application>,
    hashes: Vec<Hash>,
    facts: Vec<(Vec<u8>, Word)>,
    facts_linked: usize,
    asserted: Vec<Term>,
    pending: usize,
    hashes_linked: usize,
    apps_linked: usize,
    approximated: bool,
}

impl Default for BitBlastSolver {
    fn default() -> Self {
        Self::new()
    }
}

impl BitBlastSolver {
    pub fn new() -> Self {
        BitBlastSolver {
            cnf: Cnf::new(),
            memo: HashMap::new(),
            keep: Vec::new(),
            vars: BTreeMap::new(),
            apps: Vec::new(),
            hashes: Vec::new(),
            facts: Vec::new(),
            facts_linked: 0,
            asserted: Vec::new(),
            pending: 0,
            hashes_linked: 0,
            apps_linked: 0,
            approximated: false,
        }
    }

    fn constant(c: Word) -> Vec<Lit> {
        (0..W).map(|i| if c.bit(i) { TRUE } else { FALSE }).collect()
    }

    fn fresh_word(&mut self, width: u32) -> Vec<Lit> {
        (0..W)
            .map(|i| if (i as u32) < width { self.cnf.fresh() } else { FALSE })
            .collect()
    }

    fn blast(&mut self, t: &Term) -> Bits {
        let key = Arc::as_ptr(t) as usize;
        if let Some(b) = self.memo.get(&key) {
            return b.clone();
        }
        let bits = Arc::new(self.compute(t));
        self.memo.insert(key, bits.clone());
        self.keep.push(t.clone());
        bits
    }

    fn compute(&mut self, t: &Term) -> Vec<Lit> {
        match t.op() {
            Op::Const(c) => Self::constant(*c),
            Op::Var(v) => {
                if let Some((_, b)) = self.vars.get(v) {
                    return b.to_vec();
                }
                let b = self.fresh_word(t.width());
                self.vars.insert(*v, (t.width(), Arc::new(b.clone())));
                b
            }
            Op::Not(a) => self.blast(a).iter().map(|l| -l).collect(),
            Op::IsZero(a) => {
                let a = self.blast(a);
                let nz = self.cnf.or_all(&a);
                self.boolean(-nz)
            }
            Op::Bin(op, a, b) => self.binary(*op, a, b, t),
            Op::AddMod(..) | Op::MulMod(..) => {
                let sym = if matches!(t.op(), Op::AddMod(..)) { 0 } else { 1 };
                self.abstracted(APPROX_BASE + sym, t)
            }
            Op::Ite(c, a, b) => {
                let c = self.blast(c);
                let c = self.cnf.or_all(&c);
                let a = self.blast(a);
                let b = self.blast(b);
                (0..W).map(|i| self.cnf.mux(c, a[i], b[i])).collect()
            }
            Op::Concat(bytes) => {
                let mut out = vec![FALSE; W];
                let n = bytes.len();
                for (k, byte) in bytes.iter().enumerate() {
                    let b = self.blast(byte);
                    let base = 8 * (n - 1 - k);
                    for i in 0..8 {
                        if base + i < W {
                            out[base + i] = b[i];
                        }
                    }
                }
                out
            }
            Op::Keccak(bytes) => {
                let input: Vec<Bits> = bytes.iter().map(|b| self.blast(b)).collect();
                let out = self.fresh_word(256);
                // Digests are assumed to be large; this keeps them apart
                // from small storage slot numbers.
                let high = self.cnf.or_all(&out[128..]);
                self.cnf.clause(&[high]);
                self.hashes.push(Hash {
                    input,
                    out: Arc::new(out.clone()),
                });
                out
            }
            Op::Apply(sym, _) => self.abstracted(*sym, t),
        }
    }

    fn abstracted(&mut self, symbol: u32, t: &Term) -> Vec<Lit> {
        if symbol >= APPROX_BASE {
            self.approximated = true;
        }
        let args: Vec<Bits> = t.children().into_iter().map(|c| self.blast(c)).collect();
        let out = self.fresh_word(t.width());
        self.apps.push(Application {
            symbol,
            args,
            out: Arc::new(out.clone()),
        });
        out
    }

    fn boolean(&self, l: Lit) -> Vec<Lit> {
        let mut v = vec![FALSE; W];
        v[0] = l;
        v
    }

    fn binary(&mut self, op: BinOp, ta: &Term, tb: &Term, t: &Term) -> Vec<Lit> {
        use BinOp::*;
        let a = self.blast(ta);
        let b = self.blast(tb);
        match op {
            Add => self.add(&a, &b, FALSE),
            Sub => {
                let nb: Vec<Lit> = b.iter().map(|l| -l).collect();
                self.add(&a, &nb, TRUE)
            }
            Mul => self.mul(&a, &b, ta.as_const(), tb.as_const()),
            Div => self.udivrem(&a, &b).0,
            Mod => self.udivrem(&a, &b).1,
            SDiv | SMod => self.signed_divrem(op, &a, &b),
            Exp | SignExtend => {
                if op == SignExtend {
                    if let Some(k) = ta.as_const() {
                        return self.signextend_const(k, &b);
                    }
                }
                self.abstracted(APPROX_BASE + if op == Exp { 2 } else { 3 }, t)
            }
            Lt => {
                let l = self.ult(&a, &b);
                self.boolean(l)
            }
            Gt => {
                let l = self.ult(&b, &a);
                self.boolean(l)
            }
            Slt | Sgt => {
                let (x, y) = if op == Slt { (&a, &b) } else { (&b, &a) };
                let mut xs = x.to_vec();
                let mut ys = y.to_vec();
                xs[W - 1] = -xs[W - 1];
                ys[W - 1] = -ys[W - 1];
                let l = self.ult(&xs, &ys);
                self.boolean(l)
            }
            Eq => {
                let l = self.equal(&a, &b);
                self.boolean(l)
            }
            And => (0..W).map(|i| self.cnf.and(a[i], b[i])).collect(),
            Or => (0..W).map(|i| self.cnf.or(a[i], b[i])).collect(),
            Xor => (0..W).map(|i| self.cnf.xor(a[i], b[i])).collect(),
            Byte => self.byte(&a, &b, ta.as_const()),
            Shl | Shr | Sar => self.shift(op, &a, &b, ta.as_const()),
        }
    }

    fn add(&mut self, a: &[Lit], b: &[Lit], carry_in: Lit) -> Vec<Lit> {
        let mut carry = carry_in;
        let mut out = Vec::with_capacity(W);
        for i in 0..a.len() {
            let p = self.cnf.xor(a[i], b[i]);
            out.push(self.cnf.xor(p, carry));
            let g = self.cnf.and(a[i], b[i]);
            let q = self.cnf.and(p, carry);
            carry = self.cnf.or(g, q);
        }
        out
    }

    fn mul(&mut self, a: &[Lit], b: &[Lit], ca: Option<Word>, cb: Option<Word>) -> Vec<Lit> {
        // Iterate over the constant (or narrower) operand's set bits.
        let width = |v: &[Lit]| v.iter().rposition(|&l| l != FALSE).map_or(0, |p| p + 1);
        let (x, y) = if ca.is_some() || (cb.is_none() && width(a) < width(b)) {
            (b, a)
        } else {
            (a, b)
        };
        let mut acc = vec![FALSE; W];
        for (i, &yi) in y.iter().enumerate() {
            if yi == FALSE {
                continue;
            }
            let mut row = vec![FALSE; W];
            for j in 0..W - i {
                row[i + j] = self.cnf.and(x[j], yi);
            }
            acc = self.add(&acc, &row, FALSE);
        }
        acc
    }

    fn mul_wide(&mut self, a: &[Lit], b: &[Lit]) -> Vec<Lit> {
        let mut acc = vec![FALSE; 2 * W];
        for (i, &bi) in b.iter().enumerate() {
            if bi == FALSE {
                continue;
            }
            let mut row = vec![FALSE; 2 * W];
            for j in 0..W {
                row[i + j] = self.cnf.and(a[j], bi);
            }
            acc = self.add(&acc, &row, FALSE);
        }
        acc
    }

    fn ult(&mut self, a: &[Lit], b: &[Lit]) -> Lit {
        let mut lt = FALSE;
        for i in 0..a.len() {
            let differ = self.cnf.xor(a[i], b[i]);
            let b_wins = self.cnf.and(-a[i], b[i]);
            lt = self.cnf.mux(differ, b_wins, lt);
        }
        lt
    }

    fn equal(&mut self, a: &[Lit], b: &[Lit]) -> Lit {
        let diffs: Vec<Lit> = (0..a.len()).map(|i| self.cnf.xor(a[i], b[i])).collect();
        -self.cnf.or_all(&diffs)
    }

    fn udivrem(&mut self, a: &[Lit], b: &[Lit]) -> (Vec<Lit>, Vec<Lit>) {
        let q = self.fresh_word(256);
        let r = self.fresh_word(256);
        let b_zero = -self.cnf.or_all(b);
        // b == 0 -> q == 0 and r == 0
        for i in 0..W {
            self.cnf.clause(&[-b_zero, -q[i]]);
            self.cnf.clause(&[-b_zero, -r[i]]);
        }
        // b != 0 -> a == q*b + r (no overflow) and r < b
        let prod = self.mul_wide(&q, b);
        let mut r_wide = r.clone();
        r_wide.resize(2 * W, FALSE);
        let sum = self.add(&prod, &r_wide, FALSE);
        let carry_free = {
            let overflow = self.cnf.or_all(&sum[W..]);
            -overflow
        };
        let matches = self.equal(&sum[..W], a);
        let r_lt_b = self.ult(&r, b);
        for l in [carry_free, matches, r_lt_b] {
            self.cnf.clause(&[b_zero, l]);
        }
        (q, r)
    }

    fn negate(&mut self, x: &[Lit]) -> Vec<Lit> {
        let inv: Vec<Lit> = x.iter().map(|l| -l).collect();
        let zero = vec![FALSE; W];
        self.add(&inv, &zero, TRUE)
    }

    fn abs(&mut self, x: &[Lit]) -> Vec<Lit> {
        let n = self.negate(x);
        let s = x[W - 1];
        (0..W).map(|i| self.cnf.mux(s, n[i], x[i])).collect()
    }

    fn signed_divrem(&mut self, op: BinOp, a: &[Lit], b: &[Lit]) -> Vec<Lit> {
        let ua = self.abs(a);
        let ub = self.abs(b);
        let (q, r) = self.udivrem(&ua, &ub);
        let (value, negative) = if op == BinOp::SDiv {
            let s = self.cnf.xor(a[W - 1], b[W - 1]);
            (q, s)
        } else {
            (r, a[W - 1])
        };
        let n = self.negate(&value);
        (0..W).map(|i| self.cnf.mux(negative, n[i], value[i])).collect()
    }

    fn signextend_const(&mut self, k: Word, x: &[Lit]) -> Vec<Lit> {
        if k >= Word::from(31u8) {
            return x.to_vec();
        }
        let top = (k.as_limbs()[0] as usize) * 8 + 7;
        (0..W).map(|i| if i <= top { x[i] } else { x[top] }).collect()
    }

    fn byte(&mut self, idx: &[Lit], x: &[Lit], ci: Option<Word>) -> Vec<Lit> {
        let mut out = vec![FALSE; W];
        if let Some(i) = ci {
            if i < Word::from(32u8) {
                let base = 8 * (31 - i.as_limbs()[0] as usize);
                out[..8].copy_from_slice(&x[base..base + 8]);
            }
            return out;
        }
        // 31 - i == i ^ 31 for i < 32: shift right by 8 * (31 - i).
        let amount: Vec<Lit> = (0..5).map(|k| -idx[k]).collect();
        let mut cur = x.to_vec();
        for (k, &bit) in amount.iter().enumerate() {
            let s = 8usize << k;
            cur = (0..W)
                .map(|j| {
                    let shifted = if j + s < W { cur[j + s] } else { FALSE };
                    self.cnf.mux(bit, shifted, cur[j])
                })
                .collect();
        }
        let big = self.cnf.or_all(&idx[5..]);
        for j in 0..8 {
            out[j] = self.cnf.and(-big, cur[j]);
        }
        out
    }

    fn shift(&mut self, op: BinOp, amount: &[Lit], x: &[Lit], ca: Option<Word>) -> Vec<Lit> {
        let fill = if op == BinOp::Sar { x[W - 1] } else { FALSE };
        if let Some(k) = ca {
            let k = if k >= Word::from(256u16) { W } else { k.as_limbs()[0] as usize };
            return (0..W)
                .map(|j| match op {
                    BinOp::Shl => {
                        if j >= k {
                            x[j - k]
                        } else {
                            FALSE
                        }
                    }
                    _ => {
                        if j + k < W {
                            x[j + k]
                        } else {
                            fill
                        }
                    }
                })
                .collect();
        }
        let mut cur = x.to_vec();
        for k in 0..8 {
            let s = 1usize << k;
            let bit = amount[k];
            cur = (0..W)
                .map(|j| {
                    let moved = match op {
                        BinOp::Shl => {
                            if j >= s {
                                cur[j - s]
                            } else {
                                FALSE
                            }
                        }
                        _ => {
                            if j + s < W {
                                cur[j + s]
                            } else {
                                fill
                            }
                        }
                    };
                    self.cnf.mux(bit, moved, cur[j])
                })
                .collect();
        }
        let big = self.cnf.or_all(&amount[8..]);
        (0..W).map(|j| self.cnf.mux(big, fill, cur[j])).collect()
    }

    fn words_equal(&mut self, a: &[Bits], b: &[Bits]) -> Lit {
        if a.len() != b.len() {
            return FALSE;
        }
        let eqs: Vec<Lit> = a.iter().zip(b).map(|(x, y)| self.equal(x, y)).collect();
        self.cnf.and_all(&eqs)
    }

    /// Adds consistency axioms for applications and hashes created since
    /// the previous call.
    fn link(&mut self) {
        for i in self.apps_linked..self.apps.len() {
            for j in 0..i {
                if self.apps[i].symbol != self.apps[j].symbol {
                    continue;
                }
                let (ai, aj) = (self.apps[i].args.clone(), self.apps[j].args.clone());
                let same_args = self.words_equal(&ai, &aj);
                let (oi, oj) = (self.apps[i].out.clone(), self.apps[j].out.clone());
                let same_out = self.equal(&oi, &oj);
                self.cnf.clause(&[-same_args, same_out]);
            }
        }
        self.apps_linked = self.apps.len();

        for i in self.hashes_linked..self.hashes.len() {
            for j in 0..i {
                let (hi, hj) = (self.hashes[i].input.clone(), self.hashes[j].input.clone());
                let (oi, oj) = (self.hashes[i].out.clone(), self.hashes[j].out.clone());
                let same_in = self.words_equal(&hi, &hj);
                let same_out = self.equal(&oi, &oj);
                self.cnf.clause(&[-same_in, same_out]);
                self.cnf.clause(&[same_in, -same_out]);
            }
        }
        // Relate every hash to every concrete fact, both old and new.
        let mut todo = Vec::new();
        for (h_idx, h) in self.hashes.iter().enumerate() {
            let start = if h_idx < self.hashes_linked { self.facts_linked } else { 0 };
            for f in start..self.facts.len() {
                if self.facts[f].0.len() == h.input.len() {
                    todo.push((h_idx, f));
                }
            }
        }
        for (h_idx, f) in todo {
            let input = self.hashes[h_idx].input.clone();
            let out = self.hashes[h_idx].out.clone();
            let (bytes, digest) = self.facts[f].clone();
            let consts: Vec<Bits> = bytes
                .iter()
                .map(|b| Arc::new(Self::constant(Word::from(*b))))
                .collect();
            let same_in = self.words_equal(&input, &consts);
            let dconst = Self::constant(digest);
            let same_out = self.equal(&out, &dconst);
            self.cnf.clause(&[-same_in, same_out]);
            self.cnf.clause(&[same_in, -same_out]);
        }
        self.hashes_linked = self.hashes.len();
        self.facts_linked = self.facts.len();
    }

    fn flush(&mut self) {
        while self.pending < self.asserted.len() {
            let t = self.asserted[self.pending].clone();
            self.pending += 1;
            let bits = self.blast(&t);
            let nz = self.cnf.or_all(&bits);
            self.cnf.clause(&[nz]);
        }
        self.link();
    }

    fn solve(&mut self, assumptions: &[Lit], deadline: Instant) -> Option<bool> {
        if Instant::now() >= deadline {
            return None;
        }
        self.cnf.sat.set_callbacks(Some(Deadline { at: deadline }));
        let lits: Vec<Lit> = assumptions
            .iter()
            .copied()
            .filter(|&l| l != TRUE)
            .collect();
        if lits.contains(&FALSE) {
            return Some(false);
        }
        self.cnf.sat.solve_with(lits)
    }

    fn word_value(&self, bits: &[Lit]) -> Word {
        let mut v = Word::ZERO;
        for (i, &l) in bits.iter().enumerate() {
            if self.cnf.value(l) {
                v.set_bit(i, true);
            }
        }
        v
    }

    fn extract(&self) -> Model {
        let mut m = Model::new();
        for (v, (w, bits)) in &self.vars {
            m.set(*v, self.word_value(&bits[..*w as usize]));
        }
        for app in &self.apps {
            if app.symbol >= APPROX_BASE {
                continue;
            }
            let args: Vec<Word> = app.args.iter().map(|a| self.word_value(a)).collect();
            m.apps
                .entry((app.symbol, args))
                .or_insert_with(|| self.word_value(&app.out));
        }
        m
    }

    fn confirm(&self, model: Model) -> CheckResult {
        if model.satisfies(&self.asserted) {
            CheckResult::Sat(model)
        } else if self.approximated || !self.hashes.is_empty() {
            CheckResult::Unknown("model depends on an abstracted operation".into())
        } else {
            CheckResult::Unknown("model failed concrete confirmation".into())
        }
    }

    /// Bits of every variable in minimisation order, most significant first.
    fn ordered_bits(&self, order: &[VarId]) -> Vec<Vec<Lit>> {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        let all = order.iter().copied().chain(self.vars.keys().copied());
        for v in all {
            if !seen.insert(v) {
                continue;
            }
            if let Some((w, bits)) = self.vars.get(&v) {
                out.push(bits[..*w as usize].iter().rev().copied().collect());
            }
        }
        out
    }
}

impl Solver for BitBlastSolver {
    fn assert(&mut self, constraint: Term) {
        self.asserted.push(constraint);
    }

    fn add_hash_fact(&mut self, input: Vec<u8>, output: Word) {
        if !self.facts.iter().any(|(i, _)| *i == input) {
            self.facts.push((input, output));
        }
    }

    fn check(&mut self, budget: Duration) -> CheckResult {
        let deadline = Instant::now() + budget;
        if self.asserted.iter().any(|t| t.as_const() == Some(Word::ZERO)) {
            return CheckResult::Unsat;
        }
        self.flush();
        match self.solve(&[], deadline) {
            Some(true) => {
                let m = self.extract();
                self.confirm(m)
            }
            Some(false) => CheckResult::Unsat,
            None => CheckResult::Unknown("solver budget exhausted".into()),
        }
    }

    fn check_minimal(&mut self, order: &[VarId], budget: Duration) -> CheckResult {
        let deadline = Instant::now() + budget;
        let first = self.check(budget);
        if !first.is_sat() {
            return first;
        }
        let groups = self.ordered_bits(order);
        let mut fixed: Vec<Lit> = Vec::new();
        let mut snapshot: HashMap<Lit, bool> = HashMap::new();
        let take = |s: &Self, snap: &mut HashMap<Lit, bool>, groups: &[Vec<Lit>]| {
            snap.clear();
            for g in groups {
                for &l in g {
                    snap.insert(l, s.cnf.value(l));
                }
            }
        };
        take(self, &mut snapshot, &groups);
        let mut last_model = self.extract();
        'outer: for g in &groups {
            let live: Vec<Lit> = g.iter().copied().filter(|l| snapshot[l]).collect();
            if live.is_empty() {
                fixed.extend(g.iter().map(|&l| -l));
                continue;
            }
            // Try the whole variable at zero first.
            let mut attempt = fixed.clone();
            attempt.extend(g.iter().map(|&l| -l));
            match self.solve(&attempt, deadline) {
                Some(true) => {
                    fixed = attempt;
                    take(self, &mut snapshot, &groups);
                    last_model = self.extract();
                    continue;
                }
                Some(false) => {}
                None => break 'outer,
            }
            for &l in g {
                if !snapshot[&l] {
                    fixed.push(-l);
                    continue;
                }
                let mut attempt = fixed.clone();
                attempt.push(-l);
                match self.solve(&attempt, deadline) {
                    Some(true) => {
                        fixed = attempt;
                        take(self, &mut snapshot, &groups);
                        last_model = self.extract();
                    }
                    Some(false) => fixed.push(l),
                    None => break 'outer,
                }
            }
        }
        self.confirm(last_model)
    }

    fn name(&self) -> &'static str {
        "bitblast"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{self, VarId};
    use crate::word;

    fn budget() -> Duration {
        Duration::from_secs(10)
    }

    fn v(id: u32, w: u32) -> Term {
        term::var(VarId(id), w, 0)
    }

    #[test]
    fn minimal_model_for_strict_bound() {
        let mut s = BitBlastSolver::new();
        s.assert(term::bin(BinOp::Gt, v(0, 256), term::from_u64(300)));
        match s.check_minimal(&[VarId(0)], budget()) {
            CheckResult::Sat(m) => assert_eq!(m.get(VarId(0)), Word::from(301u32)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn division_semantics() {
        let mut s = BitBlastSolver::new();
        let x = v(0, 16);
        s.assert(term::eq(term::bin(BinOp::Div, x.clone(), term::from_u64(7)), term::from_u64(5)));
        s.assert(term::eq(term::bin(BinOp::Mod, x.clone(), term::from_u64(7)), term::from_u64(3)));
        match s.check(budget()) {
            CheckResult::Sat(m) => assert_eq!(m.get(VarId(0)), Word::from(38u32)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn symbolic_divisor_zero_gives_zero() {
        let mut s = BitBlastSolver::new();
        let x = v(0, 8);
        let y = v(1, 8);
        s.assert(term::iszero(y.clone()));
        s.assert(term::bin(BinOp::Div, x, y));
        assert_eq!(s.check(budget()), CheckResult::Unsat);
    }

    #[test]
    fn keccak_is_injective_and_relates_to_facts() {
        let mut s = BitBlastSolver::new();
        let x = v(0, 8);
        let h = term::keccak(vec![x.clone()]);
        let target = word::keccak(&[3]);
        s.add_hash_fact(vec![3], target);
        s.assert(term::eq(h, term::konst(target)));
        match s.check(budget()) {
            CheckResult::Sat(m) => assert_eq!(m.get(VarId(0)), Word::from(3u8)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn keccak_differs_from_small_slots() {
        let mut s = BitBlastSolver::new();
        let h = term::keccak(vec![v(0, 8)]);
        s.assert(term::eq(h, term::from_u64(1)));
        assert_eq!(s.check(budget()), CheckResult::Unsat);
    }

    #[test]
    fn signed_comparison() {
        let mut s = BitBlastSolver::new();
        let x = v(0, 256);
        s.assert(term::bin(BinOp::Slt, x.clone(), term::zero()));
        s.assert(term::bin(BinOp::Gt, term::from_u64(10), term::bin(BinOp::Add, x, term::from_u64(5))));
        match s.check_minimal(&[VarId(0)], budget()) {
            CheckResult::Sat(m) => {
                let x = m.get(VarId(0));
                assert!(word::is_negative(x));
                assert!(word::add(x, Word::from(5u8)) < Word::from(10u8));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn symbolic_shift_and_byte() {
        let mut s = BitBlastSolver::new();
        let k = v(0, 256);
        let shifted = term::bin(BinOp::Shl, k.clone(), term::from_u64(1));
        s.assert(term::eq(shifted, term::from_u64(1 << 20)));
        let b = term::bin(BinOp::Byte, v(1, 256), term::konst(Word::from(0xabcdu32)));
        s.assert(term::eq(b, term::from_u64(0xab)));
        match s.check(budget()) {
            CheckResult::Sat(m) => {
                assert_eq!(m.get(VarId(0)), Word::from(20u8));
                assert_eq!(m.get(VarId(1)), Word::from(30u8));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn uninterpreted_functions_are_consistent() {
        let mut s = BitBlastSolver::new();
        let a = v(0, 8);
        let b = v(1, 8);
        let fa = term::apply(7, vec![a.clone()], 0);
        let fb = term::apply(7, vec![b.clone()], 0);
        s.assert(term::eq(a, b));
        s.assert(term::iszero(term::eq(fa, fb)));
        assert_eq!(s.check(budget()), CheckResult::Unsat);
    }

    #[test]
    fn zero_budget_is_unknown() {
        let mut s = BitBlastSolver::new();
        let x = v(0, 256);
        let y = v(1, 256);
        s.assert(term::eq(term::bin(BinOp::Mul, x, y), term::from_u64(91)));
        assert!(matches!(s.check(Duration::ZERO), CheckResult::Unknown(_)));
    }
}
