//! Hash-annotated 256-bit word terms.
//!
//! Terms are immutable and shared through [`Arc`]. Every constructor folds
//! constants and applies a small set of local rewrites so that the masks and
//! shifts emitted by Solidity for address and selector handling disappear
//! before they reach the solver.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::word::{self, Word};

pub type Term = Arc<Node>;

/// Identifier of a free variable. Its meaning is owned by the caller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub u32);

/// Opaque provenance bits. They are unioned upward through every node,
/// including folded constants, and never affect semantics or equality.
pub type Tags = u16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    SDiv,
    Mod,
    SMod,
    Exp,
    SignExtend,
    Lt,
    Gt,
    Slt,
    Sgt,
    Eq,
    And,
    Or,
    Xor,
    Byte,
    Shl,
    Shr,
    Sar,
}

impl BinOp {
    /// Applies the operation to concrete operands. `a` is the operand that
    /// sits on top of the stack.
    pub fn apply(self, a: Word, b: Word) -> Word {
        use BinOp::*;
        match self {
            Add => word::add(a, b),
            Sub => word::sub(a, b),
            Mul => word::mul(a, b),
            Div => word::div(a, b),
            SDiv => word::sdiv(a, b),
            Mod => word::rem(a, b),
            SMod => word::srem(a, b),
            Exp => word::exp(a, b),
            SignExtend => word::signextend(a, b),
            Lt => word::lt(a, b),
            Gt => word::gt(a, b),
            Slt => word::slt(a, b),
            Sgt => word::sgt(a, b),
            Eq => word::eq(a, b),
            And => word::and(a, b),
            Or => word::or(a, b),
            Xor => word::xor(a, b),
            Byte => word::byte(a, b),
            Shl => word::shl(a, b),
            Shr => word::shr(a, b),
            Sar => word::sar(a, b),
        }
    }

    pub fn name(self) -> &'static str {
        use BinOp::*;
        match self {
            Add => "add",
            Sub => "sub",
            Mul => "mul",
            Div => "div",
            SDiv => "sdiv",
            Mod => "mod",
            SMod => "smod",
            Exp => "exp",
            SignExtend => "signextend",
            Lt => "lt",
            Gt => "gt",
            Slt => "slt",
            Sgt => "sgt",
            Eq => "eq",
            And => "and",
            Or => "or",
            Xor => "xor",
            Byte => "byte",
            Shl => "shl",
            Shr => "shr",
            Sar => "sar",
        }
    }

    fn is_commutative(self) -> bool {
        matches!(
            self,
            BinOp::Add | BinOp::Mul | BinOp::Eq | BinOp::And | BinOp::Or | BinOp::Xor
        )
    }

    fn is_predicate(self) -> bool {
        matches!(
            self,
            BinOp::Lt | BinOp::Gt | BinOp::Slt | BinOp::Sgt | BinOp::Eq
        )
    }
}

#[derive(Debug)]
pub enum Op {
    Const(Word),
    Var(VarId),
    Not(Term),
    IsZero(Term),
    Bin(BinOp, Term, Term),
    AddMod(Term, Term, Term),
    MulMod(Term, Term, Term),
    /// `if c != 0 then t else e`.
    Ite(Term, Term, Term),
    /// Big-endian concatenation of byte-valued terms.
    Concat(Vec<Term>),
    /// Keccak-256 over byte-valued terms.
    Keccak(Vec<Term>),
    /// Application of an uninterpreted function symbol.
    Apply(u32, Vec<Term>),
}

#[derive(Debug)]
pub struct Node {
    op: Op,
    width: u16,
    tags: Tags,
    hash: u64,
}

impl Node {
    pub fn op(&self) -> &Op {
        &self.op
    }

    /// Upper bound on the number of significant bits.
    pub fn width(&self) -> u32 {
        self.width as u32
    }

    pub fn tags(&self) -> Tags {
        self.tags
    }

    pub fn has_tags(&self, t: Tags) -> bool {
        self.tags & t != 0
    }

    pub fn structural_hash(&self) -> u64 {
        self.hash
    }

    pub fn as_const(&self) -> Option<Word> {
        match self.op {
            Op::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_const(&self) -> bool {
        matches!(self.op, Op::Const(_))
    }

    pub fn as_var(&self) -> Option<VarId> {
        match self.op {
            Op::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn children(&self) -> Vec<&Term> {
        match &self.op {
            Op::Const(_) | Op::Var(_) => vec![],
            Op::Not(a) | Op::IsZero(a) => vec![a],
            Op::Bin(_, a, b) => vec![a, b],
            Op::AddMod(a, b, c) | Op::MulMod(a, b, c) | Op::Ite(a, b, c) => vec![a, b, c],
            Op::Concat(v) | Op::Keccak(v) | Op::Apply(_, v) => v.iter().collect(),
        }
    }
}

struct Mixer(u64);

impl Hasher for Mixer {
    fn finish(&self) -> u64 {
        self.0
    }
    fn write(&mut self, bytes: &[u8]) {
        for b in bytes {
            self.write_u64(*b as u64);
        }
    }
    fn write_u64(&mut self, v: u64) {
        self.0 = (self.0 ^ v).wrapping_mul(0x100000001b3).rotate_left(29) ^ 0x9e3779b97f4a7c15;
    }
}

fn hash_of(op: &Op) -> u64 {
    let mut h = Mixer(0xcbf29ce484222325);
    match op {
        Op::Const(c) => {
            0u8.hash(&mut h);
            for l in c.as_limbs() {
                h.write_u64(*l);
            }
        }
        Op::Var(v) => {
            1u8.hash(&mut h);
            h.write_u64(v.0 as u64);
        }
        Op::Not(a) => {
            2u8.hash(&mut h);
            h.write_u64(a.hash);
        }
        Op::IsZero(a) => {
            3u8.hash(&mut h);
            h.write_u64(a.hash);
        }
        Op::Bin(o, a, b) => {
            4u8.hash(&mut h);
            o.hash(&mut h);
            h.write_u64(a.hash);
            h.write_u64(b.hash);
        }
        Op::AddMod(a, b, c) | Op::MulMod(a, b, c) | Op::Ite(a, b, c) => {
            let tag = match op {
                Op::AddMod(..) => 5u8,
                Op::MulMod(..) => 6,
                _ => 7,
            };
            tag.hash(&mut h);
            h.write_u64(a.hash);
            h.write_u64(b.hash);
            h.write_u64(c.hash);
        }
        Op::Concat(v) | Op::Keccak(v) => {
            let tag = if matches!(op, Op::Concat(_)) { 8u8 } else { 9 };
            tag.hash(&mut h);
            for t in v {
                h.write_u64(t.hash);
            }
        }
        Op::Apply(s, v) => {
            10u8.hash(&mut h);
            h.write_u64(*s as u64);
            for t in v {
                h.write_u64(t.hash);
            }
        }
    }
    h.finish()
}

fn make(op: Op, width: u32, tags: Tags) -> Term {
    let hash = hash_of(&op);
    Arc::new(Node {
        op,
        width: width.min(256) as u16,
        tags,
        hash,
    })
}

/// Structural equality that ignores provenance tags.
pub fn same(a: &Term, b: &Term) -> bool {
    if Arc::ptr_eq(a, b) {
        return true;
    }
    if a.hash != b.hash {
        return false;
    }
    match (&a.op, &b.op) {
        (Op::Const(x), Op::Const(y)) => x == y,
        (Op::Var(x), Op::Var(y)) => x == y,
        (Op::Not(x), Op::Not(y)) | (Op::IsZero(x), Op::IsZero(y)) => same(x, y),
        (Op::Bin(o1, a1, b1), Op::Bin(o2, a2, b2)) => o1 == o2 && same(a1, a2) && same(b1, b2),
        (Op::AddMod(a1, b1, c1), Op::AddMod(a2, b2, c2))
        | (Op::MulMod(a1, b1, c1), Op::MulMod(a2, b2, c2))
        | (Op::Ite(a1, b1, c1), Op::Ite(a2, b2, c2)) => {
            same(a1, a2) && same(b1, b2) && same(c1, c2)
        }
        (Op::Concat(x), Op::Concat(y)) | (Op::Keccak(x), Op::Keccak(y)) => same_all(x, y),
        (Op::Apply(s1, x), Op::Apply(s2, y)) => s1 == s2 && same_all(x, y),
        _ => false,
    }
}

fn same_all(x: &[Term], y: &[Term]) -> bool {
    x.len() == y.len() && x.iter().zip(y).all(|(a, b)| same(a, b))
}

/// Returns `t` carrying `extra` tags in addition to its own.
pub fn with_tags(t: &Term, extra: Tags) -> Term {
    if t.tags | extra == t.tags {
        return t.clone();
    }
    let op = match &t.op {
        Op::Const(c) => Op::Const(*c),
        Op::Var(v) => Op::Var(*v),
        Op::Not(a) => Op::Not(a.clone()),
        Op::IsZero(a) => Op::IsZero(a.clone()),
        Op::Bin(o, a, b) => Op::Bin(*o, a.clone(), b.clone()),
        Op::AddMod(a, b, c) => Op::AddMod(a.clone(), b.clone(), c.clone()),
        Op::MulMod(a, b, c) => Op::MulMod(a.clone(), b.clone(), c.clone()),
        Op::Ite(a, b, c) => Op::Ite(a.clone(), b.clone(), c.clone()),
        Op::Concat(v) => Op::Concat(v.clone()),
        Op::Keccak(v) => Op::Keccak(v.clone()),
        Op::Apply(s, v) => Op::Apply(*s, v.clone()),
    };
    Arc::new(Node {
        op,
        width: t.width,
        tags: t.tags | extra,
        hash: t.hash,
    })
}

pub fn konst(c: Word) -> Term {
    konst_tagged(c, 0)
}

pub fn konst_tagged(c: Word, tags: Tags) -> Term {
    make(Op::Const(c), word::bit_len(c), tags)
}

pub fn zero() -> Term {
    konst(Word::ZERO)
}

pub fn one() -> Term {
    konst(Word::from(1u8))
}

pub fn from_u64(v: u64) -> Term {
    konst(Word::from(v))
}

pub fn from_bool(b: bool) -> Term {
    konst(word::from_bool(b))
}

/// A free variable ranging over `[0, 2^width)`.
pub fn var(id: VarId, width: u32, tags: Tags) -> Term {
    make(Op::Var(id), width, tags)
}

pub fn not(a: Term) -> Term {
    if let Some(c) = a.as_const() {
        return konst_tagged(word::not(c), a.tags);
    }
    if let Op::Not(inner) = &a.op {
        return with_tags(inner, a.tags);
    }
    let tags = a.tags;
    make(Op::Not(a), 256, tags)
}

pub fn iszero(a: Term) -> Term {
    if let Some(c) = a.as_const() {
        return konst_tagged(word::iszero(c), a.tags);
    }
    if let Op::IsZero(inner) = &a.op {
        if inner.width() <= 1 {
            return with_tags(inner, a.tags);
        }
    }
    let tags = a.tags;
    make(Op::IsZero(a), 1, tags)
}

/// Interprets a word as a truth value (`!= 0`) and returns a 0/1 word.
pub fn truthy(a: Term) -> Term {
    if a.width() <= 1 {
        a
    } else {
        iszero(iszero(a))
    }
}

pub fn ite(c: Term, t: Term, e: Term) -> Term {
    if let Some(v) = c.as_const() {
        let pick = if v.is_zero() { e } else { t };
        return with_tags(&pick, c.tags);
    }
    if same(&t, &e) {
        return with_tags(&t, c.tags);
    }
    let width = t.width().max(e.width());
    let tags = c.tags | t.tags | e.tags;
    make(Op::Ite(c, t, e), width, tags)
}

pub fn addmod(a: Term, b: Term, n: Term) -> Term {
    let tags = a.tags | b.tags | n.tags;
    if let (Some(x), Some(y), Some(m)) = (a.as_const(), b.as_const(), n.as_const()) {
        return konst_tagged(word::addmod(x, y, m), tags);
    }
    let width = n.width();
    make(Op::AddMod(a, b, n), width, tags)
}

pub fn mulmod(a: Term, b: Term, n: Term) -> Term {
    let tags = a.tags | b.tags | n.tags;
    if let (Some(x), Some(y), Some(m)) = (a.as_const(), b.as_const(), n.as_const()) {
        return konst_tagged(word::mulmod(x, y, m), tags);
    }
    let width = n.width();
    make(Op::MulMod(a, b, n), width, tags)
}

/// Big-endian concatenation of byte terms (each of width at most 8).
pub fn concat(bytes: Vec<Term>) -> Term {
    debug_assert!(bytes.len() <= 32);
    debug_assert!(bytes.iter().all(|b| b.width() <= 8));
    let tags = bytes.iter().fold(0, |t, b| t | b.tags);
    if bytes.iter().all(|b| b.is_const()) {
        let mut v = Word::ZERO;
        for b in &bytes {
            v = (v << 8) | b.as_const().unwrap();
        }
        return konst_tagged(v, tags);
    }
    if bytes.len() == 32 {
        if let Some(w) = reassembled_word(&bytes) {
            return with_tags(&w, tags);
        }
    }
    if bytes.len() == 1 {
        return bytes.into_iter().next().unwrap();
    }
    let lead = bytes.iter().take_while(|b| b.as_const() == Some(Word::ZERO)).count();
    if lead == bytes.len() {
        return konst_tagged(Word::ZERO, tags);
    }
    let significant = bytes.len() - lead;
    let width = (significant as u32 - 1) * 8 + bytes[lead].width();
    make(Op::Concat(bytes), width, tags)
}

/// Recognises `byte(0, w) ++ byte(1, w) ++ ... ++ byte(31, w)`.
fn reassembled_word(bytes: &[Term]) -> Option<Term> {
    let mut source: Option<&Term> = None;
    for (i, b) in bytes.iter().enumerate() {
        match &b.op {
            Op::Bin(BinOp::Byte, idx, w) if idx.as_const() == Some(Word::from(i as u64)) => {
                match source {
                    None => source = Some(w),
                    Some(s) if same(s, w) => {}
                    _ => return None,
                }
            }
            _ => {
                // A leading zero byte is fine when the source is narrow.
                if b.as_const() == Some(Word::ZERO) {
                    continue;
                }
                return None;
            }
        }
    }
    let s = source?;
    // Zero bytes only stand in for bytes the source cannot have set.
    for (i, b) in bytes.iter().enumerate() {
        if b.as_const() == Some(Word::ZERO) && s.width() > 8 * (31 - i as u32) {
            return None;
        }
    }
    Some(s.clone())
}

/// Keccak-256 over byte terms; concrete inputs hash immediately.
pub fn keccak(bytes: Vec<Term>) -> Term {
    let tags = bytes.iter().fold(0, |t, b| t | b.tags);
    if bytes.iter().all(|b| b.is_const()) {
        let data: Vec<u8> = bytes
            .iter()
            .map(|b| b.as_const().unwrap().as_limbs()[0] as u8)
            .collect();
        return konst_tagged(word::keccak(&data), tags);
    }
    make(Op::Keccak(bytes), 256, tags)
}

pub fn apply(symbol: u32, args: Vec<Term>, tags: Tags) -> Term {
    let tags = args.iter().fold(tags, |t, b| t | b.tags);
    make(Op::Apply(symbol, args), 256, tags)
}

pub fn add(a: Term, b: Term) -> Term {
    bin(BinOp::Add, a, b)
}
pub fn sub(a: Term, b: Term) -> Term {
    bin(BinOp::Sub, a, b)
}
pub fn eq(a: Term, b: Term) -> Term {
    bin(BinOp::Eq, a, b)
}
pub fn lt(a: Term, b: Term) -> Term {
    bin(BinOp::Lt, a, b)
}
pub fn and(a: Term, b: Term) -> Term {
    bin(BinOp::And, a, b)
}
pub fn or(a: Term, b: Term) -> Term {
    bin(BinOp::Or, a, b)
}
/// Byte `i` (from the most significant end) of `x`.
pub fn byte_of(i: u32, x: Term) -> Term {
    bin(BinOp::Byte, from_u64(i as u64), x)
}

/// Builds `a <op> b` where `a` is the top-of-stack operand.
pub fn bin(op: BinOp, a: Term, b: Term) -> Term {
    let tags = a.tags | b.tags;
    if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
        return konst_tagged(op.apply(x, y), tags);
    }
    if let Some(t) = rewrite(op, &a, &b) {
        return with_tags(&t, tags);
    }
    // Keep constants on the right of commutative operators so that
    // equal terms built in different operand orders share a shape.
    let (a, b) = if op.is_commutative() && a.is_const() && !b.is_const() {
        (b, a)
    } else {
        (a, b)
    };
    let width = bin_width(op, &a, &b);
    make(Op::Bin(op, a, b), width, tags)
}

fn bin_width(op: BinOp, a: &Term, b: &Term) -> u32 {
    use BinOp::*;
    let (wa, wb) = (a.width(), b.width());
    match op {
        _ if op.is_predicate() => 1,
        And => wa.min(wb),
        Or | Xor => wa.max(wb),
        Add => (wa.max(wb) + 1).min(256),
        Mul => (wa + wb).min(256),
        Div => wa,
        Mod => wa.min(wb),
        Byte => 8,
        Shr => match a.as_const().and_then(word::to_u64) {
            Some(k) => wb.saturating_sub(k.min(256) as u32),
            None => wb,
        },
        Shl => match a.as_const().and_then(word::to_u64) {
            Some(k) => (wb + k.min(256) as u32).min(256),
            None => 256,
        },
        _ => 256,
    }
}

fn rewrite(op: BinOp, a: &Term, b: &Term) -> Option<Term> {
    use BinOp::*;
    let ca = a.as_const();
    let cb = b.as_const();
    let is = |c: Option<Word>, v: u64| c == Some(Word::from(v));
    match op {
        Add => {
            if is(ca, 0) {
                return Some(b.clone());
            }
            if is(cb, 0) {
                return Some(a.clone());
            }
        }
        Sub => {
            if is(cb, 0) {
                return Some(a.clone());
            }
            if same(a, b) {
                return Some(zero());
            }
        }
        Mul => {
            for (c, other) in [(ca, b), (cb, a)] {
                if let Some(c) = c {
                    if c.is_zero() {
                        return Some(zero());
                    }
                    if let Some(k) = word::power_of_two(c) {
                        return Some(bin(Shl, from_u64(k as u64), other.clone()));
                    }
                }
            }
        }
        Div => {
            if let Some(c) = cb {
                if c.is_zero() {
                    return Some(zero());
                }
                if let Some(k) = word::power_of_two(c) {
                    return Some(bin(Shr, from_u64(k as u64), a.clone()));
                }
            }
            if is(ca, 0) {
                return Some(zero());
            }
        }
        Mod => {
            if let Some(c) = cb {
                if c.is_zero() || c == Word::from(1u8) {
                    return Some(zero());
                }
                if let Some(k) = word::power_of_two(c) {
                    let mask = (Word::from(1u8) << k as usize) - Word::from(1u8);
                    return Some(bin(And, a.clone(), konst(mask)));
                }
                if a.width() < 256 && (Word::from(1u8) << a.width() as usize) <= c {
                    return Some(a.clone());
                }
            }
        }
        Exp => {
            if is(cb, 0) {
                return Some(one());
            }
            if is(cb, 1) {
                return Some(a.clone());
            }
            if let Some(base) = ca {
                if let Some(k) = word::power_of_two(base) {
                    // 2^(k*e) as a shift; shifts of 256 or more give zero.
                    let amount = bin(Mul, from_u64(k as u64), b.clone());
                    if b.width() <= 16 {
                        return Some(bin(Shl, amount, one()));
                    }
                }
            }
        }
        SignExtend => {
            if let Some(k) = ca.and_then(word::to_u64) {
                if k >= 31 || b.width() < 8 * (k as u32 + 1) {
                    return Some(b.clone());
                }
            }
        }
        Eq => {
            if same(a, b) {
                return Some(one());
            }
            if let Some(c) = cb.or(ca) {
                let other = if cb.is_some() { a } else { b };
                if word::bit_len(c) > other.width() {
                    return Some(zero());
                }
                if c.is_zero() {
                    return Some(iszero(other.clone()));
                }
            }
        }
        Lt => {
            if is(cb, 0) || same(a, b) {
                return Some(zero());
            }
            if let Some(c) = cb {
                if a.width() < 256 && (Word::from(1u8) << a.width() as usize) <= c {
                    return Some(one());
                }
            }
        }
        Gt => {
            if is(ca, 0) || same(a, b) {
                return Some(zero());
            }
            if let Some(c) = ca {
                if b.width() < 256 && (Word::from(1u8) << b.width() as usize) <= c {
                    return Some(one());
                }
            }
        }
        Slt | Sgt => {
            if same(a, b) {
                return Some(zero());
            }
        }
        And => {
            if same(a, b) {
                return Some(a.clone());
            }
            for (c, other) in [(ca, b), (cb, a)] {
                if let Some(c) = c {
                    if c.is_zero() {
                        return Some(zero());
                    }
                    if let Some(k) = word::low_mask_width(c) {
                        if other.width() <= k {
                            return Some(other.clone());
                        }
                    }
                }
            }
        }
        Or => {
            if same(a, b) {
                return Some(a.clone());
            }
            if is(ca, 0) {
                return Some(b.clone());
            }
            if is(cb, 0) {
                return Some(a.clone());
            }
        }
        Xor => {
            if same(a, b) {
                return Some(zero());
            }
            if is(ca, 0) {
                return Some(b.clone());
            }
            if is(cb, 0) {
                return Some(a.clone());
            }
        }
        Byte => {
            if let Some(i) = ca {
                if i >= Word::from(32u8) {
                    return Some(zero());
                }
                let i = i.as_limbs()[0] as u32;
                if b.width() <= 8 * (31 - i) {
                    return Some(zero());
                }
                if let Op::Concat(bytes) = &b.op {
                    let pad = 32 - bytes.len() as u32;
                    if i < pad {
                        return Some(zero());
                    }
                    return Some(bytes[(i - pad) as usize].clone());
                }
                if i == 31 && b.width() <= 8 {
                    return Some(b.clone());
                }
            }
        }
        Shl | Shr | Sar => {
            if is(ca, 0) {
                return Some(b.clone());
            }
            if let Some(k) = ca {
                if k >= Word::from(256u16) && op != Sar {
                    return Some(zero());
                }
                let k = word::to_u64(k).unwrap_or(256) as u32;
                if op == Shr {
                    if b.width() <= k {
                        return Some(zero());
                    }
                    if let Some(t) = shr_concat(k, b) {
                        return Some(t);
                    }
                    if let Op::Bin(Shl, k2, inner) = &b.op {
                        if k2.as_const() == Some(Word::from(k)) && inner.width() + k <= 256 {
                            return Some(inner.clone());
                        }
                    }
                }
                if op == Sar && b.width() < 256 {
                    return Some(bin(Shr, a.clone(), b.clone()));
                }
            }
        }
        _ => {}
    }
    None
}

/// `concat(bytes) >> k` for byte-aligned `k` drops trailing bytes.
fn shr_concat(k: u32, b: &Term) -> Option<Term> {
    if k % 8 != 0 {
        return None;
    }
    if let Op::Concat(bytes) = &b.op {
        let drop = (k / 8) as usize;
        if drop < bytes.len() {
            return Some(concat(bytes[..bytes.len() - drop].to_vec()));
        }
    }
    None
}

/// Renders a term with caller-supplied variable and symbol names. Output
/// is truncated at `limit` characters.
pub struct Pretty<'a> {
    pub term: &'a Term,
    pub var_name: &'a dyn Fn(VarId) -> String,
    pub limit: usize,
}

impl fmt::Display for Pretty<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        render(self.term, self.var_name, &mut out, self.limit);
        if out.len() > self.limit {
            let mut cut = self.limit;
            while !out.is_char_boundary(cut) {
                cut -= 1;
            }
            out.truncate(cut);
            out.push_str("...");
        }
        f.write_str(&out)
    }
}

fn render(t: &Term, names: &dyn Fn(VarId) -> String, out: &mut String, limit: usize) {
    if out.len() > limit {
        return;
    }
    match &t.op {
        Op::Const(c) => {
            if word::bit_len(*c) <= 32 {
                out.push_str(&c.to_string());
            } else {
                out.push_str(&format!("{c:#x}"));
            }
        }
        Op::Var(v) => out.push_str(&names(*v)),
        Op::Not(a) => call("not", &[a], names, out, limit),
        Op::IsZero(a) => call("iszero", &[a], names, out, limit),
        Op::Bin(o, a, b) => {
            let infix = match o {
                BinOp::Add => Some("+"),
                BinOp::Sub => Some("-"),
                BinOp::Mul => Some("*"),
                BinOp::Div => Some("/"),
                BinOp::Mod => Some("%"),
                BinOp::Lt => Some("<"),
                BinOp::Gt => Some(">"),
                BinOp::Eq => Some("=="),
                BinOp::And => Some("&"),
                BinOp::Or => Some("|"),
                BinOp::Xor => Some("^"),
                _ => None,
            };
            match infix {
                Some(sym) => {
                    out.push('(');
                    render(a, names, out, limit);
                    out.push(' ');
                    out.push_str(sym);
                    out.push(' ');
                    render(b, names, out, limit);
                    out.push(')');
                }
                None => call(o.name(), &[a, b], names, out, limit),
            }
        }
        Op::AddMod(a, b, c) => call("addmod", &[a, b, c], names, out, limit),
        Op::MulMod(a, b, c) => call("mulmod", &[a, b, c], names, out, limit),
        Op::Ite(a, b, c) => call("ite", &[a, b, c], names, out, limit),
        Op::Concat(v) => {
            let refs: Vec<&Term> = v.iter().collect();
            call("concat", &refs, names, out, limit)
        }
        Op::Keccak(v) => {
            let refs: Vec<&Term> = v.iter().collect();
            call("keccak", &refs, names, out, limit)
        }
        Op::Apply(s, v) => {
            let refs: Vec<&Term> = v.iter().collect();
            call(&format!("f{s}"), &refs, names, out, limit)
        }
    }
}

fn call(name: &str, args: &[&Term], names: &dyn Fn(VarId) -> String, out: &mut String, limit: usize) {
    out.push_str(name);
    out.push('(');
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        render(a, names, out, limit);
        if out.len() > limit {
            break;
        }
    }
    out.push(')');
}

/// Visits every distinct node reachable from `roots` once.
pub fn visit(roots: &[Term], mut f: impl FnMut(&Term)) {
    let mut seen = std::collections::HashSet::new();
    let mut stack: Vec<Term> = roots.to_vec();
    while let Some(t) = stack.pop() {
        if !seen.insert(Arc::as_ptr(&t) as usize) {
            continue;
        }
        f(&t);
        for c in t.children() {
            stack.push(c.clone());
        }
    }
}

/// Free variables of `roots` with their declared widths, in id order.
pub fn free_vars(roots: &[Term]) -> Vec<(VarId, u32)> {
    let mut vars = std::collections::BTreeMap::new();
    visit(roots, |t| {
        if let Op::Var(v) = t.op {
            vars.insert(v, t.width());
        }
    });
    vars.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(v: u64) -> Word {
        Word::from(v)
    }

    fn addr_mask() -> Term {
        konst((Word::from(1u8) << 160) - Word::from(1u8))
    }

    #[test]
    fn constants_fold() {
        let t = bin(BinOp::Add, from_u64(2), from_u64(3));
        assert_eq!(t.as_const(), Some(w(5)));
    }

    #[test]
    fn address_mask_on_narrow_var_disappears() {
        let caller = var(VarId(1), 160, 0);
        let masked = and(caller.clone(), addr_mask());
        assert!(same(&masked, &caller));
    }

    #[test]
    fn selector_extraction_reduces_to_prefix() {
        let bytes: Vec<Term> = (0..32).map(|i| var(VarId(i), 8, 0)).collect();
        let load = concat(bytes);
        let sel = bin(BinOp::Div, load, konst(Word::from(1u8) << 224));
        let sel = and(konst(w(0xffff_ffff)), sel);
        match sel.op() {
            Op::Concat(v) => assert_eq!(v.len(), 4),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(sel.width(), 32);
    }

    #[test]
    fn tags_survive_folding() {
        let a = konst_tagged(w(4), 0b10);
        let b = konst_tagged(w(6), 0b01);
        let s = add(a, b);
        assert_eq!(s.tags(), 0b11);
        assert_eq!(s.as_const(), Some(w(10)));
    }

    #[test]
    fn tags_do_not_affect_equality() {
        let a = var(VarId(3), 256, 0);
        let b = with_tags(&a, 4);
        assert!(same(&a, &b));
    }

    #[test]
    fn byte_of_word_reassembles() {
        let x = var(VarId(9), 256, 0);
        let bytes: Vec<Term> = (0..32).map(|i| byte_of(i, x.clone())).collect();
        assert!(same(&concat(bytes), &x));
    }

    #[test]
    fn narrow_word_reassembles_with_zero_prefix() {
        let x = var(VarId(9), 160, 0);
        let bytes: Vec<Term> = (0..32).map(|i| byte_of(i, x.clone())).collect();
        assert!(bytes[0].as_const() == Some(Word::ZERO));
        assert!(same(&concat(bytes), &x));
    }

    #[test]
    fn double_iszero_on_predicate() {
        let p = lt(var(VarId(1), 256, 0), from_u64(5));
        assert!(same(&iszero(iszero(p.clone())), &p));
    }

    #[test]
    fn eq_against_too_wide_constant_is_false() {
        let v = var(VarId(1), 8, 0);
        assert_eq!(eq(v, from_u64(300)).as_const(), Some(Word::ZERO));
    }

    #[test]
    fn pretty_prints_infix() {
        let t = lt(var(VarId(1), 256, 0), from_u64(5));
        let names = |v: VarId| format!("v{}", v.0);
        let s = Pretty { term: &t, var_name: &names, limit: 100 }.to_string();
        assert_eq!(s, "(v1 < 5)");
    }
}
