//! Machine state: memory, storage and the per-path event log.

use std::collections::BTreeMap;
use std::sync::Arc;

use evmscope_smt::term::{self, BinOp, Op, Term};
use evmscope_smt::{word, Word};

use super::vars::TAG_STORAGE;

/// Largest memory offset tracked concretely; accesses past it are treated
/// like symbolic ones.
pub const MEMORY_LIMIT: u64 = 1 << 20;

/// Byte-addressed memory. Unwritten bytes read as zero unless a write at an
/// unknown offset has occurred, after which they are unknown.
#[derive(Debug, Clone)]
pub struct Memory {
    bytes: BTreeMap<u64, Term>,
    havoc: bool,
    /// Highest touched offset rounded up to a word, when known.
    size: Option<u64>,
}

impl Default for Memory {
    fn default() -> Self {
        Memory {
            bytes: BTreeMap::new(),
            havoc: false,
            size: Some(0),
        }
    }
}

impl Memory {
    pub fn is_havoc(&self) -> bool {
        self.havoc
    }

    pub fn size(&self) -> Option<u64> {
        self.size
    }

    fn touch(&mut self, offset: u64, len: u64) {
        if len == 0 {
            return;
        }
        if let Some(s) = self.size.as_mut() {
            let end = (offset + len).div_ceil(32) * 32;
            *s = (*s).max(end);
        }
    }

    /// Forgets all contents.
    pub fn havoc(&mut self) {
        self.bytes.clear();
        self.havoc = true;
        self.size = None;
    }

    pub fn read_byte(&mut self, offset: u64, unknown: &mut dyn FnMut() -> Term) -> Term {
        match self.bytes.get(&offset) {
            Some(b) => b.clone(),
            None if self.havoc => {
                let b = unknown();
                self.bytes.insert(offset, b.clone());
                b
            }
            None => term::zero(),
        }
    }

    pub fn read(&mut self, offset: u64, len: u64, unknown: &mut dyn FnMut() -> Term) -> Vec<Term> {
        self.touch(offset, len);
        (0..len).map(|i| self.read_byte(offset + i, unknown)).collect()
    }

    pub fn write_byte(&mut self, offset: u64, value: Term) {
        self.touch(offset, 1);
        if value.as_const() == Some(Word::ZERO) && !self.havoc {
            self.bytes.remove(&offset);
        } else {
            self.bytes.insert(offset, value);
        }
    }

    pub fn write(&mut self, offset: u64, bytes: Vec<Term>) {
        self.touch(offset, bytes.len() as u64);
        for (i, b) in bytes.into_iter().enumerate() {
            self.write_byte(offset + i as u64, b);
        }
    }

    /// 32-byte big-endian load.
    pub fn load_word(&mut self, offset: u64, unknown: &mut dyn FnMut() -> Term) -> Term {
        term::concat(self.read(offset, 32, unknown))
    }

    pub fn store_word(&mut self, offset: u64, value: &Term) {
        let bytes = (0..32).map(|i| term::byte_of(i, value.clone())).collect();
        self.write(offset, bytes);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StorageBase {
    /// Every slot not written so far holds zero (after a constructor run).
    Zero,
    /// Slots not written so far hold unknown values.
    Symbolic,
}

/// Read-over-write chain of storage writes.
#[derive(Debug, Clone)]
pub struct Storage {
    writes: Arc<Vec<(Term, Term)>>,
    pub base: StorageBase,
}

/// Splits `t` into a symbolic base and a constant offset.
fn split_offset(t: &Term) -> (Option<&Term>, Word) {
    if let Some(c) = t.as_const() {
        return (None, c);
    }
    if let Op::Bin(BinOp::Add, a, b) = t.op() {
        if let Some(c) = b.as_const() {
            return (Some(a), c);
        }
        if let Some(c) = a.as_const() {
            return (Some(b), c);
        }
    }
    (Some(t), Word::ZERO)
}

fn small(w: Word) -> bool {
    word::bit_len(w) <= 64
}

/// True when two keys can never denote the same slot under the usual
/// assumption that hash outputs do not collide with each other or with
/// small integers.
pub fn keys_differ(a: &Term, b: &Term) -> bool {
    let (ba, oa) = split_offset(a);
    let (bb, ob) = split_offset(b);
    match (ba, bb) {
        (None, None) => oa != ob,
        (Some(x), Some(y)) if term::same(x, y) => oa != ob,
        (Some(x), None) | (None, Some(x)) => {
            let (o1, o2) = if ba.is_some() { (oa, ob) } else { (ob, oa) };
            matches!(x.op(), Op::Keccak(_)) && small(o1) && small(o2)
        }
        (Some(x), Some(y)) => match (x.op(), y.op()) {
            (Op::Keccak(p), Op::Keccak(q)) => p.len() != q.len() && small(oa) && small(ob),
            _ => false,
        },
    }
}

impl Storage {
    pub fn new(base: StorageBase) -> Self {
        Storage {
            writes: Arc::new(Vec::new()),
            base,
        }
    }

    pub fn writes(&self) -> &[(Term, Term)] {
        &self.writes
    }

    /// Reads `key`; `initial` supplies the value of a never-written slot
    /// for a symbolic base.
    pub fn load(&self, key: &Term, initial: &dyn Fn(&Term) -> Term) -> Term {
        let mut result: Option<Term> = None;
        let mut pending: Vec<&(Term, Term)> = Vec::new();
        for w in self.writes.iter().rev() {
            if term::same(&w.0, key) {
                result = Some(w.1.clone());
                break;
            }
            if keys_differ(&w.0, key) {
                continue;
            }
            pending.push(w);
        }
        let mut value = match result {
            Some(v) => v,
            None => match self.base {
                StorageBase::Zero => term::zero(),
                StorageBase::Symbolic => initial(key),
            },
        };
        for (k, v) in pending.into_iter().rev() {
            value = term::ite(term::eq(key.clone(), k.clone()), v.clone(), value);
        }
        term::with_tags(&value, TAG_STORAGE)
    }

    /// Rewrites every key and value with `f`.
    pub fn map_terms(&self, f: impl Fn(&Term) -> Term) -> Storage {
        let writes = self.writes.iter().map(|(k, v)| (f(k), f(v))).collect();
        Storage {
            writes: Arc::new(writes),
            base: self.base,
        }
    }

    pub fn store(&mut self, key: Term, value: Term) {
        let w = Arc::make_mut(&mut self.writes);
        w.retain(|(k, _)| !term::same(k, &key));
        w.push((key, value));
    }
}
