//! A small concrete EVM used as a reference for the symbolic engine. It
//! covers the opcodes the compiled micro fixtures use and nothing more.

use std::collections::{BTreeSet, HashMap};

use evmscope_smt::word::{self, Word};

#[derive(Debug, Clone, Default)]
pub struct Env {
    pub caller: Word,
    pub value: Word,
    pub calldata: Vec<u8>,
    pub timestamp: Word,
    pub number: Word,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Stop,
    Return(Vec<u8>),
    Revert,
    Invalid,
}

impl Outcome {
    pub fn commits(&self) -> bool {
        matches!(self, Outcome::Stop | Outcome::Return(_))
    }
}

pub type Storage = HashMap<Word, Word>;

pub struct Run {
    /// Offsets of the block starts entered, in order.
    pub trace: Vec<u32>,
    pub outcome: Outcome,
}

fn jumpdests(code: &[u8]) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    let mut pc = 0;
    while pc < code.len() {
        let op = code[pc];
        if op == 0x5b {
            out.insert(pc);
        }
        pc += 1 + if (0x60..=0x7f).contains(&op) { (op - 0x5f) as usize } else { 0 };
    }
    out
}

fn small(w: Word) -> Option<usize> {
    word::to_u64(w).filter(|v| *v < (1 << 24)).map(|v| v as usize)
}

fn read(buf: &[u8], at: Word, len: usize) -> Vec<u8> {
    let at = small(at);
    (0..len)
        .map(|i| at.and_then(|a| buf.get(a + i).copied()).unwrap_or(0))
        .collect()
}

/// Runs `code` against `storage`. On revert or an exceptional halt the
/// storage is restored. `block_starts` selects which offsets are traced.
pub fn execute(code: &[u8], storage: &mut Storage, env: &Env, block_starts: &BTreeSet<u32>) -> Run {
    let saved = storage.clone();
    let run = step_all(code, storage, env, block_starts);
    if !run.outcome.commits() {
        *storage = saved;
    }
    run
}

fn step_all(code: &[u8], storage: &mut Storage, env: &Env, block_starts: &BTreeSet<u32>) -> Run {
    let dests = jumpdests(code);
    let mut stack: Vec<Word> = Vec::new();
    let mut mem: Vec<u8> = Vec::new();
    let mut trace = Vec::new();
    let mut pc = 0usize;
    let done = |trace: Vec<u32>, outcome| Run { trace, outcome };
    macro_rules! pop {
        () => {
            match stack.pop() {
                Some(v) => v,
                None => return done(trace, Outcome::Invalid),
            }
        };
    }
    macro_rules! grow {
        ($off:expr, $len:expr) => {{
            let (Some(o), l) = (small($off), $len) else {
                return done(trace, Outcome::Invalid);
            };
            if l > 0 && mem.len() < o + l {
                mem.resize((o + l).div_ceil(32) * 32, 0);
            }
            o
        }};
    }
    for _ in 0..200_000 {
        if block_starts.contains(&(pc as u32)) {
            trace.push(pc as u32);
        }
        let Some(&op) = code.get(pc) else {
            return done(trace, Outcome::Stop);
        };
        let mut next = pc + 1;
        match op {
            0x00 => return done(trace, Outcome::Stop),
            0x01..=0x07 | 0x0a | 0x0b | 0x10..=0x14 | 0x16..=0x18 | 0x1a..=0x1d => {
                let a = pop!();
                let b = pop!();
                stack.push(match op {
                    0x01 => word::add(a, b),
                    0x02 => word::mul(a, b),
                    0x03 => word::sub(a, b),
                    0x04 => word::div(a, b),
                    0x05 => word::sdiv(a, b),
                    0x06 => word::rem(a, b),
                    0x07 => word::srem(a, b),
                    0x0a => word::exp(a, b),
                    0x0b => word::signextend(a, b),
                    0x10 => word::lt(a, b),
                    0x11 => word::gt(a, b),
                    0x12 => word::slt(a, b),
                    0x13 => word::sgt(a, b),
                    0x14 => word::eq(a, b),
                    0x16 => word::and(a, b),
                    0x17 => word::or(a, b),
                    0x18 => word::xor(a, b),
                    0x1a => word::byte(a, b),
                    0x1b => word::shl(a, b),
                    0x1c => word::shr(a, b),
                    _ => word::sar(a, b),
                });
            }
            0x08 | 0x09 => {
                let (a, b, n) = (pop!(), pop!(), pop!());
                stack.push(if op == 0x08 { word::addmod(a, b, n) } else { word::mulmod(a, b, n) });
            }
            0x15 => {
                let a = pop!();
                stack.push(word::iszero(a));
            }
            0x19 => {
                let a = pop!();
                stack.push(!a);
            }
            0x20 => {
                let (off, len) = (pop!(), pop!());
                let Some(len) = small(len) else { return done(trace, Outcome::Invalid) };
                let o = grow!(off, len);
                stack.push(word::keccak(&mem[o..o + len]));
            }
            0x30 => stack.push(Word::from(0xc0ffeeu32)),
            0x31 => {
                pop!();
                stack.push(Word::ZERO);
            }
            0x32 | 0x33 => stack.push(env.caller),
            0x34 => stack.push(env.value),
            0x35 => {
                let at = pop!();
                stack.push(Word::from_be_slice(&read(&env.calldata, at, 32)));
            }
            0x36 => stack.push(Word::from(env.calldata.len())),
            0x37 | 0x39 => {
                let (dst, src, len) = (pop!(), pop!(), pop!());
                let Some(len) = small(len) else { return done(trace, Outcome::Invalid) };
                let d = grow!(dst, len);
                let from = if op == 0x37 { &env.calldata[..] } else { code };
                let bytes = read(from, src, len);
                mem[d..d + len].copy_from_slice(&bytes);
            }
            0x38 => stack.push(Word::from(code.len())),
            0x3a | 0x41 | 0x44 => stack.push(Word::ZERO),
            0x40 => {
                pop!();
                stack.push(Word::ZERO);
            }
            0x42 => stack.push(env.timestamp),
            0x43 => stack.push(env.number),
            0x45 | 0x5a => stack.push(Word::from(10_000_000u64)),
            0x50 => {
                pop!();
            }
            0x51 => {
                let off = pop!();
                let o = grow!(off, 32);
                stack.push(Word::from_be_slice(&mem[o..o + 32]));
            }
            0x52 => {
                let (off, v) = (pop!(), pop!());
                let o = grow!(off, 32);
                mem[o..o + 32].copy_from_slice(&v.to_be_bytes::<32>());
            }
            0x53 => {
                let (off, v) = (pop!(), pop!());
                let o = grow!(off, 1);
                mem[o] = v.byte(0);
            }
            0x54 => {
                let k = pop!();
                stack.push(storage.get(&k).copied().unwrap_or(Word::ZERO));
            }
            0x55 => {
                let (k, v) = (pop!(), pop!());
                storage.insert(k, v);
            }
            0x56 | 0x57 => {
                let target = pop!();
                let take = if op == 0x57 { !pop!().is_zero() } else { true };
                if take {
                    match small(target) {
                        Some(t) if dests.contains(&t) => next = t,
                        _ => return done(trace, Outcome::Invalid),
                    }
                }
            }
            0x58 => stack.push(Word::from(pc)),
            0x59 => stack.push(Word::from(mem.len())),
            0x5b => {}
            0x60..=0x7f => {
                let n = (op - 0x5f) as usize;
                let bytes = read(code, Word::from(pc + 1), n);
                stack.push(Word::from_be_slice(&bytes));
                next = pc + 1 + n;
            }
            0x80..=0x8f => {
                let i = (op - 0x80) as usize;
                if stack.len() <= i {
                    return done(trace, Outcome::Invalid);
                }
                stack.push(stack[stack.len() - 1 - i]);
            }
            0x90..=0x9f => {
                let i = (op - 0x8f) as usize;
                let n = stack.len();
                if n <= i {
                    return done(trace, Outcome::Invalid);
                }
                stack.swap(n - 1, n - 1 - i);
            }
            0xa0..=0xa4 => {
                for _ in 0..2 + (op - 0xa0) {
                    pop!();
                }
            }
            0xf3 | 0xfd => {
                let (off, len) = (pop!(), pop!());
                let Some(len) = small(len) else { return done(trace, Outcome::Invalid) };
                let o = grow!(off, len);
                let data = mem[o..o + len].to_vec();
                return done(trace, if op == 0xf3 { Outcome::Return(data) } else { Outcome::Revert });
            }
            _ => return done(trace, Outcome::Invalid),
        }
        if stack.len() > 1024 {
            return done(trace, Outcome::Invalid);
        }
        pc = next;
    }
    done(trace, Outcome::Invalid)
}

/// Runs creation code and returns the deployed runtime and storage.
pub fn deploy(creation: &[u8]) -> (Vec<u8>, Storage) {
    let mut storage = Storage::new();
    let run = execute(creation, &mut storage, &Env::default(), &BTreeSet::new());
    match run.outcome {
        Outcome::Return(code) => (code, storage),
        other => panic!("constructor did not return: {other:?}"),
    }
}
