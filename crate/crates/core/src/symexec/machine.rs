//! Instruction semantics over symbolic words.

use std::sync::Arc;

use evmscope_smt::term::{self, BinOp, Term};
use evmscope_smt::{word, Model, Word};

use super::state::{Memory, Storage, StorageBase, MEMORY_LIMIT};
use super::vars::{EnvVar, TxVar, CTOR_TX, SYM_INITIAL_STORAGE};
use crate::cfg::{BlockId, Cfg, EdgeKind, Terminator};
use crate::disasm::Instruction;
use crate::isa::{self, GasSchedule};

/// Bytes of constructor arguments assumed to follow the creation code.
pub const CTOR_ARG_BYTES: u64 = 32 * 8;

/// Longest concrete memory range copied byte by byte.
const MAX_COPY: u64 = 4096;

/// Highest calldata index modelled; later bytes read as zero.
const MAX_CALLDATA_INDEX: u64 = 1 << 20;

const STACK_LIMIT: usize = 1024;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Halt {
    /// A constraint folded to false: the path cannot be taken.
    Refuted { offset: u32, reason: String },
    /// The path is not executable at all (stack underflow and the like).
    Malformed { offset: u32, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    Branch,
    JumpTarget,
    /// A successful transfer needs enough balance.
    Funds,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub term: Term,
    pub tx: u32,
    pub offset: u32,
    pub kind: ConstraintKind,
}

#[derive(Debug, Clone)]
pub struct CallEvent {
    pub offset: u32,
    pub opcode: u8,
    pub tx: u32,
    /// Callee; `None` for contract creation.
    pub to: Option<Term>,
    pub value: Term,
    pub success: Term,
    /// Set when the transaction containing the call was rolled back.
    pub reverted: bool,
}

#[derive(Debug, Clone)]
pub struct SelfDestructEvent {
    pub offset: u32,
    pub tx: u32,
    pub beneficiary: Term,
    pub amount: Term,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TxEnd {
    pub tx: u32,
    pub opcode: u8,
    pub reverted: bool,
}

/// Everything recorded along one path.
#[derive(Debug, Clone, Default)]
pub struct Log {
    pub constraints: Vec<Constraint>,
    pub calls: Vec<CallEvent>,
    pub selfdestructs: Vec<SelfDestructEvent>,
    pub hash_facts: Vec<(Vec<u8>, Word)>,
    pub tx_ends: Vec<TxEnd>,
    pub gas: u64,
}

#[derive(Debug, Clone)]
struct Snapshot {
    storage: Storage,
    balance: Term,
}

#[derive(Debug, Clone)]
pub struct State {
    pub stack: Vec<Term>,
    pub memory: Memory,
    pub storage: Storage,
    pub balance: Term,
    pub tx: u32,
    pub destroyed: bool,
    /// Counter for indexed variables (gas reads, call results, ...).
    pub counter: u32,
    pub last_call: Option<u32>,
    start: Arc<Snapshot>,
    pub log: Log,
}

impl State {
    pub fn constraints(&self) -> Vec<Term> {
        self.log.constraints.iter().map(|c| c.term.clone()).collect()
    }
}

/// Storage at the start of every analysed path.
#[derive(Debug, Clone)]
pub struct InitialStorage {
    pub storage: Storage,
    /// Constraints from the constructor run, which mention its variables.
    pub constraints: Vec<Constraint>,
    pub hash_facts: Vec<(Vec<u8>, Word)>,
}

impl InitialStorage {
    /// Unknown contents, for bytecode without creation code.
    pub fn symbolic() -> Self {
        InitialStorage {
            storage: Storage::new(StorageBase::Symbolic),
            constraints: Vec::new(),
            hash_facts: Vec::new(),
        }
    }
}

/// Executes blocks of one program.
pub struct Machine<'a> {
    pub cfg: &'a Cfg,
    pub gas: &'a GasSchedule,
    /// When set, environment variables take these values and execution is
    /// concrete.
    pub binding: Option<&'a Model>,
    /// Creation code: `CODESIZE` and `CODECOPY` see appended arguments.
    pub constructor: bool,
}

fn to_u64(t: &Term) -> Option<u64> {
    t.as_const().and_then(word::to_u64)
}

fn addr_mask() -> Term {
    term::konst((Word::from(1u8) << 160) - Word::from(1u8))
}

impl<'a> Machine<'a> {
    pub fn new(cfg: &'a Cfg, gas: &'a GasSchedule) -> Self {
        Machine {
            cfg,
            gas,
            binding: None,
            constructor: false,
        }
    }

    pub fn var_in(&self, tx: u32, v: EnvVar) -> Term {
        let id = TxVar::new(tx, v).id();
        match self.binding {
            Some(m) => {
                let mut value = m.get(id);
                if v.width() < 256 {
                    value &= (Word::from(1u8) << v.width() as usize) - Word::from(1u8);
                }
                term::konst_tagged(value, v.tags())
            }
            None => term::var(id, v.width(), v.tags()),
        }
    }

    fn var(&self, st: &State, v: EnvVar) -> Term {
        self.var_in(st.tx, v)
    }

    fn indexed(&self, st: &mut State, f: fn(u32) -> EnvVar) -> Term {
        let i = st.counter;
        st.counter += 1;
        self.var(st, f(i))
    }

    fn initial_slot(&self, key: &Term) -> Term {
        if let (Some(m), Some(k)) = (self.binding, key.as_const()) {
            let v = m
                .apps
                .get(&(SYM_INITIAL_STORAGE, vec![k]))
                .copied()
                .unwrap_or(Word::ZERO);
            return term::konst(v);
        }
        term::apply(SYM_INITIAL_STORAGE, vec![key.clone()], 0)
    }

    fn address(&self) -> Term {
        self.var_in(0, EnvVar::Address)
    }

    /// State at the start of the first transaction of a path.
    pub fn initial_state(&self, init: &InitialStorage) -> State {
        let tx = if self.constructor { CTOR_TX } else { 0 };
        let balance = if self.constructor {
            term::zero()
        } else {
            self.var_in(0, EnvVar::InitialBalance)
        };
        let mut st = State {
            stack: Vec::new(),
            memory: Memory::default(),
            storage: init.storage.clone(),
            balance: balance.clone(),
            tx,
            destroyed: false,
            counter: 0,
            last_call: None,
            start: Arc::new(Snapshot {
                storage: init.storage.clone(),
                balance,
            }),
            log: Log {
                constraints: init.constraints.clone(),
                hash_facts: init.hash_facts.clone(),
                ..Log::default()
            },
        };
        self.begin_tx(&mut st, tx);
        st
    }

    fn begin_tx(&self, st: &mut State, tx: u32) {
        st.tx = tx;
        st.stack.clear();
        st.memory = Memory::default();
        st.last_call = None;
        st.counter = 0;
        st.start = Arc::new(Snapshot {
            storage: st.storage.clone(),
            balance: st.balance.clone(),
        });
        let value = self.var(st, EnvVar::CallValue);
        st.balance = term::add(st.balance.clone(), value);
    }

    fn end_tx(&self, st: &mut State, opcode: u8, revert: bool) {
        if revert {
            st.storage = st.start.storage.clone();
            st.balance = st.start.balance.clone();
            let tx = st.tx;
            for c in st.log.calls.iter_mut().filter(|c| c.tx == tx) {
                c.reverted = true;
            }
            st.destroyed = false;
        }
        st.log.tx_ends.push(TxEnd {
            tx: st.tx,
            opcode,
            reverted: revert,
        });
    }

    fn assume(&self, st: &mut State, t: Term, offset: u32, kind: ConstraintKind) -> Result<(), Halt> {
        match t.as_const() {
            Some(c) if c.is_zero() => Err(Halt::Refuted {
                offset,
                reason: match kind {
                    ConstraintKind::JumpTarget => "jump target differs from the path".into(),
                    ConstraintKind::Branch => "branch condition is constant".into(),
                    ConstraintKind::Funds => "insufficient balance".into(),
                },
            }),
            Some(_) => Ok(()),
            None => {
                st.log.constraints.push(Constraint {
                    term: t,
                    tx: st.tx,
                    offset,
                    kind,
                });
                Ok(())
            }
        }
    }

    fn pop(&self, st: &mut State, at: u32) -> Result<Term, Halt> {
        st.stack.pop().ok_or(Halt::Malformed {
            offset: at,
            reason: "stack underflow".into(),
        })
    }

    fn push(&self, st: &mut State, t: Term, at: u32) -> Result<(), Halt> {
        if st.stack.len() >= STACK_LIMIT {
            return Err(Halt::Malformed {
                offset: at,
                reason: "stack overflow".into(),
            });
        }
        st.stack.push(t);
        Ok(())
    }

    /// Concrete (offset, length) for a memory range, if both are known and
    /// small enough to track.
    fn range(offset: &Term, len: &Term) -> Option<(u64, u64)> {
        let l = to_u64(len)?;
        if l == 0 {
            return Some((0, 0));
        }
        let o = to_u64(offset)?;
        if o.checked_add(l)? > MEMORY_LIMIT || l > MAX_COPY {
            return None;
        }
        Some((o, l))
    }

    fn read_mem(&self, st: &mut State, o: u64, l: u64) -> Vec<Term> {
        let tx = st.tx;
        let mut counter = st.counter;
        let out = {
            let mut unknown = || {
                let t = self.var_in(tx, EnvVar::FreshByte(counter));
                counter += 1;
                t
            };
            st.memory.read(o, l, &mut unknown)
        };
        st.counter = counter;
        out
    }

    fn calldata_byte(&self, st: &State, i: u64) -> Term {
        if i >= MAX_CALLDATA_INDEX {
            return term::zero();
        }
        let size = self.var(st, EnvVar::CalldataSize);
        let raw = self.var(st, EnvVar::CalldataByte(i as u32));
        term::ite(term::lt(term::from_u64(i), size), raw, term::zero())
    }

    fn code_byte(&self, i: u64) -> Term {
        let code = &self.cfg.program.code;
        if (i as usize) < code.len() {
            return term::from_u64(code[i as usize] as u64);
        }
        if self.constructor {
            let k = i - code.len() as u64;
            if k < CTOR_ARG_BYTES {
                return self.var_in(CTOR_TX, EnvVar::CtorArgByte(k as u32));
            }
        }
        term::zero()
    }

    fn copy_into_memory(
        &self,
        st: &mut State,
        dest: &Term,
        len: &Term,
        src: impl Fn(&Self, &mut State, u64) -> Term,
        src_offset: Option<u64>,
    ) {
        match (Self::range(dest, len), src_offset) {
            (Some((_, 0)), _) => {}
            (Some((d, l)), Some(s)) => {
                let bytes = (0..l).map(|i| src(self, st, s.saturating_add(i))).collect();
                st.memory.write(d, bytes);
            }
            _ => st.memory.havoc(),
        }
    }

    /// Executes one non-control instruction.
    fn step(&self, st: &mut State, ins: &Instruction) -> Result<(), Halt> {
        let at = ins.offset;
        let op = ins.opcode;
        st.log.gas += self.gas.cost(op) as u64;
        macro_rules! pop {
            () => {
                self.pop(st, at)?
            };
        }
        macro_rules! push {
            ($e:expr) => {{
                let v = $e;
                self.push(st, v, at)?
            }};
        }
        match op {
            0x01..=0x07 | 0x0a | 0x0b | 0x10..=0x14 | 0x16..=0x18 | 0x1a..=0x1d => {
                let o = match op {
                    0x01 => BinOp::Add,
                    0x02 => BinOp::Mul,
                    0x03 => BinOp::Sub,
                    0x04 => BinOp::Div,
                    0x05 => BinOp::SDiv,
                    0x06 => BinOp::Mod,
                    0x07 => BinOp::SMod,
                    0x0a => BinOp::Exp,
                    0x0b => BinOp::SignExtend,
                    0x10 => BinOp::Lt,
                    0x11 => BinOp::Gt,
                    0x12 => BinOp::Slt,
                    0x13 => BinOp::Sgt,
                    0x14 => BinOp::Eq,
                    0x16 => BinOp::And,
                    0x17 => BinOp::Or,
                    0x18 => BinOp::Xor,
                    0x1a => BinOp::Byte,
                    0x1b => BinOp::Shl,
                    0x1c => BinOp::Shr,
                    _ => BinOp::Sar,
                };
                let a = pop!();
                let b = pop!();
                push!(term::bin(o, a, b));
            }
            0x08 | 0x09 => {
                let a = pop!();
                let b = pop!();
                let n = pop!();
                push!(if op == 0x08 {
                    term::addmod(a, b, n)
                } else {
                    term::mulmod(a, b, n)
                });
            }
            0x15 => {
                let a = pop!();
                push!(term::iszero(a));
            }
            0x19 => {
                let a = pop!();
                push!(term::not(a));
            }
            0x20 => {
                let off = pop!();
                let len = pop!();
                match Self::range(&off, &len) {
                    Some((o, l)) => {
                        let bytes = self.read_mem(st, o, l);
                        let h = term::keccak(bytes.clone());
                        if let Some(v) = h.as_const() {
                            let data: Vec<u8> = bytes
                                .iter()
                                .map(|b| b.as_const().unwrap().as_limbs()[0] as u8)
                                .collect();
                            if !st.log.hash_facts.iter().any(|(d, _)| *d == data) {
                                st.log.hash_facts.push((data, v));
                            }
                        }
                        push!(h);
                    }
                    None => push!(self.indexed(st, EnvVar::Fresh)),
                }
            }
            0x30 => push!(self.address()),
            0x31 => {
                let a = pop!();
                let me = self.address();
                let masked = term::and(a.clone(), addr_mask());
                if term::same(&masked, &me) {
                    push!(st.balance.clone());
                } else {
                    push!(self.indexed(st, EnvVar::Balance));
                }
            }
            0x32 => push!(self.var(st, EnvVar::Origin)),
            0x33 => push!(self.var(st, EnvVar::Caller)),
            0x34 => push!(self.var(st, EnvVar::CallValue)),
            0x35 => {
                let off = pop!();
                match to_u64(&off) {
                    Some(o) => {
                        let bytes = (0..32u64)
                            .map(|i| self.calldata_byte(st, o.saturating_add(i)))
                            .collect();
                        push!(term::concat(bytes));
                    }
                    None if off.is_const() => push!(term::zero()),
                    None => push!(self.indexed(st, EnvVar::Fresh)),
                }
            }
            0x36 => push!(self.var(st, EnvVar::CalldataSize)),
            0x37 => {
                let dest = pop!();
                let off = pop!();
                let len = pop!();
                let src = to_u64(&off);
                self.copy_into_memory(st, &dest, &len, |m, st, i| m.calldata_byte(st, i), src);
            }
            0x38 => {
                let mut n = self.cfg.program.code.len() as u64;
                if self.constructor {
                    n += CTOR_ARG_BYTES;
                }
                push!(term::from_u64(n));
            }
            0x39 => {
                let dest = pop!();
                let off = pop!();
                let len = pop!();
                let src = to_u64(&off);
                self.copy_into_memory(st, &dest, &len, |m, _, i| m.code_byte(i), src);
            }
            0x3a => push!(self.var(st, EnvVar::GasPrice)),
            0x3b => {
                pop!();
                push!(self.indexed(st, EnvVar::ExtCodeSize));
            }
            0x3c => {
                pop!();
                let dest = pop!();
                let _off = pop!();
                let len = pop!();
                match Self::range(&dest, &len) {
                    Some((d, l)) => {
                        let bytes = (0..l).map(|_| self.indexed(st, EnvVar::FreshByte)).collect();
                        st.memory.write(d, bytes);
                    }
                    None => st.memory.havoc(),
                }
            }
            0x3d => match st.last_call {
                Some(k) => push!(self.var(st, EnvVar::ReturnDataSize(k))),
                None => push!(term::zero()),
            },
            0x3e => {
                let dest = pop!();
                let off = pop!();
                let len = pop!();
                match (st.last_call, to_u64(&off)) {
                    (Some(k), Some(o)) if o < 4096 => {
                        let tx = st.tx;
                        self.copy_into_memory(
                            st,
                            &dest,
                            &len,
                            move |m, _, i| {
                                if i < 4096 {
                                    m.var_in(tx, EnvVar::ReturnByte((k << 12) | i as u32))
                                } else {
                                    term::zero()
                                }
                            },
                            Some(o),
                        );
                    }
                    _ => st.memory.havoc(),
                }
            }
            0x3f => {
                pop!();
                push!(self.indexed(st, EnvVar::ExtCodeHash));
            }
            0x40 => {
                pop!();
                push!(self.indexed(st, EnvVar::BlockHash));
            }
            0x41 => push!(self.var(st, EnvVar::Coinbase)),
            0x42 => push!(self.var(st, EnvVar::Timestamp)),
            0x43 => push!(self.var(st, EnvVar::Number)),
            0x44 => push!(self.var(st, EnvVar::Difficulty)),
            0x45 => push!(self.var(st, EnvVar::GasLimit)),
            0x50 => {
                pop!();
            }
            0x51 => {
                let off = pop!();
                match Self::range(&off, &term::from_u64(32)) {
                    Some((o, _)) => {
                        let bytes = self.read_mem(st, o, 32);
                        push!(term::concat(bytes));
                    }
                    None => push!(self.indexed(st, EnvVar::Fresh)),
                }
            }
            0x52 => {
                let off = pop!();
                let v = pop!();
                match Self::range(&off, &term::from_u64(32)) {
                    Some((o, _)) => st.memory.store_word(o, &v),
                    None => st.memory.havoc(),
                }
            }
            0x53 => {
                let off = pop!();
                let v = pop!();
                match Self::range(&off, &term::one()) {
                    Some((o, _)) => st.memory.write_byte(o, term::byte_of(31, v)),
                    None => st.memory.havoc(),
                }
            }
            0x54 => {
                let key = pop!();
                let v = st.storage.load(&key, &|k| self.initial_slot(k));
                push!(v);
            }
            0x55 => {
                let key = pop!();
                let v = pop!();
                st.storage.store(key, v);
            }
            0x58 => push!(term::from_u64(at as u64)),
            0x59 => match st.memory.size() {
                Some(s) => push!(term::from_u64(s)),
                None => push!(self.indexed(st, EnvVar::Fresh)),
            },
            0x5a => push!(self.indexed(st, EnvVar::Gas)),
            0x5b => {}
            0x60..=0x7f => push!(term::konst(ins.immediate.unwrap())),
            0x80..=0x8f => {
                let n = (op - 0x80) as usize;
                let len = st.stack.len();
                if len <= n {
                    return Err(Halt::Malformed {
                        offset: at,
                        reason: "stack underflow".into(),
                    });
                }
                let v = st.stack[len - 1 - n].clone();
                push!(v);
            }
            0x90..=0x9f => {
                let n = (op - 0x90) as usize + 1;
                let len = st.stack.len();
                if len <= n {
                    return Err(Halt::Malformed {
                        offset: at,
                        reason: "stack underflow".into(),
                    });
                }
                st.stack.swap(len - 1, len - 1 - n);
            }
            0xa0..=0xa4 => {
                for _ in 0..(op - 0xa0 + 2) {
                    pop!();
                }
            }
            0xf0 | 0xf5 => {
                let value = pop!();
                pop!();
                pop!();
                if op == 0xf5 {
                    pop!();
                }
                let created = self.indexed(st, EnvVar::CreatedAddress);
                let ok = term::truthy(created.clone());
                self.transfer(st, at, op, None, value, ok)?;
                push!(created);
            }
            isa::CALL | isa::CALLCODE | isa::DELEGATECALL | isa::STATICCALL => {
                let _gas = pop!();
                let to = pop!();
                let value = if op == isa::CALL || op == isa::CALLCODE {
                    pop!()
                } else {
                    term::zero()
                };
                let _in_off = pop!();
                let _in_len = pop!();
                let out_off = pop!();
                let out_len = pop!();
                let k = st.counter;
                st.counter += 1;
                let success = self.var(st, EnvVar::CallSuccess(k));
                if op == isa::CALL {
                    self.transfer(st, at, op, Some(to), value, success.clone())?;
                } else {
                    st.log.calls.push(CallEvent {
                        offset: at,
                        opcode: op,
                        tx: st.tx,
                        to: Some(to),
                        value,
                        success: success.clone(),
                        reverted: false,
                    });
                }
                st.last_call = Some(k);
                let tx = st.tx;
                self.copy_into_memory(
                    st,
                    &out_off,
                    &out_len,
                    move |m, _, i| {
                        if i < 4096 {
                            m.var_in(tx, EnvVar::ReturnByte((k << 12) | i as u32))
                        } else {
                            term::zero()
                        }
                    },
                    Some(0),
                );
                push!(success);
            }
            _ => {
                return Err(Halt::Malformed {
                    offset: at,
                    reason: format!("unexpected {} inside a block", ins.mnemonic()),
                })
            }
        }
        Ok(())
    }

    /// Value leaves the contract when `ok` holds, which requires funds.
    fn transfer(
        &self,
        st: &mut State,
        at: u32,
        op: u8,
        to: Option<Term>,
        value: Term,
        ok: Term,
    ) -> Result<(), Halt> {
        let enough = term::iszero(term::lt(st.balance.clone(), value.clone()));
        let funded = term::or(term::iszero(ok.clone()), enough);
        self.assume(st, funded, at, ConstraintKind::Funds)?;
        st.balance = term::ite(ok.clone(), term::sub(st.balance.clone(), value.clone()), st.balance.clone());
        st.log.calls.push(CallEvent {
            offset: at,
            opcode: op,
            tx: st.tx,
            to,
            value,
            success: ok,
            reverted: false,
        });
        Ok(())
    }

    /// Executes a halting instruction and closes the transaction.
    fn halt(&self, st: &mut State, ins: &Instruction) -> Result<(), Halt> {
        let at = ins.offset;
        st.log.gas += self.gas.cost(ins.opcode) as u64;
        match ins.opcode {
            isa::STOP => self.end_tx(st, isa::STOP, false),
            isa::RETURN => {
                self.pop(st, at)?;
                self.pop(st, at)?;
                self.end_tx(st, isa::RETURN, false);
            }
            isa::REVERT => {
                self.pop(st, at)?;
                self.pop(st, at)?;
                self.end_tx(st, isa::REVERT, true);
            }
            isa::SELFDESTRUCT => {
                let beneficiary = self.pop(st, at)?;
                st.log.selfdestructs.push(SelfDestructEvent {
                    offset: at,
                    tx: st.tx,
                    beneficiary,
                    amount: st.balance.clone(),
                });
                st.balance = term::zero();
                st.destroyed = true;
                self.end_tx(st, isa::SELFDESTRUCT, false);
            }
            op => self.end_tx(st, op, true),
        }
        Ok(())
    }

    fn next_tx(&self, st: &mut State, at: u32) -> Result<(), Halt> {
        if st.destroyed {
            return Err(Halt::Refuted {
                offset: at,
                reason: "contract already destroyed".into(),
            });
        }
        let next = st.tx + 1;
        if next >= CTOR_TX {
            return Err(Halt::Malformed {
                offset: at,
                reason: "too many transactions".into(),
            });
        }
        self.begin_tx(st, next);
        Ok(())
    }

    /// Executes block `b` and leaves it towards `exit`, or to the end of the
    /// path when `exit` is `None`.
    pub fn exec_block(
        &self,
        st: &mut State,
        b: BlockId,
        exit: Option<(BlockId, EdgeKind)>,
    ) -> Result<(), Halt> {
        let block = self.cfg.block(b);
        let ins = block.instructions(&self.cfg.program);
        let (last, body) = ins.split_last().unwrap();
        for i in body {
            self.step(st, i)?;
        }
        let at = last.offset;
        let target_start = |t: BlockId| term::from_u64(self.cfg.block(t).start as u64);
        let info = last.info();
        match block.terminator {
            Terminator::Terminal => {
                if info.is_terminal() {
                    self.halt(st, last)?;
                } else if info.kind.intersects(isa::OpKind::JUMP | isa::OpKind::COND_JUMP) {
                    // Jump to a non-JUMPDEST: exceptional halt.
                    st.log.gas += self.gas.cost(last.opcode) as u64;
                    self.end_tx(st, isa::INVALID, true);
                } else {
                    // Running off the end of the code.
                    self.step(st, last)?;
                    self.end_tx(st, isa::STOP, false);
                }
                match exit {
                    None => Ok(()),
                    Some((_, EdgeKind::NewTransaction)) => self.next_tx(st, at),
                    Some((_, k)) => Err(Halt::Malformed {
                        offset: at,
                        reason: format!("terminal block left by {k:?}"),
                    }),
                }
            }
            Terminator::Jump => {
                st.log.gas += self.gas.cost(last.opcode) as u64;
                let target = self.pop(st, at)?;
                let Some((t, _)) = exit else {
                    return Err(Halt::Malformed {
                        offset: at,
                        reason: "path ends at a jump".into(),
                    });
                };
                let c = term::eq(target, target_start(t));
                self.assume(st, c, at, ConstraintKind::JumpTarget)
            }
            Terminator::CondJump => {
                st.log.gas += self.gas.cost(last.opcode) as u64;
                let target = self.pop(st, at)?;
                let cond = self.pop(st, at)?;
                match exit {
                    Some((t, EdgeKind::CondTaken)) => {
                        self.assume(st, term::truthy(cond), at, ConstraintKind::Branch)?;
                        let c = term::eq(target, target_start(t));
                        self.assume(st, c, at, ConstraintKind::JumpTarget)
                    }
                    Some((_, EdgeKind::CondFallthrough)) => {
                        self.assume(st, term::iszero(cond), at, ConstraintKind::Branch)
                    }
                    _ => Err(Halt::Malformed {
                        offset: at,
                        reason: "conditional jump left by an unexpected edge".into(),
                    }),
                }
            }
            Terminator::Call => {
                self.step(st, last)?;
                match exit {
                    Some((_, EdgeKind::Sequential)) => Ok(()),
                    Some((_, EdgeKind::ExternalCallback)) => self.next_tx(st, at),
                    _ => Err(Halt::Malformed {
                        offset: at,
                        reason: "call block left by an unexpected edge".into(),
                    }),
                }
            }
            Terminator::FallThrough => {
                self.step(st, last)?;
                Ok(())
            }
        }
    }

    /// Runs `blocks` from a fresh initial state, leaving each block along
    /// the edge to its successor.
    pub fn run_blocks(&self, init: &InitialStorage, blocks: &[BlockId]) -> Result<State, Halt> {
        let mut st = self.initial_state(init);
        for (i, b) in blocks.iter().enumerate() {
            let exit = match blocks.get(i + 1) {
                None => None,
                Some(next) => Some((*next, self.edge_kind(*b, *next).ok_or(Halt::Malformed {
                    offset: self.cfg.block(*b).end,
                    reason: "path does not follow a CFG edge".into(),
                })?)),
            };
            self.exec_block(&mut st, *b, exit)?;
        }
        Ok(st)
    }

    /// Kind of the edge from `a` to `b`. When several kinds connect the
    /// pair, the one with the smaller discriminant is chosen.
    pub fn edge_kind(&self, a: BlockId, b: BlockId) -> Option<EdgeKind> {
        self.cfg
            .successors(a)
            .iter()
            .find(|(t, _)| *t == b)
            .map(|(_, k)| *k)
    }
}
