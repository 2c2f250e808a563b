//! Selector dispatcher recognition.

use std::collections::BTreeSet;

use serde::Serialize;

use super::{BlockId, Cfg, EdgeKind, Terminator};
use crate::isa;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EntryKind {
    Function,
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionEntry {
    pub kind: EntryKind,
    pub selector: Option<[u8; 4]>,
    pub entry: BlockId,
    /// False when the entry starts with the compiler's value-rejection
    /// preamble.
    pub payable: bool,
}

impl FunctionEntry {
    pub fn selector_hex(&self) -> Option<String> {
        self.selector.map(|s| format!("0x{}", hex::encode(s)))
    }
}

enum Dispatch {
    Selector([u8; 4]),
    /// A range split on the selector (`PUSH4 x GT`), both sides dispatch.
    Split,
    Other,
}

fn classify(cfg: &Cfg, b: BlockId) -> Dispatch {
    let block = cfg.block(b);
    if block.terminator != Terminator::CondJump {
        return Dispatch::Other;
    }
    let ins = block.instructions(&cfg.program);
    let n = ins.len();
    if n < 3 || !ins[n - 2].info().is_push() {
        return Dispatch::Other;
    }
    let cmp = &ins[n - 3];
    let window = &ins[n.saturating_sub(5)..n - 3];
    let push4 = window.iter().rev().find(|i| i.opcode == isa::PUSH4);
    match (cmp.opcode, push4) {
        (isa::EQ, Some(p)) => {
            let bytes = p.immediate.unwrap().to_be_bytes::<32>();
            Dispatch::Selector([bytes[28], bytes[29], bytes[30], bytes[31]])
        }
        (0x10 | 0x11, Some(_)) => Dispatch::Split,
        _ => Dispatch::Other,
    }
}

fn is_guard(cfg: &Cfg, b: BlockId) -> bool {
    let block = cfg.block(b);
    block.terminator == Terminator::CondJump
        && block
            .instructions(&cfg.program)
            .iter()
            .any(|i| i.opcode == isa::CALLDATASIZE)
}

fn cond_targets(cfg: &Cfg, b: BlockId) -> (Option<BlockId>, Option<BlockId>) {
    let mut taken = None;
    let mut fall = None;
    for &(t, k) in cfg.successors(b) {
        match k {
            EdgeKind::CondTaken => taken = Some(t),
            EdgeKind::CondFallthrough => fall = Some(t),
            _ => {}
        }
    }
    (taken, fall)
}

/// Walks the dispatcher from the root. Each `PUSH4 sel EQ PUSH JUMPI` block
/// contributes its jump target as an entry. The first block that is neither
/// a dispatch step nor a calldata-size guard is the fallback entry. Without
/// any selector the root itself is the fallback.
pub fn discover_functions(cfg: &Cfg) -> Vec<FunctionEntry> {
    let mut entries: Vec<FunctionEntry> = Vec::new();
    if cfg.blocks.is_empty() {
        return entries;
    }
    let mut seen = BTreeSet::new();
    let mut fallback = None;
    let mut work = vec![cfg.root];
    while let Some(b) = work.pop() {
        if !seen.insert(b) {
            continue;
        }
        match classify(cfg, b) {
            Dispatch::Selector(sel) => {
                let (taken, fall) = cond_targets(cfg, b);
                if let Some(t) = taken {
                    if !entries.iter().any(|e| e.selector == Some(sel)) {
                        entries.push(FunctionEntry {
                            kind: EntryKind::Function,
                            selector: Some(sel),
                            entry: t,
                            payable: is_payable_entry(cfg, t),
                        });
                    }
                }
                work.extend(fall);
            }
            Dispatch::Split => {
                let (taken, fall) = cond_targets(cfg, b);
                work.extend(taken);
                work.extend(fall);
            }
            Dispatch::Other if is_guard(cfg, b) => {
                let (_, fall) = cond_targets(cfg, b);
                work.extend(fall);
            }
            Dispatch::Other => {
                if b == cfg.root && cfg.block(b).terminator == Terminator::FallThrough {
                    work.extend(cfg.successors(b).iter().map(|(t, _)| *t));
                    continue;
                }
                if fallback.is_none() {
                    fallback = Some(b);
                }
            }
        }
    }
    entries.sort_by_key(|e| e.selector);
    if entries.is_empty() {
        return vec![FunctionEntry {
            kind: EntryKind::Fallback,
            selector: None,
            entry: cfg.root,
            payable: is_payable_entry(cfg, cfg.root),
        }];
    }
    if let Some(f) = fallback {
        entries.push(FunctionEntry {
            kind: EntryKind::Fallback,
            selector: None,
            entry: f,
            payable: is_payable_entry(cfg, f),
        });
    }
    entries
}

/// Matches `CALLVALUE ISZERO PUSH JUMPI PUSH1 0 DUP1 REVERT` at the start of
/// the entry, after an optional `JUMPDEST` and, at the root, the free-memory
/// pointer setup. An entry without this guard accepts Ether.
pub fn is_payable_entry(cfg: &Cfg, entry: BlockId) -> bool {
    let ins = &cfg.program.instructions[cfg.block(entry).first..];
    let mut i = 0;
    if ins.first().is_some_and(|x| x.opcode == isa::JUMPDEST) {
        i = 1;
    }
    if entry == cfg.root
        && ins.len() >= 3
        && ins[0].info().is_push()
        && ins[1].info().is_push()
        && ins[2].opcode == 0x52
    {
        i = 3;
    }
    let ops: Vec<u8> = ins[i..].iter().take(7).map(|x| x.opcode).collect();
    let zero = ins
        .get(i + 4)
        .is_some_and(|x| x.immediate.is_some_and(|v| v.is_zero()));
    let guarded = ops.len() == 7
        && ops[0] == isa::CALLVALUE
        && ops[1] == isa::ISZERO
        && (ops[2] == isa::PUSH1 || ops[2] == isa::PUSH2)
        && ops[3] == isa::JUMPI
        && ops[4] == isa::PUSH1
        && zero
        && ops[5] == isa::DUP1
        && ops[6] == isa::REVERT;
    !guarded
}
