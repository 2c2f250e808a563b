//! Basic blocks and control-flow edges.
//!
//! Direct jumps are resolved from the `PUSH` that immediately precedes
//! them. The remaining jumps are resolved by simulating a constant-only
//! abstract stack over every reachable (block, stack) state, repeated until
//! no new edge appears.

mod dot;
mod functions;
mod stack;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::Serialize;

use crate::disasm::{Instruction, Program};
use crate::isa::{self, OpKind};

pub use dot::to_dot;
pub use functions::{discover_functions, is_payable_entry, EntryKind, FunctionEntry};
pub use stack::{simulate, AbsValue, AbstractStack};

/// Upper bound on distinct abstract entry stacks explored per block.
pub const STACK_SIM_PATH_CAP: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct BlockId(pub u32);

impl BlockId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Terminator {
    FallThrough,
    Jump,
    CondJump,
    Call,
    Terminal,
}

#[derive(Debug, Clone)]
pub struct BasicBlock {
    pub id: BlockId,
    /// Offset of the first instruction.
    pub start: u32,
    /// Offset of the last instruction.
    pub end: u32,
    /// Index range into [`Program::instructions`].
    pub first: usize,
    pub last: usize,
    pub terminator: Terminator,
    pub has_money_opcode: bool,
}

impl BasicBlock {
    pub fn label(&self) -> String {
        format!("Node_{}_{}", self.start, self.end)
    }

    pub fn instructions<'p>(&self, program: &'p Program) -> &'p [Instruction] {
        &program.instructions[self.first..=self.last]
    }

    pub fn last_opcode(&self, program: &Program) -> u8 {
        program.instructions[self.last].opcode
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum EdgeKind {
    Sequential,
    DirectJump,
    IndirectJump,
    CondTaken,
    CondFallthrough,
    /// From a block ending in a call-class instruction back to the root:
    /// the callee re-enters the contract.
    ExternalCallback,
    /// From a terminal block back to the root: the next transaction.
    NewTransaction,
}

impl EdgeKind {
    /// Edges that stay inside one transaction's execution.
    pub fn is_intra(self) -> bool {
        !matches!(self, EdgeKind::ExternalCallback | EdgeKind::NewTransaction)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub from: BlockId,
    pub to: BlockId,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum Diagnostic {
    /// A jump whose target is not a `JUMPDEST`.
    MalformedTarget { block: String, target: String },
    /// The jump target is unknown on at least one simulated path.
    UnresolvedIndirectJump { block: String },
    /// Stack simulation stopped at the state cap for this block.
    StackSimulationCapped { block: String },
    /// Stack underflow on every simulated path to this block.
    StackUnderflow { block: String },
    /// No selector dispatcher was recognised.
    NoDispatcher,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::MalformedTarget { block, target } => {
                write!(f, "{block}: jump target {target} is not a JUMPDEST")
            }
            Diagnostic::UnresolvedIndirectJump { block } => {
                write!(f, "{block}: indirect jump target could not be resolved on every path")
            }
            Diagnostic::StackSimulationCapped { block } => write!(
                f,
                "{block}: stack simulation stopped after {STACK_SIM_PATH_CAP} states"
            ),
            Diagnostic::StackUnderflow { block } => write!(f, "{block}: stack underflow"),
            Diagnostic::NoDispatcher => f.write_str("no function dispatcher recognised"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Cfg {
    pub program: Program,
    pub blocks: Vec<BasicBlock>,
    pub edges: BTreeSet<Edge>,
    succ: Vec<Vec<(BlockId, EdgeKind)>>,
    pub root: BlockId,
    /// Blocks whose jump target is still unknown on some path.
    pub dangling: BTreeSet<BlockId>,
    pub diagnostics: Vec<Diagnostic>,
    pub functions: Vec<FunctionEntry>,
}

impl Cfg {
    pub fn block(&self, id: BlockId) -> &BasicBlock {
        &self.blocks[id.index()]
    }

    pub fn successors(&self, id: BlockId) -> &[(BlockId, EdgeKind)] {
        &self.succ[id.index()]
    }

    pub fn block_at(&self, offset: u32) -> Option<BlockId> {
        self.blocks
            .binary_search_by_key(&offset, |b| b.start)
            .ok()
            .map(|i| BlockId(i as u32))
    }

    pub fn label(&self, id: BlockId) -> String {
        self.block(id).label()
    }

    /// Blocks reachable from the root over intra-transaction edges.
    pub fn reachable(&self) -> BTreeSet<BlockId> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![self.root];
        while let Some(b) = stack.pop() {
            if !seen.insert(b) {
                continue;
            }
            for &(t, k) in self.successors(b) {
                if k.is_intra() {
                    stack.push(t);
                }
            }
        }
        seen
    }

    /// True when any reachable block contains a money-related opcode.
    pub fn has_reachable_money_opcode(&self) -> bool {
        self.reachable()
            .iter()
            .any(|b| self.block(*b).has_money_opcode)
    }

    pub fn entry_of(&self, block: BlockId) -> Option<&FunctionEntry> {
        self.functions.iter().find(|f| f.entry == block)
    }

    fn add_edge(&mut self, from: BlockId, to: BlockId, kind: EdgeKind) -> bool {
        let e = Edge { from, to, kind };
        if self.edges.insert(e) {
            let s = &mut self.succ[from.index()];
            s.push((to, kind));
            s.sort();
            true
        } else {
            false
        }
    }

    pub fn edge_count(&self, kind: EdgeKind) -> usize {
        self.edges.iter().filter(|e| e.kind == kind).count()
    }
}

fn split_blocks(program: &Program) -> Vec<BasicBlock> {
    let ins = &program.instructions;
    let mut blocks = Vec::new();
    let mut start = 0usize;
    for i in 0..ins.len() {
        let info = ins[i].info();
        let ends = info.kind.intersects(OpKind::TERMINAL | OpKind::JUMP | OpKind::COND_JUMP | OpKind::CALL);
        let next_is_dest = ins.get(i + 1).is_some_and(|n| n.opcode == isa::JUMPDEST);
        if ends || next_is_dest || i + 1 == ins.len() {
            let terminator = if info.is_terminal() {
                Terminator::Terminal
            } else if info.kind.contains(OpKind::JUMP) {
                Terminator::Jump
            } else if info.kind.contains(OpKind::COND_JUMP) {
                Terminator::CondJump
            } else if info.is_call() {
                Terminator::Call
            } else if i + 1 == ins.len() {
                // Running off the end of the code halts like STOP.
                Terminator::Terminal
            } else {
                Terminator::FallThrough
            };
            let has_money_opcode = ins[start..=i].iter().any(|x| x.info().is_money());
            blocks.push(BasicBlock {
                id: BlockId(blocks.len() as u32),
                start: ins[start].offset,
                end: ins[i].offset,
                first: start,
                last: i,
                terminator,
                has_money_opcode,
            });
            start = i + 1;
        }
    }
    blocks
}

/// Builds the control-flow graph of a runtime program.
pub fn build_cfg(program: Program) -> Cfg {
    let blocks = split_blocks(&program);
    let n = blocks.len();
    let mut cfg = Cfg {
        program,
        blocks,
        edges: BTreeSet::new(),
        succ: vec![Vec::new(); n],
        root: BlockId(0),
        dangling: BTreeSet::new(),
        diagnostics: Vec::new(),
        functions: Vec::new(),
    };
    if n == 0 {
        return cfg;
    }
    let mut terminal_by_malformed = BTreeSet::new();
    for i in 0..n {
        let id = BlockId(i as u32);
        let b = cfg.blocks[i].clone();
        let next = if i + 1 < n { Some(BlockId(i as u32 + 1)) } else { None };
        match b.terminator {
            Terminator::FallThrough => {
                cfg.add_edge(id, next.unwrap(), EdgeKind::Sequential);
            }
            Terminator::Call => {
                if let Some(nx) = next {
                    cfg.add_edge(id, nx, EdgeKind::Sequential);
                }
                cfg.add_edge(id, cfg.root, EdgeKind::ExternalCallback);
            }
            Terminator::Terminal => {
                cfg.add_edge(id, cfg.root, EdgeKind::NewTransaction);
            }
            Terminator::Jump | Terminator::CondJump => {
                let cond = b.terminator == Terminator::CondJump;
                if cond {
                    if let Some(nx) = next {
                        cfg.add_edge(id, nx, EdgeKind::CondFallthrough);
                    }
                }
                let direct = if b.last > b.first {
                    let prev = &cfg.program.instructions[b.last - 1];
                    prev.info().is_push().then(|| prev.immediate.unwrap())
                } else {
                    None
                };
                match direct {
                    Some(target) => {
                        let kind = if cond { EdgeKind::CondTaken } else { EdgeKind::DirectJump };
                        match resolve_target(&cfg, target) {
                            Some(t) => {
                                cfg.add_edge(id, t, kind);
                            }
                            None => {
                                cfg.diagnostics.push(Diagnostic::MalformedTarget {
                                    block: b.label(),
                                    target: format!("{target:#x}"),
                                });
                                if !cond {
                                    terminal_by_malformed.insert(id);
                                }
                            }
                        }
                    }
                    None => {
                        cfg.dangling.insert(id);
                    }
                }
            }
        }
    }
    for id in terminal_by_malformed {
        cfg.blocks[id.index()].terminator = Terminator::Terminal;
        cfg.add_edge(id, cfg.root, EdgeKind::NewTransaction);
    }
    resolve_indirect(&mut cfg);
    cfg.functions = discover_functions(&cfg);
    if cfg.functions.iter().all(|f| f.selector.is_none()) {
        cfg.diagnostics.push(Diagnostic::NoDispatcher);
    }
    cfg
}

fn resolve_target(cfg: &Cfg, target: evmscope_smt::Word) -> Option<BlockId> {
    let t = evmscope_smt::word::to_u64(target)?;
    let t = u32::try_from(t).ok()?;
    if cfg.program.is_jumpdest(t) {
        cfg.block_at(t)
    } else {
        None
    }
}

#[derive(Default)]
struct Findings {
    targets: BTreeSet<evmscope_smt::Word>,
    unresolved: bool,
    capped: bool,
    any_path: bool,
}

fn resolve_indirect(cfg: &mut Cfg) {
    let mut findings;
    let mut malformed: BTreeMap<BlockId, BTreeSet<String>> = BTreeMap::new();
    loop {
        findings = explore_states(cfg);
        let mut changed = false;
        let dangling: Vec<BlockId> = cfg.dangling.iter().copied().collect();
        for d in dangling {
            let Some(f) = findings.get(&d) else { continue };
            let kind = if cfg.block(d).terminator == Terminator::CondJump {
                EdgeKind::CondTaken
            } else {
                EdgeKind::IndirectJump
            };
            for t in f.targets.clone() {
                match resolve_target(cfg, t) {
                    Some(b) => changed |= cfg.add_edge(d, b, kind),
                    None => {
                        malformed.entry(d).or_default().insert(format!("{t:#x}"));
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    // Blocks fully resolved leave the dangling set, as do jumps in code
    // that no path reaches (typically the metadata trailer).
    let dangling: Vec<BlockId> = cfg.dangling.iter().copied().collect();
    for d in dangling {
        let keep = match findings.get(&d) {
            None => false,
            Some(f) => f.unresolved || f.capped || !f.any_path,
        };
        if !keep {
            cfg.dangling.remove(&d);
        }
    }
    for (d, ts) in malformed {
        for t in ts {
            cfg.diagnostics.push(Diagnostic::MalformedTarget {
                block: cfg.label(d),
                target: t,
            });
        }
    }
    for d in cfg.dangling.clone() {
        let f = &findings[&d];
        let block = cfg.label(d);
        if f.capped {
            cfg.diagnostics.push(Diagnostic::StackSimulationCapped { block });
        } else if !f.any_path {
            cfg.diagnostics.push(Diagnostic::StackUnderflow { block });
        } else {
            cfg.diagnostics.push(Diagnostic::UnresolvedIndirectJump { block });
        }
    }
}

/// Explores every abstract state (block, entry stack) reachable from the
/// root over intra-transaction edges, and records the jump target seen at
/// each dangling block. A state is expanded once, so loops that leave the
/// stack unchanged terminate; each block admits at most
/// [`STACK_SIM_PATH_CAP`] distinct entry stacks.
fn explore_states(cfg: &Cfg) -> BTreeMap<BlockId, Findings> {
    let mut out: BTreeMap<BlockId, Findings> = BTreeMap::new();
    let mut seen: HashSet<(BlockId, AbstractStack)> = HashSet::new();
    let mut per_block = vec![0usize; cfg.blocks.len()];
    let mut work: Vec<(BlockId, AbstractStack)> = vec![(cfg.root, AbstractStack::default())];
    while let Some((b, stack)) = work.pop() {
        if seen.contains(&(b, stack.clone())) {
            continue;
        }
        if per_block[b.index()] >= STACK_SIM_PATH_CAP {
            out.entry(b).or_default().capped = true;
            continue;
        }
        per_block[b.index()] += 1;
        seen.insert((b, stack.clone()));
        let block = cfg.block(b);
        let ins = block.instructions(&cfg.program);
        if cfg.dangling.contains(&b) {
            let mut s = stack.clone();
            let f = out.entry(b).or_default();
            if simulate(&mut s, &ins[..ins.len() - 1]).is_ok() {
                f.any_path = true;
                match s.peek(0) {
                    Some(AbsValue::Const(c)) => {
                        f.targets.insert(c);
                    }
                    _ => f.unresolved = true,
                }
            }
        }
        let mut s = stack;
        if simulate(&mut s, ins).is_err() {
            continue;
        }
        for &(t, k) in cfg.successors(b).iter().rev() {
            if k.is_intra() {
                work.push((t, s.clone()));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disasm::{disassemble, parse_hex};

    fn cfg_of(hex: &str) -> Cfg {
        build_cfg(disassemble(&parse_hex(hex).unwrap()))
    }

    #[test]
    fn straight_line_stop() {
        let c = cfg_of("6001600201 00");
        assert_eq!(c.blocks.len(), 1);
        assert_eq!(c.label(BlockId(0)), "Node_0_5");
        assert_eq!(c.successors(BlockId(0)), &[(BlockId(0), EdgeKind::NewTransaction)]);
    }

    #[test]
    fn direct_and_conditional_jumps() {
        // 0: PUSH1 6  JUMPI-less jump to 6; 3: STOP; 4..: pad; 6: JUMPDEST STOP
        let c = cfg_of("600656 00 00 00 5b 00");
        let jd = c.block_at(6).unwrap();
        assert!(c.successors(BlockId(0)).contains(&(jd, EdgeKind::DirectJump)));
        let c = cfg_of("6001 6007 57 00 00 5b 00");
        let s = c.successors(BlockId(0));
        assert!(s.contains(&(BlockId(1), EdgeKind::CondFallthrough)));
        assert!(s.contains(&(c.block_at(7).unwrap(), EdgeKind::CondTaken)));
    }

    #[test]
    fn malformed_direct_target() {
        let c = cfg_of("600356 00");
        assert!(matches!(c.diagnostics[0], Diagnostic::MalformedTarget { .. }));
        assert_eq!(c.block(BlockId(0)).terminator, Terminator::Terminal);
    }

    #[test]
    fn call_gets_callback_and_sequential() {
        // CALL with seven zero arguments, then STOP.
        let c = cfg_of("6000600060006000600060006000 f1 00");
        let s = c.successors(BlockId(0));
        assert!(s.contains(&(BlockId(0), EdgeKind::ExternalCallback)));
        assert!(s.contains(&(BlockId(1), EdgeKind::Sequential)));
    }

    #[test]
    fn return_address_resolved_by_simulation() {
        // 0: PUSH1 8 PUSH1 6 JUMP | 5: STOP | 6: JUMPDEST JUMP | 8: JUMPDEST STOP
        let c = cfg_of("6008 6006 56 00 5b 56 5b 00");
        let ret = c.block_at(6).unwrap();
        let dest = c.block_at(8).unwrap();
        assert_eq!(c.successors(ret), &[(dest, EdgeKind::IndirectJump)]);
        assert!(c.dangling.is_empty());
    }

    #[test]
    fn unknown_target_stays_dangling() {
        // CALLVALUE JUMP
        let c = cfg_of("34 56");
        assert!(c.dangling.contains(&BlockId(0)));
        assert!(c
            .diagnostics
            .iter()
            .any(|d| matches!(d, Diagnostic::UnresolvedIndirectJump { .. })));
    }
}
