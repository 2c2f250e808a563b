//! Bounded unfolding of the CFG into program paths.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::cfg::{BlockId, Cfg, EdgeKind, Terminator};
use crate::isa;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathBounds {
    /// Maximum number of transactions and call-backs on one path.
    pub call_depth: u32,
    /// Maximum traversals of one back edge within a call segment.
    pub loop_bound: u32,
    pub max_blocks: usize,
    pub wall_time: Duration,
}

impl Default for PathBounds {
    fn default() -> Self {
        PathBounds {
            call_depth: 3,
            loop_bound: 5,
            max_blocks: 60,
            wall_time: Duration::from_secs(60),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Via {
    /// A transaction sent directly to the contract.
    Direct,
    /// Re-entry from an external call made by the previous segment.
    ExternalCallback,
}

/// Function invoked by one call segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Callee {
    Selector([u8; 4]),
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Segment {
    /// Index into [`ProgramPath::blocks`] of the segment's root block.
    pub start: usize,
    /// One past the last block of the segment.
    pub end: usize,
    pub via: Via,
    pub callee: Callee,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProgramPath {
    pub blocks: Vec<BlockId>,
    pub segments: Vec<Segment>,
    pub money_related: bool,
}

impl ProgramPath {
    pub fn call_count(&self) -> usize {
        self.segments.len()
    }

    pub fn segment_blocks(&self, i: usize) -> &[BlockId] {
        let s = &self.segments[i];
        &self.blocks[s.start..s.end]
    }

    pub fn labels(&self, cfg: &Cfg) -> Vec<String> {
        self.blocks.iter().map(|b| cfg.label(*b)).collect()
    }
}

/// Per-path state threaded through the unfolding. The structural
/// enumeration uses `()`; symbolic execution carries its machine state and
/// prunes a whole subtree as soon as a prefix is refuted.
pub trait Extension {
    type State: Clone;
    type Output;

    fn root(&self) -> Option<Self::State>;

    /// Executes block `from` and leaves it along the edge to `to`.
    fn advance(&self, state: &Self::State, from: BlockId, to: BlockId, kind: EdgeKind)
        -> Option<Self::State>;

    /// Executes the terminal block `at` to its end.
    fn finish(&self, state: &Self::State, at: BlockId) -> Option<Self::Output>;
}

/// The plain structural unfolding.
pub struct Structural;

impl Extension for Structural {
    type State = ();
    type Output = ();

    fn root(&self) -> Option<()> {
        Some(())
    }

    fn advance(&self, _: &(), _: BlockId, _: BlockId, _: EdgeKind) -> Option<()> {
        Some(())
    }

    fn finish(&self, _: &(), _: BlockId) -> Option<()> {
        Some(())
    }
}

struct Frame<S> {
    block: BlockId,
    next: usize,
    state: S,
    /// Back edge counted when this frame was entered.
    back_edge: Option<(BlockId, BlockId)>,
    /// Counters of the enclosing segment, restored on pop.
    saved_counters: Option<HashMap<(BlockId, BlockId), u32>>,
}

type Keep<'a> = Box<dyn Fn(&ProgramPath) -> bool + Send + 'a>;

/// Depth-first unfolding. Successors are visited in ascending block order
/// so the stream is deterministic.
pub struct Unfold<'a, X: Extension> {
    cfg: &'a Cfg,
    ext: X,
    bounds: PathBounds,
    deadline: Instant,
    stack: Vec<Frame<X::State>>,
    path: Vec<BlockId>,
    segments: Vec<(usize, Via)>,
    counters: HashMap<(BlockId, BlockId), u32>,
    keep: Option<Keep<'a>>,
    started: bool,
    timed_out: bool,
    pruned: usize,
}

impl<'a, X: Extension> Unfold<'a, X> {
    pub fn new(cfg: &'a Cfg, bounds: PathBounds, ext: X) -> Self {
        Unfold {
            cfg,
            ext,
            bounds,
            deadline: Instant::now() + bounds.wall_time,
            stack: Vec::new(),
            path: Vec::new(),
            segments: Vec::new(),
            counters: HashMap::new(),
            keep: None,
            started: false,
            timed_out: false,
            pruned: 0,
        }
    }

    /// Only paths accepted by `keep` are finished and emitted; the rest are
    /// still unfolded.
    pub fn with_filter(mut self, keep: impl Fn(&ProgramPath) -> bool + Send + 'a) -> Self {
        self.keep = Some(Box::new(keep));
        self
    }

    pub fn with_deadline(mut self, deadline: Instant) -> Self {
        self.deadline = deadline;
        self
    }

    /// True once the wall-time budget ran out and the stream was cut short.
    pub fn timed_out(&self) -> bool {
        self.timed_out
    }

    /// Number of edges the extension refused.
    pub fn pruned(&self) -> usize {
        self.pruned
    }

    pub fn extension(&self) -> &X {
        &self.ext
    }

    fn callee_of(&self, blocks: &[BlockId]) -> Callee {
        for b in blocks {
            if let Some(f) = self.cfg.entry_of(*b) {
                return match f.selector {
                    Some(s) => Callee::Selector(s),
                    None => Callee::Fallback,
                };
            }
        }
        Callee::Fallback
    }

    fn snapshot(&self) -> ProgramPath {
        let mut segments = Vec::with_capacity(self.segments.len());
        for (i, &(start, via)) in self.segments.iter().enumerate() {
            let end = self
                .segments
                .get(i + 1)
                .map_or(self.path.len(), |s| s.0);
            segments.push(Segment {
                start,
                end,
                via,
                callee: self.callee_of(&self.path[start..end]),
            });
        }
        let money_related = self
            .path
            .iter()
            .any(|b| self.cfg.block(*b).has_money_opcode);
        ProgramPath {
            blocks: self.path.clone(),
            segments,
            money_related,
        }
    }

    fn push(&mut self, block: BlockId, kind: Option<EdgeKind>, state: X::State) {
        let from = self.path.last().copied();
        let mut frame = Frame {
            block,
            next: 0,
            state,
            back_edge: None,
            saved_counters: None,
        };
        match kind {
            None => self.segments.push((0, Via::Direct)),
            Some(k) if !k.is_intra() => {
                let via = if k == EdgeKind::ExternalCallback {
                    Via::ExternalCallback
                } else {
                    Via::Direct
                };
                self.segments.push((self.path.len(), via));
                frame.saved_counters = Some(std::mem::take(&mut self.counters));
            }
            Some(_) => {
                let seg_start = self.segments.last().unwrap().0;
                if self.path[seg_start..].contains(&block) {
                    let e = (from.unwrap(), block);
                    *self.counters.entry(e).or_insert(0) += 1;
                    frame.back_edge = Some(e);
                }
            }
        }
        self.path.push(block);
        self.stack.push(frame);
    }

    fn pop(&mut self) {
        let f = self.stack.pop().unwrap();
        self.path.pop();
        if let Some(e) = f.back_edge {
            *self.counters.get_mut(&e).unwrap() -= 1;
        }
        if let Some(saved) = f.saved_counters {
            self.counters = saved;
            self.segments.pop();
        }
        if self.stack.is_empty() {
            self.segments.clear();
        }
    }

    fn admissible(&self, to: BlockId, kind: EdgeKind) -> bool {
        if self.path.len() >= self.bounds.max_blocks {
            return false;
        }
        if !kind.is_intra() {
            return self.segments.len() < self.bounds.call_depth as usize;
        }
        let seg_start = self.segments.last().unwrap().0;
        if self.path[seg_start..].contains(&to) {
            let from = *self.path.last().unwrap();
            let n = self.counters.get(&(from, to)).copied().unwrap_or(0);
            return n < self.bounds.loop_bound;
        }
        true
    }

    fn try_emit(&mut self, at: BlockId) -> Option<(ProgramPath, X::Output)> {
        if self.cfg.block(at).terminator != Terminator::Terminal {
            return None;
        }
        let path = self.snapshot();
        if let Some(keep) = &self.keep {
            if !keep(&path) {
                return None;
            }
        }
        let state = &self.stack.last().unwrap().state;
        match self.ext.finish(state, at) {
            Some(out) => Some((path, out)),
            None => {
                self.pruned += 1;
                None
            }
        }
    }
}

impl<X: Extension> Iterator for Unfold<'_, X> {
    type Item = (ProgramPath, X::Output);

    fn next(&mut self) -> Option<Self::Item> {
        if self.cfg.blocks.is_empty() || self.timed_out {
            return None;
        }
        if !self.started {
            self.started = true;
            if self.bounds.call_depth == 0 || self.bounds.max_blocks == 0 {
                return None;
            }
            let Some(s) = self.ext.root() else {
                return None;
            };
            self.push(self.cfg.root, None, s);
            if let Some(item) = self.try_emit(self.cfg.root) {
                return Some(item);
            }
        }
        let mut steps = 0u32;
        while let Some(top) = self.stack.last_mut() {
            steps = steps.wrapping_add(1);
            if steps % 256 == 0 && Instant::now() >= self.deadline {
                self.timed_out = true;
                self.stack.clear();
                return None;
            }
            let b = top.block;
            let succ = self.cfg.successors(b);
            if top.next >= succ.len() {
                self.pop();
                continue;
            }
            let (to, kind) = succ[top.next];
            top.next += 1;
            if !self.admissible(to, kind) {
                continue;
            }
            let state = &self.stack.last().unwrap().state;
            let Some(next) = self.ext.advance(state, b, to, kind) else {
                self.pruned += 1;
                continue;
            };
            self.push(to, Some(kind), next);
            if let Some(item) = self.try_emit(to) {
                return Some(item);
            }
        }
        None
    }
}

/// Structural path stream.
pub struct PathEnumerator<'a>(Unfold<'a, Structural>);

pub fn enumerate(cfg: &Cfg, bounds: PathBounds) -> PathEnumerator<'_> {
    PathEnumerator(Unfold::new(cfg, bounds, Structural))
}

impl PathEnumerator<'_> {
    pub fn timed_out(&self) -> bool {
        self.0.timed_out()
    }
}

impl Iterator for PathEnumerator<'_> {
    type Item = ProgramPath;

    fn next(&mut self) -> Option<ProgramPath> {
        self.0.next().map(|(p, ())| p)
    }
}

/// True for paths whose last segment returns normally from a payable entry.
pub fn is_payable_receive(cfg: &Cfg, path: &ProgramPath) -> bool {
    (0..path.segments.len()).any(|i| segment_receives(cfg, path, i))
}

/// Segment `i` enters a payable function and ends in `STOP` or `RETURN`.
pub fn segment_receives(cfg: &Cfg, path: &ProgramPath, i: usize) -> bool {
    let blocks = path.segment_blocks(i);
    let last = *blocks.last().unwrap();
    let op = cfg.block(last).last_opcode(&cfg.program);
    if op != isa::STOP && op != isa::RETURN {
        return false;
    }
    let entry = blocks.iter().find_map(|b| cfg.entry_of(*b));
    match entry {
        Some(e) => e.payable,
        None => false,
    }
}

/// Keeps money-related paths. When no reachable block holds a
/// money-related opcode, keeps paths that can receive Ether instead.
pub fn filter_money<'c, I>(cfg: &'c Cfg, paths: I) -> impl Iterator<Item = ProgramPath> + 'c
where
    I: Iterator<Item = ProgramPath> + 'c,
{
    let any_money = cfg.has_reachable_money_opcode();
    paths.filter(move |p| {
        if any_money {
            p.money_related
        } else {
            is_payable_receive(cfg, p)
        }
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PathStats {
    pub total: usize,
    pub money: usize,
    pub timed_out: bool,
}

/// Counts all and money-filtered paths for the given bounds.
pub fn count_paths(cfg: &Cfg, bounds: PathBounds) -> PathStats {
    let any_money = cfg.has_reachable_money_opcode();
    let mut it = enumerate(cfg, bounds);
    let mut stats = PathStats::default();
    for p in it.by_ref() {
        stats.total += 1;
        let keep = if any_money {
            p.money_related
        } else {
            is_payable_receive(cfg, &p)
        };
        if keep {
            stats.money += 1;
        }
    }
    stats.timed_out = it.timed_out();
    stats
}
