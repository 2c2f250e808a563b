//! Symbolic execution of block paths.
//!
//! [`Explorer`] plugs the [`Machine`] into the path unfolding so that a
//! prefix refuted by constant folding prunes every path that extends it.
//! [`check_feasibility`] decides the remaining condition with a solver and
//! confirms a model by replaying the path concretely.

pub mod machine;
mod solve;
pub mod state;
pub mod vars;

use std::time::{Duration, Instant};

use crate::cfg::{build_cfg, BlockId, Cfg, EdgeKind};
use crate::disasm::disassemble;
use crate::isa::{self, GasSchedule};
use crate::pathgen::{Extension, PathBounds, Unfold};

pub use machine::{
    CallEvent, Constraint, ConstraintKind, Halt, InitialStorage, Log, Machine, SelfDestructEvent,
    State, TxEnd,
};
pub use solve::{check_feasibility, refine_values, Feasibility, TxInput, Witness};
pub use state::{Storage, StorageBase};

/// Path extension that carries a symbolic state.
pub struct Explorer<'a> {
    pub machine: Machine<'a>,
    pub init: &'a InitialStorage,
}

impl<'a> Explorer<'a> {
    pub fn new(cfg: &'a Cfg, gas: &'a GasSchedule, init: &'a InitialStorage) -> Self {
        Explorer {
            machine: Machine::new(cfg, gas),
            init,
        }
    }
}

impl Extension for Explorer<'_> {
    type State = State;
    type Output = State;

    fn root(&self) -> Option<State> {
        Some(self.machine.initial_state(self.init))
    }

    fn advance(&self, st: &State, from: BlockId, to: BlockId, kind: EdgeKind) -> Option<State> {
        let mut next = st.clone();
        self.machine
            .exec_block(&mut next, from, Some((to, kind)))
            .ok()
            .map(|_| next)
    }

    fn finish(&self, st: &State, at: BlockId) -> Option<State> {
        let mut last = st.clone();
        self.machine.exec_block(&mut last, at, None).ok().map(|_| last)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConstructorOutcome {
    /// No creation code was supplied.
    Absent,
    /// A single storage layout results from every returning path.
    Ran { paths: usize },
    /// No path returned, or returning paths disagree on storage.
    Diverged { reason: String },
}

/// Bounds for the constructor run: one transaction, loops unrolled as for
/// runtime paths, a generous block budget.
pub fn constructor_bounds(wall: Duration) -> PathBounds {
    PathBounds {
        call_depth: 1,
        loop_bound: 5,
        max_blocks: 400,
        wall_time: wall,
    }
}

/// Executes the creation code and returns the storage that seeds every
/// runtime path. Falls back to unknown storage when the run diverges.
pub fn run_constructor(
    creation: Option<&[u8]>,
    gas: &GasSchedule,
    wall: Duration,
) -> (InitialStorage, ConstructorOutcome) {
    let Some(code) = creation else {
        return (InitialStorage::symbolic(), ConstructorOutcome::Absent);
    };
    let cfg = build_cfg(disassemble(code));
    let empty = InitialStorage {
        storage: Storage::new(StorageBase::Zero),
        constraints: Vec::new(),
        hash_facts: Vec::new(),
    };
    let mut ex = Explorer::new(&cfg, gas, &empty);
    ex.machine.constructor = true;
    let bounds = constructor_bounds(wall);
    let mut unfold = Unfold::new(&cfg, bounds, ex).with_deadline(Instant::now() + wall);
    let mut returning: Vec<State> = Vec::new();
    for (_, st) in unfold.by_ref() {
        let ok = st
            .log
            .tx_ends
            .last()
            .is_some_and(|e| e.opcode == isa::RETURN && !e.reverted);
        if ok {
            returning.push(st);
        }
    }
    if unfold.timed_out() {
        return diverged("constructor exploration ran out of time");
    }
    let Some(first) = returning.first() else {
        return diverged("no constructor path returns");
    };
    let same_layout = returning.iter().all(|s| {
        let (a, b) = (s.storage.writes(), first.storage.writes());
        a.len() == b.len()
            && a.iter()
                .zip(b)
                .all(|(x, y)| evmscope_smt::term::same(&x.0, &y.0) && evmscope_smt::term::same(&x.1, &y.1))
    });
    if !same_layout {
        return diverged("constructor paths leave different storage");
    }
    let mut constraints = first.log.constraints.clone();
    if returning.len() > 1 {
        // Branch conditions differ between the paths; only the storage is
        // shared, so none of them is kept.
        constraints.clear();
    }
    let init = InitialStorage {
        storage: first.storage.clone(),
        constraints,
        hash_facts: first.log.hash_facts.clone(),
    };
    (
        init,
        ConstructorOutcome::Ran {
            paths: returning.len(),
        },
    )
}

fn diverged(reason: &str) -> (InitialStorage, ConstructorOutcome) {
    (
        InitialStorage::symbolic(),
        ConstructorOutcome::Diverged {
            reason: reason.to_string(),
        },
    )
}
