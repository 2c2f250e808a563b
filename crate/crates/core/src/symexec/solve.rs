//! Solver queries and concrete replay.

use std::collections::BTreeMap;
use std::time::Duration;

use evmscope_smt::term::{self, Term};
use evmscope_smt::{word, CheckResult, Model, Solver, VarId, Word};
use serde::Serialize;

use super::machine::{InitialStorage, Machine, State};
use super::vars::{EnvVar, TxVar, CTOR_TX};
use crate::cfg::BlockId;

/// Largest calldata length decoded into a witness.
const MAX_WITNESS_CALLDATA: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TxInput {
    #[serde(serialize_with = "ser_word")]
    pub caller: Word,
    #[serde(serialize_with = "ser_word")]
    pub value: Word,
    #[serde(serialize_with = "ser_bytes")]
    pub calldata: Vec<u8>,
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "ser_opt_word")]
    pub timestamp: Option<Word>,
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "ser_opt_word")]
    pub number: Option<Word>,
}

fn ser_word<S: serde::Serializer>(w: &Word, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&w.to_string())
}

fn ser_opt_word<S: serde::Serializer>(w: &Option<Word>, s: S) -> Result<S::Ok, S::Error> {
    ser_word(w.as_ref().unwrap(), s)
}

fn ser_bytes<S: serde::Serializer>(b: &[u8], s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format!("0x{}", hex::encode(b)))
}

/// A satisfying assignment, with the inputs of each transaction decoded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub model: Model,
    pub txs: Vec<TxInput>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Feasibility {
    Feasible(Witness),
    Infeasible,
    Unknown(String),
}

impl Feasibility {
    pub fn label(&self) -> &'static str {
        match self {
            Feasibility::Feasible(_) => "feasible",
            Feasibility::Infeasible => "infeasible",
            Feasibility::Unknown(_) => "unknown",
        }
    }
}

/// Minimisation priority: per transaction calldata size, call value,
/// calldata bytes in order, caller; everything else afterwards.
fn order_key(id: VarId) -> (u32, u32, u32) {
    match TxVar::decode(id) {
        Some(v) => {
            let tx = if v.tx == CTOR_TX { u32::MAX } else { v.tx };
            let rank = match v.var {
                EnvVar::CalldataSize => (0, 0),
                EnvVar::CallValue => (1, 0),
                EnvVar::CalldataByte(i) => (2, i),
                EnvVar::Caller => (3, 0),
                _ => (4, id.0),
            };
            (if rank.0 < 4 { tx } else { u32::MAX - 1 }, rank.0, rank.1)
        }
        None => (u32::MAX, 5, id.0),
    }
}

fn minimisation_order(terms: &[Term]) -> Vec<VarId> {
    let mut vars: Vec<VarId> = term::free_vars(terms).into_iter().map(|(v, _)| v).collect();
    vars.sort_by_key(|v| (order_key(*v), v.0));
    vars
}

fn load_solver(solver: &mut dyn Solver, st: &State, extra: &[Term]) -> Vec<Term> {
    let mut terms = st.constraints();
    terms.extend(extra.iter().cloned());
    for t in &terms {
        solver.assert(t.clone());
    }
    for (data, out) in &st.log.hash_facts {
        solver.add_hash_fact(data.clone(), *out);
    }
    terms
}

fn decode_inputs(model: &Model, txs: u32) -> Vec<TxInput> {
    let get = |tx: u32, v: EnvVar| model.get(TxVar::new(tx, v).id());
    (0..txs)
        .map(|tx| {
            let size = word::to_u64(get(tx, EnvVar::CalldataSize))
                .unwrap_or(u64::MAX)
                .min(MAX_WITNESS_CALLDATA);
            let calldata = (0..size)
                .map(|i| get(tx, EnvVar::CalldataByte(i as u32)).byte(0))
                .collect();
            let has = |v: EnvVar| model.vars.contains_key(&TxVar::new(tx, v).id());
            TxInput {
                caller: get(tx, EnvVar::Caller),
                value: get(tx, EnvVar::CallValue),
                calldata,
                timestamp: has(EnvVar::Timestamp).then(|| get(tx, EnvVar::Timestamp)),
                number: has(EnvVar::Number).then(|| get(tx, EnvVar::Number)),
            }
        })
        .collect()
}

/// Concrete version of the initial storage under `model`.
fn concretize(init: &InitialStorage, model: &Model) -> InitialStorage {
    InitialStorage {
        storage: init.storage.map_terms(|t| term::konst(model.eval(t))),
        constraints: Vec::new(),
        hash_facts: init.hash_facts.clone(),
    }
}

/// Runs `blocks` with every input fixed by `model`. The replay succeeds
/// when no branch or jump disagrees with the path.
pub(crate) fn replays(
    machine: &Machine<'_>,
    init: &InitialStorage,
    blocks: &[BlockId],
    model: &Model,
) -> Result<State, String> {
    let bound = Machine {
        cfg: machine.cfg,
        gas: machine.gas,
        binding: Some(model),
        constructor: machine.constructor,
    };
    let init = concretize(init, model);
    let st = bound
        .run_blocks(&init, blocks)
        .map_err(|h| format!("replay halted: {h:?}"))?;
    if let Some(c) = st.log.constraints.iter().find(|c| !c.term.is_const()) {
        return Err(format!("replay left a symbolic condition at {}", c.offset));
    }
    Ok(st)
}

/// Decides whether the path that produced `st` can execute. A solver model
/// only counts once a concrete replay follows `blocks` exactly.
pub fn check_feasibility(
    machine: &Machine<'_>,
    init: &InitialStorage,
    blocks: &[BlockId],
    st: &State,
    solver: &mut dyn Solver,
    budget: Duration,
) -> Feasibility {
    let terms = load_solver(solver, st, &[]);
    let order = minimisation_order(&terms);
    match solver.check_minimal(&order, budget) {
        CheckResult::Unsat => Feasibility::Infeasible,
        CheckResult::Unknown(why) => Feasibility::Unknown(why),
        CheckResult::Sat(model) => match replays(machine, init, blocks, &model) {
            Ok(_) => {
                let txs = st.tx.min(CTOR_TX - 1) + 1;
                let txs = decode_inputs(&model, txs);
                Feasibility::Feasible(Witness { model, txs })
            }
            Err(why) => Feasibility::Unknown(why),
        },
    }
}

/// For each term, the unique value it can take under the path condition, if
/// the solver proves uniqueness given `model` as one satisfying assignment.
pub fn refine_values(
    st: &State,
    values: &[Term],
    model: &Model,
    mut fresh_solver: impl FnMut() -> Box<dyn Solver>,
    budget: Duration,
) -> Vec<Option<Word>> {
    let mut memo: BTreeMap<usize, Option<Word>> = BTreeMap::new();
    values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            if let Some(c) = v.as_const() {
                return Some(c);
            }
            if let Some(j) = values[..i].iter().position(|w| term::same(v, w)) {
                return memo[&j];
            }
            let candidate = model.eval(v);
            let mut s = fresh_solver();
            let differs = term::iszero(term::eq(v.clone(), term::konst(candidate)));
            load_solver(s.as_mut(), st, &[differs]);
            let r = match s.check(budget) {
                CheckResult::Unsat => Some(candidate),
                _ => None,
            };
            memo.insert(i, r);
            r
        })
        .collect()
}
