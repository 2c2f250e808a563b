use std::path::PathBuf;
use std::time::Duration;

use evmscope_core::cfg::{build_cfg, Cfg};
use evmscope_core::disasm::{disassemble, load_contract, ContractInput};
use evmscope_core::isa::GasSchedule;
use evmscope_core::pathgen::{PathBounds, ProgramPath, Unfold};
use evmscope_core::symexec::{
    check_feasibility, run_constructor, ConstructorOutcome, Explorer, Feasibility, State,
};
use evmscope_smt::{BitBlastSolver, Word};

fn contract(name: &str) -> ContractInput {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures/contracts")
        .join(format!("{name}.json"));
    load_contract(&path).unwrap()
}

fn explore(cfg: &Cfg, c: &ContractInput, depth: u32) -> Vec<(ProgramPath, State)> {
    let gas = GasSchedule::default();
    let (init, outcome) = run_constructor(c.creation.as_deref(), &gas, Duration::from_secs(10));
    assert!(matches!(outcome, ConstructorOutcome::Ran { .. }), "{outcome:?}");
    let bounds = PathBounds {
        call_depth: depth,
        ..PathBounds::default()
    };
    let ex = Explorer::new(cfg, &gas, &init);
    Unfold::new(cfg, bounds, ex).collect()
}

#[test]
fn toydao_withdraw_sends_twenty_wei() {
    let c = contract("toydao");
    let cfg = build_cfg(disassemble(&c.runtime));
    let paths = explore(&cfg, &c, 1);
    let calls: Vec<_> = paths
        .iter()
        .flat_map(|(_, st)| st.log.calls.iter())
        .filter(|e| !e.reverted)
        .collect();
    assert!(!calls.is_empty());
    for e in calls {
        assert_eq!(e.value.as_const(), Some(Word::from(20u8)));
    }
}

#[test]
fn bitway_create_tokens_needs_value_above_300() {
    let c = contract("bitway");
    let cfg = build_cfg(disassemble(&c.runtime));
    let gas = GasSchedule::default();
    let (init, _) = run_constructor(c.creation.as_deref(), &gas, Duration::from_secs(10));
    let ex = Explorer::new(&cfg, &gas, &init);
    let bounds = PathBounds {
        call_depth: 1,
        ..PathBounds::default()
    };
    let sel = [0xb4, 0x42, 0x72, 0x63];
    let create = cfg
        .functions
        .iter()
        .find(|f| f.selector == Some(sel))
        .expect("createTokens entry");
    let mut found = false;
    for (p, st) in Unfold::new(&cfg, bounds, Explorer::new(&cfg, &gas, &init)) {
        if !p.blocks.contains(&create.entry) || st.log.tx_ends[0].reverted {
            continue;
        }
        let mut solver = BitBlastSolver::new();
        let f = check_feasibility(&ex.machine, &init, &p.blocks, &st, &mut solver, Duration::from_secs(5));
        if let Feasibility::Feasible(w) = f {
            assert_eq!(w.txs[0].value, Word::from(301u32));
            found = true;
        }
    }
    assert!(found);
}
