use std::path::PathBuf;

use evmscope_core::cfg::{build_cfg, Cfg, EdgeKind, EntryKind};
use evmscope_core::disasm::{disassemble, load_contract};

fn fixture(name: &str) -> Cfg {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures/contracts")
        .join(format!("{name}.json"));
    let c = load_contract(&path).unwrap();
    build_cfg(disassemble(&c.runtime))
}

#[test]
fn toydao_block_labels() {
    let cfg = fixture("toydao");
    let labels: Vec<String> = cfg.blocks.iter().map(|b| b.label()).collect();
    for l in ["Node_0_12", "Node_81_87", "Node_112_162", "Node_305_307", "Node_100_101"] {
        assert!(labels.iter().any(|x| x == l), "missing {l}: {labels:?}");
    }
}

#[test]
fn toydao_return_jump_resolves_to_withdraw_tail() {
    let cfg = fixture("toydao");
    let ret = cfg.block_at(305).unwrap();
    let tail = cfg.block_at(100).unwrap();
    assert_eq!(cfg.successors(ret), &[(tail, EdgeKind::IndirectJump)]);
    assert!(cfg.dangling.is_empty(), "{:?}", cfg.diagnostics);
}

#[test]
fn toydao_functions() {
    let cfg = fixture("toydao");
    let sel: Vec<_> = cfg.functions.iter().map(|f| f.selector_hex()).collect();
    assert_eq!(
        sel,
        vec![Some("0x3ccfd60b".to_string()), Some("0xed88c68e".to_string()), None]
    );
    assert_eq!(cfg.block(cfg.functions[0].entry).start, 81);
    assert_eq!(cfg.block(cfg.functions[1].entry).start, 102);
    assert_eq!(cfg.functions[2].kind, EntryKind::Fallback);
    assert_eq!(cfg.block(cfg.functions[2].entry).start, 76);
    let payable: Vec<bool> = cfg.functions.iter().map(|f| f.payable).collect();
    // withdraw rejects value, donate accepts it; the fallback reverts
    // without the value check.
    assert_eq!(payable, vec![false, true, true]);
}

#[test]
fn every_fixture_resolves_without_dangling_jumps() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    let entries = std::fs::read_dir(root.join("contracts"))
        .unwrap()
        .chain(std::fs::read_dir(root.join("micro")).unwrap());
    for entry in entries {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "json") {
            let c = load_contract(&p).unwrap();
            let cfg = build_cfg(disassemble(&c.runtime));
            if p.ends_with("m19.json") {
                continue;
            }
            assert!(cfg.dangling.is_empty(), "{}: {:?}", p.display(), cfg.diagnostics);
            assert!(cfg.functions.len() >= 1);
        }
    }
}

#[test]
fn shared_internal_function_returns_merge_stacks() {
    // Two callers of one internal function: the return jump resolves to both
    // continuations, and the mismatched path leaves the callers' own returns
    // with an unknown target.
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/micro/m19.json");
    let c = load_contract(&path).unwrap();
    let cfg = build_cfg(disassemble(&c.runtime));
    let shared_ret = cfg
        .blocks
        .iter()
        .find(|b| {
            cfg.successors(b.id)
                .iter()
                .filter(|(_, k)| *k == EdgeKind::IndirectJump)
                .count()
                == 2
        })
        .expect("return block with two targets");
    let starts: Vec<u32> = cfg
        .successors(shared_ret.id)
        .iter()
        .map(|(t, _)| cfg.block(*t).start)
        .collect();
    assert_eq!(starts, vec![155, 192]);
    let labels: Vec<String> = cfg.dangling.iter().map(|d| cfg.label(*d)).collect();
    assert_eq!(labels, vec!["Node_155_182", "Node_192_220"]);
}

#[test]
fn bitway_approve_rejects_value() {
    let cfg = fixture("bitway");
    let approve = cfg
        .functions
        .iter()
        .find(|f| f.selector == Some([0x09, 0x5e, 0xa7, 0xb3]))
        .expect("approve entry");
    assert!(!approve.payable);
    let create = cfg
        .functions
        .iter()
        .find(|f| f.selector == Some([0xb4, 0x42, 0x72, 0x63]))
        .expect("createTokens entry");
    assert!(create.payable);
}

#[test]
fn payable_detection_agrees_with_compiler_metadata() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/contracts");
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_none_or(|e| e != "json") {
            continue;
        }
        let c = load_contract(&p).unwrap();
        let cfg = build_cfg(disassemble(&c.runtime));
        for f in &c.functions {
            let Some(declared) = f.payable else { continue };
            let found = cfg
                .functions
                .iter()
                .find(|e| e.selector == Some(f.selector))
                .unwrap_or_else(|| panic!("{}: no entry for {}", c.name, f.signature));
            assert_eq!(found.payable, declared, "{}: {}", c.name, f.signature);
        }
    }
}
