//! Property suites over generated bytecode, fixtures and ranking inputs.

use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;
use std::time::Duration;

use evmscope_core::analyzers::{estimate_gas, PropertyId, TransferLedger};
use evmscope_core::cfg::{build_cfg, Cfg, EdgeKind};
use evmscope_core::disasm::{disassemble, load_contract};
use evmscope_core::isa::{self, GasSchedule};
use evmscope_core::pathgen::{enumerate, PathBounds, ProgramPath};
use evmscope_core::ranker::{sort_ranked, RankConfig, RankedPath};
use evmscope_smt::Word;
use num_bigint::{BigInt, BigUint};
use proptest::prelude::*;

fn reassemble(code: &[u8]) -> Vec<u8> {
    let prog = disassemble(code);
    let mut out = Vec::new();
    for ins in &prog.instructions {
        out.push(ins.opcode);
        let n = ins.info().immediate_bytes as usize;
        if let Some(imm) = ins.immediate {
            out.extend_from_slice(&imm.to_be_bytes::<32>()[32 - n..]);
        }
    }
    out
}

/// Small programs with real jump structure: labelled JUMPDESTs, pushes of
/// their offsets, jumps and filler.
#[derive(Debug, Clone)]
enum Item {
    Dest,
    JumpTo(usize, bool),
    Op(u8),
    Stop,
}

fn item() -> impl Strategy<Value = Item> {
    prop_oneof![
        2 => Just(Item::Dest),
        3 => (0usize..8, any::<bool>()).prop_map(|(l, c)| Item::JumpTo(l, c)),
        4 => prop::sample::select(vec![0x01u8, 0x02, 0x03, 0x10, 0x14, 0x15, 0x16, 0x34, 0x35, 0x50, 0x54, 0x55, 0x80, 0x81, 0x90]).prop_map(Item::Op),
        1 => Just(Item::Stop),
    ]
}

fn assemble(items: &[Item]) -> Vec<u8> {
    // Two passes: every jump is PUSH2 + JUMP[I], so offsets are known.
    let mut dests = Vec::new();
    let mut pc = 0usize;
    for it in items {
        match it {
            Item::Dest => {
                dests.push(pc);
                pc += 1;
            }
            Item::JumpTo(_, c) => pc += 3 + 1 + if *c { 1 } else { 0 },
            Item::Op(_) | Item::Stop => pc += 1,
        }
    }
    let mut code = Vec::new();
    for it in items {
        match it {
            Item::Dest => code.push(isa::JUMPDEST),
            Item::JumpTo(l, c) => {
                if *c {
                    code.push(0x34); // CALLVALUE as the condition
                }
                // A label past the last JUMPDEST points at offset 0xffff.
                let t = dests.get(*l).copied().unwrap_or(0xffff);
                code.extend([0x61, (t >> 8) as u8, t as u8]);
                code.push(if *c { isa::JUMPI } else { isa::JUMP });
            }
            Item::Op(o) => code.push(*o),
            Item::Stop => code.push(isa::STOP),
        }
    }
    code
}

fn check_jump_targets(cfg: &Cfg) -> Result<(), TestCaseError> {
    for e in &cfg.edges {
        if matches!(e.kind, EdgeKind::DirectJump | EdgeKind::IndirectJump | EdgeKind::CondTaken) {
            let start = cfg.block(e.to).start;
            prop_assert!(cfg.program.is_jumpdest(start), "edge into non-JUMPDEST at {start}");
        }
    }
    Ok(())
}

fn fixture_cfgs() -> &'static Vec<(String, Cfg)> {
    static CFGS: std::sync::OnceLock<Vec<(String, Cfg)>> = std::sync::OnceLock::new();
    CFGS.get_or_init(|| {
        let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
        let mut out = Vec::new();
        for dir in ["contracts", "micro"] {
            let mut files: Vec<_> = std::fs::read_dir(root.join(dir))
                .unwrap()
                .map(|e| e.unwrap().path())
                .filter(|p| p.extension().is_some_and(|e| e == "json"))
                .collect();
            files.sort();
            for p in files {
                let c = load_contract(&p).unwrap();
                out.push((c.name.clone(), build_cfg(disassemble(&c.runtime))));
            }
        }
        out
    })
}

/// Independent re-check of a path against its bounds and the graph.
fn check_path(cfg: &Cfg, p: &ProgramPath, b: PathBounds) -> Result<(), TestCaseError> {
    prop_assert!(p.blocks.len() <= b.max_blocks);
    prop_assert!(p.call_count() >= 1 && p.call_count() <= b.call_depth as usize);
    prop_assert_eq!(p.segments[0].start, 0);
    prop_assert_eq!(p.segments.last().unwrap().end, p.blocks.len());
    for (i, s) in p.segments.iter().enumerate() {
        prop_assert_eq!(p.blocks[s.start], cfg.root);
        if i > 0 {
            prop_assert_eq!(p.segments[i - 1].end, s.start);
        }
        let seg = p.segment_blocks(i);
        let mut back: HashMap<_, u32> = HashMap::new();
        for k in 1..seg.len() {
            let (a, c) = (seg[k - 1], seg[k]);
            prop_assert!(
                cfg.successors(a).iter().any(|(t, kind)| *t == c && kind.is_intra()),
                "no intra edge {a:?} -> {c:?}"
            );
            if seg[..k].contains(&c) {
                let n = back.entry((a, c)).or_insert(0);
                *n += 1;
                prop_assert!(*n <= b.loop_bound, "back edge taken {} times", n);
            }
        }
    }
    Ok(())
}

fn props_from_mask(m: u8) -> BTreeSet<PropertyId> {
    [
        PropertyId::TransferLimit,
        PropertyId::NonExistingAddress,
        PropertyId::GuardSuicide,
        PropertyId::BlackHole,
        PropertyId::MaxGas,
    ]
    .into_iter()
    .enumerate()
    .filter(|(i, _)| m >> i & 1 == 1)
    .map(|(_, p)| p)
    .collect()
}

proptest! {
    #[test]
    fn disasm_round_trips(code in prop::collection::vec(any::<u8>(), 0..400)) {
        let back = reassemble(&code);
        prop_assert!(back.len() >= code.len());
        prop_assert_eq!(&back[..code.len()], &code[..]);
        prop_assert!(back[code.len()..].iter().all(|b| *b == 0));
        let prog = disassemble(&code);
        let mut pc = 0u32;
        for (i, ins) in prog.instructions.iter().enumerate() {
            prop_assert_eq!(ins.offset, pc);
            prop_assert!(!ins.truncated || i + 1 == prog.instructions.len());
            pc += ins.size();
        }
        prop_assert!(pc as usize >= code.len());
    }

    #[test]
    fn cfg_jump_edges_land_on_jumpdests(items in prop::collection::vec(item(), 1..60)) {
        let cfg = build_cfg(disassemble(&assemble(&items)));
        check_jump_targets(&cfg)?;
    }

    #[test]
    fn cfg_of_random_bytes_is_sound(code in prop::collection::vec(any::<u8>(), 0..300)) {
        let cfg = build_cfg(disassemble(&code));
        check_jump_targets(&cfg)?;
    }

    #[test]
    fn pathgen_respects_bounds(
        which in 0usize..50,
        call_depth in 1u32..4,
        loop_bound in 0u32..4,
        max_blocks in 1usize..70,
    ) {
        let cfgs = fixture_cfgs();
        let (_, cfg) = &cfgs[which % cfgs.len()];
        let b = PathBounds { call_depth, loop_bound, max_blocks, wall_time: Duration::from_secs(5) };
        for p in enumerate(cfg, b).take(300) {
            check_path(cfg, &p, b)?;
        }
    }

    #[test]
    fn transfer_ledger_is_monotone(
        limit in any::<u64>(),
        debits in prop::collection::vec(prop::option::weighted(0.8, any::<u64>()), 0..30),
    ) {
        let mut l = TransferLedger::new(BigUint::from(limit));
        let mut expected = BigInt::from(limit);
        let mut unknown = 0usize;
        for d in debits {
            let before = l.remaining().clone();
            l.debit(d.map(Word::from));
            let after = l.remaining();
            prop_assert!(after.known <= before.known);
            prop_assert!(after.unknown_debits >= before.unknown_debits);
            prop_assert!(!before.may_be_negative() || after.may_be_negative());
            match d {
                Some(v) => expected -= BigInt::from(v),
                None => unknown += 1,
            }
            prop_assert_eq!(&after.known, &expected);
            prop_assert_eq!(after.unknown_debits, unknown);
        }
    }

    #[test]
    fn ranking_order_is_scale_invariant(
        paths in prop::collection::vec((0u8..32, 1usize..5, prop::collection::vec(0u32..20, 1..6)), 0..40),
        k in prop::sample::select(vec![0.25f64, 0.5, 2.0, 3.0, 7.0, 10.0]),
    ) {
        let base = RankConfig::default();
        let mut scaled = base.clone();
        for p in [PropertyId::TransferLimit, PropertyId::NonExistingAddress, PropertyId::GuardSuicide, PropertyId::BlackHole] {
            scaled.set_alpha(p, base.alpha_of(p) * k);
        }
        let order = |cfg: &RankConfig| {
            let mut r: Vec<_> = paths
                .iter()
                .enumerate()
                .map(|(i, (m, len, blocks))| RankedPath::new(i, blocks.clone(), props_from_mask(*m), *len, cfg))
                .collect();
            sort_ranked(&mut r);
            r.into_iter().map(|p| p.item).collect::<Vec<_>>()
        };
        prop_assert_eq!(order(&base), order(&scaled));
    }

    #[test]
    fn gas_estimate_is_additive_over_segments(which in 0usize..50, skip in 0usize..200) {
        let cfgs = fixture_cfgs();
        let (_, cfg) = &cfgs[which % cfgs.len()];
        let gas = GasSchedule::default();
        let b = PathBounds { call_depth: 2, ..PathBounds::default() };
        if let Some(p) = enumerate(cfg, b).nth(skip) {
            let total = estimate_gas(cfg, &p, &gas);
            let parts: u64 = (0..p.call_count())
                .map(|i| {
                    let sub = ProgramPath { blocks: p.segment_blocks(i).to_vec(), segments: vec![], money_related: false };
                    estimate_gas(cfg, &sub, &gas)
                })
                .sum();
            prop_assert_eq!(total, parts);
            let cut = p.blocks.len() / 2;
            let head = ProgramPath { blocks: p.blocks[..cut].to_vec(), segments: vec![], money_related: false };
            let tail = ProgramPath { blocks: p.blocks[cut..].to_vec(), segments: vec![], money_related: false };
            prop_assert_eq!(total, estimate_gas(cfg, &head, &gas) + estimate_gas(cfg, &tail, &gas));
        }
    }
}
