use std::path::PathBuf;

use evmscope_core::cfg::{build_cfg, Cfg};
use evmscope_core::disasm::{disassemble, load_contract};
use evmscope_core::pathgen::{count_paths, enumerate, PathBounds};

fn fixture(name: &str) -> Cfg {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures/contracts")
        .join(format!("{name}.json"));
    build_cfg(disassemble(&load_contract(&path).unwrap().runtime))
}

fn bounds(depth: u32) -> PathBounds {
    PathBounds {
        call_depth: depth,
        ..PathBounds::default()
    }
}

#[test]
fn toydao_depth_one() {
    let cfg = fixture("toydao");
    let s = count_paths(&cfg, bounds(1));
    assert_eq!((s.total, s.money), (6, 2));
}

#[test]
fn toydao_counts_by_depth() {
    // Frozen from an independent segment-composition count over the same
    // graph: each path is a sequence of root-to-terminal or root-to-call
    // segments ending in a terminal, within 60 blocks.
    let cfg = fixture("toydao");
    let got: Vec<(usize, usize)> = (1..=4)
        .map(|d| {
            let s = count_paths(&cfg, bounds(d));
            (s.total, s.money)
        })
        .collect();
    assert_eq!(got, vec![(6, 2), (48, 28), (342, 258), (2400, 2060)]);
}

#[test]
fn emitted_paths_respect_bounds_on_all_fixtures() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/contracts");
    let b = PathBounds {
        call_depth: 2,
        loop_bound: 2,
        max_blocks: 40,
        ..PathBounds::default()
    };
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_none_or(|e| e != "json") {
            continue;
        }
        let cfg = build_cfg(disassemble(&load_contract(&p).unwrap().runtime));
        for path in enumerate(&cfg, b).take(20_000) {
            assert!(path.blocks.len() <= 40);
            assert!(path.call_count() <= 2);
            assert_eq!(path.blocks[0], cfg.root);
            assert_eq!(path.segments[0].start, 0);
            for s in &path.segments {
                assert_eq!(path.blocks[s.start], cfg.root);
            }
        }
    }
}
