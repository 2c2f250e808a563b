use std::fmt::Write;

use super::{Cfg, EdgeKind};

fn style(kind: EdgeKind) -> &'static str {
    match kind {
        EdgeKind::Sequential | EdgeKind::CondFallthrough => "solid",
        EdgeKind::DirectJump | EdgeKind::CondTaken => "bold",
        EdgeKind::IndirectJump => "dashed",
        EdgeKind::ExternalCallback | EdgeKind::NewTransaction => "dotted",
    }
}

/// Graphviz rendering. Node names are block labels.
pub fn to_dot(cfg: &Cfg) -> String {
    let mut out = String::from("digraph cfg {\n  node [shape=box fontname=monospace];\n");
    for b in &cfg.blocks {
        let mut body = String::new();
        for i in b.instructions(&cfg.program) {
            match i.immediate {
                Some(v) => {
                    let _ = write!(body, "{} {} {:#x}\\l", i.offset, i.mnemonic(), v);
                }
                None => {
                    let _ = write!(body, "{} {}\\l", i.offset, i.mnemonic());
                }
            }
        }
        let color = if cfg.dangling.contains(&b.id) {
            " color=red"
        } else if b.has_money_opcode {
            " color=blue"
        } else {
            ""
        };
        let _ = writeln!(out, "  {} [label=\"{}\\n{}\"{}];", b.label(), b.label(), body, color);
    }
    for e in &cfg.edges {
        let _ = writeln!(
            out,
            "  {} -> {} [label=\"{:?}\" style={}];",
            cfg.label(e.from),
            cfg.label(e.to),
            e.kind,
            style(e.kind)
        );
    }
    out.push_str("}\n");
    out
}
