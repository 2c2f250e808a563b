use std::fmt::Write;

use super::{FeasibilityEntry, Report};

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

const STYLE: &str = "body{font-family:sans-serif;margin:2em;max-width:70em}\
table{border-collapse:collapse}td,th{border:1px solid #999;padding:2px 8px;text-align:left}\
.path{border:1px solid #ccc;margin:1em 0;padding:0.5em 1em}\
.warn{color:#a00}code,pre{background:#f4f4f4}mark{background:#ffd54f}";

/// Renders the report as one static HTML page.
pub fn to_html(r: &Report) -> String {
    let mut h = String::new();
    let title = format!("evmscope report: {}", r.contract);
    let _ = write!(
        h,
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>{}</title>\n<style>{STYLE}</style>\n</head>\n<body>\n<h1>{}</h1>\n",
        esc(&title),
        esc(&title)
    );
    let s = &r.statistics;
    h.push_str("<h2>Statistics</h2>\n<table>\n");
    let mut row = |k: &str, v: String| {
        let _ = writeln!(h, "<tr><th>{}</th><td>{}</td></tr>", esc(k), esc(&v));
    };
    row("Analysis time", format!("{:.3} s", r.elapsed.as_secs_f64()));
    row("Paths enumerated", s.paths_enumerated.to_string());
    row("Money-related paths", s.paths_money_related.to_string());
    row("Paths explored symbolically", s.paths_explored.to_string());
    row("Paths with violations", s.paths_violating.to_string());
    row("Paths above threshold", s.paths_gated.to_string());
    row("Paths checked by the solver", s.paths_symbolically_executed.to_string());
    row("Paths found infeasible", s.paths_infeasible.to_string());
    row("Timed out", s.timed_out.to_string());
    for (p, n) in &s.violations {
        row(&format!("Paths violating {p}"), n.to_string());
    }
    if let Some(g) = &s.max_gas {
        row(
            "Maximum gas (static lower-bound estimate)",
            format!("{} via {}", g.gas, g.call_sequence.join(" \u{2192} ")),
        );
    }
    h.push_str("</table>\n");
    if !r.diagnostics.is_empty() || !r.warnings.is_empty() {
        h.push_str("<h2>Diagnostics</h2>\n<ul>\n");
        for d in r.diagnostics.iter().chain(&r.warnings) {
            let _ = writeln!(h, "<li>{}</li>", esc(d));
        }
        h.push_str("</ul>\n");
    }
    let _ = writeln!(h, "<h2>Critical paths ({})</h2>", r.critical_paths.len());
    for p in &r.critical_paths {
        let _ = writeln!(
            h,
            "<div class=\"path\">\n<h3>#{} score {} ({} call{})</h3>",
            p.rank,
            p.score,
            p.length,
            if p.length == 1 { "" } else { "s" }
        );
        let _ = writeln!(
            h,
            "<p>Calls: <code>{}</code></p>",
            esc(&p.call_sequence.join(" \u{2192} "))
        );
        h.push_str("<ul>\n");
        for v in &p.violations {
            let _ = writeln!(
                h,
                "<li class=\"warn\"><strong>{}</strong>: {}</li>",
                esc(v.violation.property.name()),
                esc(&v.message)
            );
        }
        h.push_str("</ul>\n");
        let feas = match &p.feasibility {
            FeasibilityEntry::Feasible { .. } => "feasible (witness found and replayed)".to_string(),
            FeasibilityEntry::Unknown { reason } => format!("unknown: {reason}"),
            FeasibilityEntry::Deferred => "not checked (a shorter path has the same violations)".to_string(),
            FeasibilityEntry::Unchecked => "not checked (below threshold)".to_string(),
        };
        let _ = writeln!(h, "<p>Feasibility: {}. Gas estimate: {}.</p>", esc(&feas), p.gas);
        let _ = writeln!(h, "<p>Blocks: <code>{}</code></p>", esc(&p.blocks.join(" ")));
        if let (Some(src), false) = (&r.source, p.source_spans.is_empty()) {
            h.push_str("<pre>");
            h.push_str(&highlight(src, &p.source_spans));
            h.push_str("</pre>\n");
        }
        h.push_str("</div>\n");
    }
    h.push_str("</body>\n</html>\n");
    h
}

/// Lines of `src` touched by a span, with the spans marked.
fn highlight(src: &str, spans: &[crate::srcmap::SourceSpan]) -> String {
    let mut ranges: Vec<(usize, usize)> = spans.iter().map(|s| (s.start, s.start + s.length)).collect();
    ranges.sort();
    let mut merged: Vec<(usize, usize)> = Vec::new();
    for (a, b) in ranges {
        match merged.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => merged.push((a, b)),
        }
    }
    let mut out = String::new();
    let mut line_start = 0;
    for (n, line) in src.split_inclusive('\n').enumerate() {
        let line_end = line_start + line.len();
        let hits: Vec<(usize, usize)> = merged
            .iter()
            .filter(|(a, b)| *a < line_end && *b > line_start)
            .map(|(a, b)| ((*a).max(line_start) - line_start, (*b).min(line_end) - line_start))
            .collect();
        if !hits.is_empty() {
            let body = line.trim_end_matches('\n');
            let _ = write!(out, "{:>4} ", n + 1);
            let mut pos = 0;
            for (a, b) in hits {
                let (a, b) = (a.min(body.len()), b.min(body.len()));
                if a < pos || !body.is_char_boundary(a) || !body.is_char_boundary(b) {
                    continue;
                }
                out.push_str(&esc(&body[pos..a]));
                out.push_str("<mark>");
                out.push_str(&esc(&body[a..b]));
                out.push_str("</mark>");
                pos = b;
            }
            out.push_str(&esc(&body[pos..]));
            out.push('\n');
        }
        line_start = line_end;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn escapes_markup() {
        assert_eq!(esc("<a href=\"x\">&'"), "&lt;a href=&quot;x&quot;&gt;&amp;&#39;");
    }

    #[test]
    fn highlights_spans() {
        let src = "line one\nsend(x);\nend";
        let spans = vec![crate::srcmap::SourceSpan {
            offset: 0,
            start: 9,
            length: 4,
            line: 2,
            text: "send".into(),
        }];
        assert_eq!(highlight(src, &spans), "   2 <mark>send</mark>(x);\n");
    }
}
