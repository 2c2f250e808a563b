//! Compressed solc source maps (`s:l:f:j;...`, one entry per instruction,
//! empty fields inherit from the previous entry).

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceRange {
    pub start: usize,
    pub length: usize,
    /// Source file index; negative for compiler-generated code.
    pub file: i32,
}

/// Decodes a compressed map into one range per instruction.
pub fn parse_source_map(map: &str) -> Vec<SourceRange> {
    let mut out = Vec::new();
    let mut cur = SourceRange {
        start: 0,
        length: 0,
        file: -1,
    };
    for entry in map.split(';') {
        let mut fields = entry.split(':');
        if let Some(s) = fields.next().filter(|s| !s.is_empty()) {
            cur.start = s.parse().unwrap_or(cur.start);
        }
        if let Some(l) = fields.next().filter(|s| !s.is_empty()) {
            cur.length = l.parse().unwrap_or(cur.length);
        }
        if let Some(f) = fields.next().filter(|s| !s.is_empty()) {
            cur.file = f.parse().unwrap_or(cur.file);
        }
        out.push(cur);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SourceSpan {
    pub offset: u32,
    pub start: usize,
    pub length: usize,
    /// 1-based line of the span start.
    pub line: usize,
    pub text: String,
}

/// Resolves the span of the instruction at `index`, if it maps into file 0
/// and lies within `source`.
pub fn span_of(
    ranges: &[SourceRange],
    source: &str,
    index: usize,
    offset: u32,
) -> Option<SourceSpan> {
    let r = ranges.get(index)?;
    if r.file != 0 || r.start + r.length > source.len() {
        return None;
    }
    let text = source.get(r.start..r.start + r.length)?;
    let line = source[..r.start].matches('\n').count() + 1;
    Some(SourceSpan {
        offset,
        start: r.start,
        length: r.length,
        line,
        text: text.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inherits_empty_fields() {
        let r = parse_source_map("25:150:0:-;;57:116;:2;98:1:-1");
        assert_eq!(r.len(), 5);
        assert_eq!(r[1], SourceRange { start: 25, length: 150, file: 0 });
        assert_eq!(r[2], SourceRange { start: 57, length: 116, file: 0 });
        assert_eq!(r[3], SourceRange { start: 57, length: 2, file: 0 });
        assert_eq!(r[4].file, -1);
    }

    #[test]
    fn span_lines() {
        let src = "a\nbcd\ne";
        let r = parse_source_map("2:3:0");
        let s = span_of(&r, src, 0, 7).unwrap();
        assert_eq!((s.line, s.text.as_str()), (2, "bcd"));
        assert!(span_of(&r, src, 1, 0).is_none());
    }
}
