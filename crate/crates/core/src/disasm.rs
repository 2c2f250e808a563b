//! Hex decoding, instruction decoding and contract input formats.

use std::collections::HashMap;
use std::path::Path;

use evmscope_smt::Word;
use serde::Deserialize;

use crate::isa::{self, OpcodeInfo};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instruction {
    pub offset: u32,
    pub opcode: u8,
    /// PUSH operand, zero-padded on the right if the code ends early.
    pub immediate: Option<Word>,
    /// Set when a PUSH operand ran past the end of the code.
    pub truncated: bool,
}

impl Instruction {
    pub fn info(&self) -> &'static OpcodeInfo {
        isa::lookup(self.opcode)
    }

    pub fn mnemonic(&self) -> &'static str {
        self.info().mnemonic
    }

    pub fn size(&self) -> u32 {
        1 + self.info().immediate_bytes as u32
    }
}

/// Decoded bytecode with an offset index.
#[derive(Debug, Clone)]
pub struct Program {
    pub code: Vec<u8>,
    pub instructions: Vec<Instruction>,
    by_offset: HashMap<u32, usize>,
}

impl Program {
    pub fn index_at(&self, offset: u32) -> Option<usize> {
        self.by_offset.get(&offset).copied()
    }

    pub fn at(&self, offset: u32) -> Option<&Instruction> {
        self.index_at(offset).map(|i| &self.instructions[i])
    }

    /// True when `offset` is the start of a `JUMPDEST` instruction.
    pub fn is_jumpdest(&self, offset: u32) -> bool {
        self.at(offset).is_some_and(|i| i.opcode == isa::JUMPDEST)
    }
}

/// Decodes `code` linearly. Every byte is covered exactly once.
pub fn disassemble(code: &[u8]) -> Program {
    let mut instructions = Vec::new();
    let mut by_offset = HashMap::new();
    let mut pc = 0usize;
    while pc < code.len() {
        let opcode = code[pc];
        let info = isa::lookup(opcode);
        let n = info.immediate_bytes as usize;
        let (immediate, truncated) = if n > 0 {
            let mut buf = [0u8; 32];
            let avail = code.len().saturating_sub(pc + 1).min(n);
            // Operand bytes occupy the low `n` bytes of the word; missing
            // trailing bytes read as zero.
            buf[32 - n..32 - n + avail].copy_from_slice(&code[pc + 1..pc + 1 + avail]);
            (Some(Word::from_be_bytes(buf)), avail < n)
        } else {
            (None, false)
        };
        by_offset.insert(pc as u32, instructions.len());
        instructions.push(Instruction {
            offset: pc as u32,
            opcode,
            immediate,
            truncated,
        });
        pc += 1 + n;
    }
    Program {
        code: code.to_vec(),
        instructions,
        by_offset,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HexError {
    #[error("hex input has odd length {0}")]
    OddLength(usize),
    #[error("non-hex character {ch:?} at position {position}")]
    NonHexCharacter { position: usize, ch: char },
}

/// Accepts an optional `0x` prefix, ignores whitespace, any case.
pub fn parse_hex(text: &str) -> Result<Vec<u8>, HexError> {
    let trimmed = text.trim();
    let body = trimmed
        .strip_prefix("0x")
        .or_else(|| trimmed.strip_prefix("0X"))
        .unwrap_or(trimmed);
    let mut digits = Vec::with_capacity(body.len());
    for (position, ch) in body.chars().enumerate() {
        if ch.is_whitespace() {
            continue;
        }
        match ch.to_digit(16) {
            Some(d) => digits.push(d as u8),
            None => return Err(HexError::NonHexCharacter { position, ch }),
        }
    }
    if digits.len() % 2 != 0 {
        return Err(HexError::OddLength(digits.len()));
    }
    Ok(digits.chunks(2).map(|p| p[0] << 4 | p[1]).collect())
}

/// Known external function of a contract.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionSig {
    pub selector: [u8; 4],
    pub signature: String,
    /// As declared by the compiler, when known.
    pub payable: Option<bool>,
}

/// First four bytes of the keccak digest of a canonical signature.
pub fn selector_of(signature: &str) -> [u8; 4] {
    let h = evmscope_smt::word::keccak(signature.as_bytes()).to_be_bytes::<32>();
    [h[0], h[1], h[2], h[3]]
}

#[derive(Debug, Clone, Default)]
pub struct ContractInput {
    pub name: String,
    pub runtime: Vec<u8>,
    pub creation: Option<Vec<u8>>,
    pub source: Option<String>,
    /// Compressed solc source map for the runtime code.
    pub source_map: Option<String>,
    pub functions: Vec<FunctionSig>,
}

impl ContractInput {
    pub fn signature_of(&self, selector: [u8; 4]) -> Option<&FunctionSig> {
        self.functions.iter().find(|f| f.selector == selector)
    }

    /// Adds signatures without replacing those already known.
    pub fn merge_signatures(&mut self, extra: Vec<FunctionSig>) {
        for f in extra {
            if self.signature_of(f.selector).is_none() {
                self.functions.push(f);
            }
        }
        self.functions.sort_by_key(|f| f.selector);
    }
}

#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid JSON envelope: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid {field} bytecode: {source}")]
    Hex { field: &'static str, source: HexError },
    #[error("envelope has no runtime bytecode")]
    MissingRuntime,
    #[error("line {line}: cannot parse signature entry")]
    Signature { line: usize },
}

#[derive(Deserialize)]
struct Envelope {
    runtime: Option<String>,
    creation: Option<String>,
    name: Option<String>,
    source: Option<String>,
    source_map: Option<String>,
    #[serde(default)]
    functions: Vec<EnvelopeFunction>,
    #[serde(default)]
    signatures: HashMap<String, String>,
}

#[derive(Deserialize)]
struct EnvelopeFunction {
    selector: Option<String>,
    signature: String,
    payable: Option<bool>,
}

fn parse_selector(text: &str) -> Option<[u8; 4]> {
    let b = parse_hex(text).ok()?;
    b.try_into().ok()
}

/// Parses raw hex or a JSON envelope `{runtime, creation?, name?, ...}`.
pub fn parse_contract(text: &str, default_name: &str) -> Result<ContractInput, InputError> {
    let trimmed = text.trim_start();
    if !trimmed.starts_with('{') {
        let runtime = parse_hex(text).map_err(|source| InputError::Hex {
            field: "runtime",
            source,
        })?;
        return Ok(ContractInput {
            name: default_name.to_string(),
            runtime,
            ..Default::default()
        });
    }
    let env: Envelope = serde_json::from_str(text)?;
    let runtime = env.runtime.ok_or(InputError::MissingRuntime)?;
    let runtime = parse_hex(&runtime).map_err(|source| InputError::Hex {
        field: "runtime",
        source,
    })?;
    let creation = match env.creation {
        Some(c) if !c.trim().is_empty() => Some(parse_hex(&c).map_err(|source| InputError::Hex {
            field: "creation",
            source,
        })?),
        _ => None,
    };
    let mut functions = Vec::new();
    for f in env.functions {
        let selector = f
            .selector
            .as_deref()
            .and_then(parse_selector)
            .unwrap_or_else(|| selector_of(&f.signature));
        functions.push(FunctionSig {
            selector,
            signature: f.signature,
            payable: f.payable,
        });
    }
    for (sel, sig) in env.signatures {
        if let Some(selector) = parse_selector(&sel) {
            functions.push(FunctionSig {
                selector,
                signature: sig,
                payable: None,
            });
        }
    }
    let mut input = ContractInput {
        name: env.name.unwrap_or_else(|| default_name.to_string()),
        runtime,
        creation,
        source: env.source,
        source_map: env.source_map,
        functions: Vec::new(),
    };
    input.merge_signatures(functions);
    Ok(input)
}

pub fn load_contract(path: &Path) -> Result<ContractInput, InputError> {
    let text = std::fs::read_to_string(path).map_err(|source| InputError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "contract".to_string());
    parse_contract(&text, &stem)
}

/// Parses a signature list: one entry per line, either `signature` or
/// `0xSELECTOR signature`. `#` starts a comment.
pub fn parse_signatures(text: &str) -> Result<Vec<FunctionSig>, InputError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let first = parts.next().unwrap_or("");
        let (selector, signature) = match parts.next() {
            Some(sig) => (
                parse_selector(first).ok_or(InputError::Signature { line: n + 1 })?,
                sig.to_string(),
            ),
            None => (selector_of(first), first.to_string()),
        };
        if !signature.contains('(') || !signature.ends_with(')') {
            return Err(InputError::Signature { line: n + 1 });
        }
        out.push(FunctionSig {
            selector,
            signature,
            payable: None,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decodes_pushes_and_adds() {
        let p = disassemble(&parse_hex("0x6001600201").unwrap());
        let names: Vec<&str> = p.instructions.iter().map(|i| i.mnemonic()).collect();
        assert_eq!(names, ["PUSH1", "PUSH1", "ADD"]);
        assert_eq!(p.instructions[0].immediate, Some(Word::from(1u8)));
        assert_eq!(p.instructions[1].offset, 2);
    }

    #[test]
    fn truncated_push_is_right_padded() {
        let p = disassemble(&[0x61, 0xff]);
        assert_eq!(p.instructions.len(), 1);
        assert_eq!(p.instructions[0].immediate, Some(Word::from(0xff00u32)));
        assert!(p.instructions[0].truncated);
    }

    #[test]
    fn empty_code() {
        assert!(disassemble(&[]).instructions.is_empty());
    }

    #[test]
    fn hex_errors() {
        assert_eq!(parse_hex("abc"), Err(HexError::OddLength(3)));
        assert_eq!(
            parse_hex("0xzz"),
            Err(HexError::NonHexCharacter { position: 0, ch: 'z' })
        );
        assert_eq!(parse_hex(" 0xAB cd\n").unwrap(), vec![0xab, 0xcd]);
    }

    #[test]
    fn selectors() {
        assert_eq!(selector_of("withdraw()"), [0x3c, 0xcf, 0xd6, 0x0b]);
        assert_eq!(selector_of("donate()"), [0xed, 0x88, 0xc6, 0x8e]);
    }

    #[test]
    fn envelope_and_signature_file() {
        let c = parse_contract(
            r#"{"runtime": "0x00", "name": "X", "functions": [{"signature": "donate()", "payable": true}],
                "signatures": {"0x3ccfd60b": "withdraw()"}}"#,
            "fallback",
        )
        .unwrap();
        assert_eq!(c.name, "X");
        assert_eq!(c.functions.len(), 2);
        assert_eq!(c.signature_of([0xed, 0x88, 0xc6, 0x8e]).unwrap().payable, Some(true));
        let sigs = parse_signatures("withdraw()\n0xed88c68e donate() # comment\n").unwrap();
        assert_eq!(sigs[0].selector, selector_of("withdraw()"));
        assert_eq!(sigs[1].signature, "donate()");
        assert!(parse_signatures("0x12 nonsense").is_err());
    }
}
