//! Opcode table for the Constantinople-era instruction set.

use std::collections::HashMap;
use std::fmt;
use std::sync::LazyLock;

use bitflags::bitflags;

bitflags! {
    /// Classification bits; an opcode may belong to several classes
    /// (`SELFDESTRUCT` is both terminal and money-related).
    #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
    pub struct OpKind: u16 {
        const TERMINAL = 1 << 0;
        const JUMP = 1 << 1;
        const COND_JUMP = 1 << 2;
        const JUMPDEST = 1 << 3;
        /// Transfers control to another account (CFG callback edges).
        const CALL = 1 << 4;
        const MONEY = 1 << 5;
        const ENV_READ = 1 << 6;
        const ARITHMETIC = 1 << 7;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpcodeInfo {
    pub code: u8,
    pub mnemonic: &'static str,
    pub immediate_bytes: u8,
    pub pops: u8,
    pub pushes: u8,
    pub gas: u32,
    pub kind: OpKind,
    /// False for bytes with no assigned instruction.
    pub defined: bool,
}

impl OpcodeInfo {
    pub fn is_terminal(&self) -> bool {
        self.kind.contains(OpKind::TERMINAL)
    }

    pub fn is_call(&self) -> bool {
        self.kind.contains(OpKind::CALL)
    }

    pub fn is_money(&self) -> bool {
        self.kind.contains(OpKind::MONEY)
    }

    pub fn is_push(&self) -> bool {
        (0x60..=0x7f).contains(&self.code)
    }
}

impl fmt::Display for OpcodeInfo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mnemonic)
    }
}

pub const STOP: u8 = 0x00;
pub const ADD: u8 = 0x01;
pub const ISZERO: u8 = 0x15;
pub const EQ: u8 = 0x14;
pub const CALLVALUE: u8 = 0x34;
pub const CALLDATALOAD: u8 = 0x35;
pub const CALLDATASIZE: u8 = 0x36;
pub const POP: u8 = 0x50;
pub const JUMP: u8 = 0x56;
pub const JUMPI: u8 = 0x57;
pub const JUMPDEST: u8 = 0x5b;
pub const PUSH1: u8 = 0x60;
pub const PUSH2: u8 = 0x61;
pub const PUSH4: u8 = 0x63;
pub const PUSH32: u8 = 0x7f;
pub const DUP1: u8 = 0x80;
pub const CREATE: u8 = 0xf0;
pub const CALL: u8 = 0xf1;
pub const CALLCODE: u8 = 0xf2;
pub const RETURN: u8 = 0xf3;
pub const DELEGATECALL: u8 = 0xf4;
pub const CREATE2: u8 = 0xf5;
pub const STATICCALL: u8 = 0xfa;
pub const REVERT: u8 = 0xfd;
pub const INVALID: u8 = 0xfe;
pub const SELFDESTRUCT: u8 = 0xff;

fn build() -> [OpcodeInfo; 256] {
    use OpKind as K;
    let mut t = [OpcodeInfo {
        code: 0,
        mnemonic: "UNKNOWN",
        immediate_bytes: 0,
        pops: 0,
        pushes: 0,
        gas: 0,
        kind: K::TERMINAL,
        defined: false,
    }; 256];
    for (i, e) in t.iter_mut().enumerate() {
        e.code = i as u8;
    }
    let mut set = |code: u8, name: &'static str, pops: u8, pushes: u8, gas: u32, kind: K| {
        t[code as usize] = OpcodeInfo {
            code,
            mnemonic: name,
            immediate_bytes: 0,
            pops,
            pushes,
            gas,
            kind,
            defined: true,
        };
    };
    let a = K::ARITHMETIC;
    let e = K::ENV_READ;
    let o = K::empty();
    set(0x00, "STOP", 0, 0, 0, K::TERMINAL);
    set(0x01, "ADD", 2, 1, 3, a);
    set(0x02, "MUL", 2, 1, 5, a);
    set(0x03, "SUB", 2, 1, 3, a);
    set(0x04, "DIV", 2, 1, 5, a);
    set(0x05, "SDIV", 2, 1, 5, a);
    set(0x06, "MOD", 2, 1, 5, a);
    set(0x07, "SMOD", 2, 1, 5, a);
    set(0x08, "ADDMOD", 3, 1, 8, a);
    set(0x09, "MULMOD", 3, 1, 8, a);
    set(0x0a, "EXP", 2, 1, 10, a);
    set(0x0b, "SIGNEXTEND", 2, 1, 5, a);
    set(0x10, "LT", 2, 1, 3, a);
    set(0x11, "GT", 2, 1, 3, a);
    set(0x12, "SLT", 2, 1, 3, a);
    set(0x13, "SGT", 2, 1, 3, a);
    set(0x14, "EQ", 2, 1, 3, a);
    set(0x15, "ISZERO", 1, 1, 3, a);
    set(0x16, "AND", 2, 1, 3, a);
    set(0x17, "OR", 2, 1, 3, a);
    set(0x18, "XOR", 2, 1, 3, a);
    set(0x19, "NOT", 1, 1, 3, a);
    set(0x1a, "BYTE", 2, 1, 3, a);
    set(0x1b, "SHL", 2, 1, 3, a);
    set(0x1c, "SHR", 2, 1, 3, a);
    set(0x1d, "SAR", 2, 1, 3, a);
    set(0x20, "SHA3", 2, 1, 30, o);
    set(0x30, "ADDRESS", 0, 1, 2, e);
    set(0x31, "BALANCE", 1, 1, 400, e);
    set(0x32, "ORIGIN", 0, 1, 2, e);
    set(0x33, "CALLER", 0, 1, 2, e);
    set(0x34, "CALLVALUE", 0, 1, 2, e);
    set(0x35, "CALLDATALOAD", 1, 1, 3, e);
    set(0x36, "CALLDATASIZE", 0, 1, 2, e);
    set(0x37, "CALLDATACOPY", 3, 0, 3, e);
    set(0x38, "CODESIZE", 0, 1, 2, e);
    set(0x39, "CODECOPY", 3, 0, 3, e);
    set(0x3a, "GASPRICE", 0, 1, 2, e);
    set(0x3b, "EXTCODESIZE", 1, 1, 700, e);
    set(0x3c, "EXTCODECOPY", 4, 0, 700, e);
    set(0x3d, "RETURNDATASIZE", 0, 1, 2, e);
    set(0x3e, "RETURNDATACOPY", 3, 0, 3, e);
    set(0x3f, "EXTCODEHASH", 1, 1, 400, e);
    set(0x40, "BLOCKHASH", 1, 1, 20, e);
    set(0x41, "COINBASE", 0, 1, 2, e);
    set(0x42, "TIMESTAMP", 0, 1, 2, e);
    set(0x43, "NUMBER", 0, 1, 2, e);
    set(0x44, "DIFFICULTY", 0, 1, 2, e);
    set(0x45, "GASLIMIT", 0, 1, 2, e);
    set(0x50, "POP", 1, 0, 2, o);
    set(0x51, "MLOAD", 1, 1, 3, o);
    set(0x52, "MSTORE", 2, 0, 3, o);
    set(0x53, "MSTORE8", 2, 0, 3, o);
    set(0x54, "SLOAD", 1, 1, 200, o);
    set(0x55, "SSTORE", 2, 0, 5000, o);
    set(0x56, "JUMP", 1, 0, 8, K::JUMP);
    set(0x57, "JUMPI", 2, 0, 10, K::COND_JUMP);
    set(0x58, "PC", 0, 1, 2, o);
    set(0x59, "MSIZE", 0, 1, 2, o);
    set(0x5a, "GAS", 0, 1, 2, e);
    set(0x5b, "JUMPDEST", 0, 0, 1, K::JUMPDEST);
    const PUSH: [&str; 32] = [
        "PUSH1", "PUSH2", "PUSH3", "PUSH4", "PUSH5", "PUSH6", "PUSH7", "PUSH8", "PUSH9",
        "PUSH10", "PUSH11", "PUSH12", "PUSH13", "PUSH14", "PUSH15", "PUSH16", "PUSH17",
        "PUSH18", "PUSH19", "PUSH20", "PUSH21", "PUSH22", "PUSH23", "PUSH24", "PUSH25",
        "PUSH26", "PUSH27", "PUSH28", "PUSH29", "PUSH30", "PUSH31", "PUSH32",
    ];
    const DUP: [&str; 16] = [
        "DUP1", "DUP2", "DUP3", "DUP4", "DUP5", "DUP6", "DUP7", "DUP8", "DUP9", "DUP10",
        "DUP11", "DUP12", "DUP13", "DUP14", "DUP15", "DUP16",
    ];
    const SWAP: [&str; 16] = [
        "SWAP1", "SWAP2", "SWAP3", "SWAP4", "SWAP5", "SWAP6", "SWAP7", "SWAP8", "SWAP9",
        "SWAP10", "SWAP11", "SWAP12", "SWAP13", "SWAP14", "SWAP15", "SWAP16",
    ];
    const LOG: [&str; 5] = ["LOG0", "LOG1", "LOG2", "LOG3", "LOG4"];
    for n in 0..32u8 {
        set(0x60 + n, PUSH[n as usize], 0, 1, 3, o);
    }
    for n in 0..16u8 {
        set(0x80 + n, DUP[n as usize], n + 1, n + 2, 3, o);
        set(0x90 + n, SWAP[n as usize], n + 2, n + 2, 3, o);
    }
    for n in 0..5u8 {
        set(0xa0 + n, LOG[n as usize], n + 2, 0, 375 * (n as u32 + 1), o);
    }
    set(0xf0, "CREATE", 3, 1, 32000, K::MONEY);
    set(0xf1, "CALL", 7, 1, 700, K::CALL | K::MONEY);
    set(0xf2, "CALLCODE", 7, 1, 700, K::CALL);
    set(0xf3, "RETURN", 2, 0, 0, K::TERMINAL);
    set(0xf4, "DELEGATECALL", 6, 1, 700, K::CALL | K::MONEY);
    set(0xf5, "CREATE2", 4, 1, 32000, o);
    set(0xfa, "STATICCALL", 6, 1, 700, K::CALL);
    set(0xfd, "REVERT", 2, 0, 0, K::TERMINAL);
    set(0xfe, "INVALID", 0, 0, 0, K::TERMINAL);
    set(0xff, "SELFDESTRUCT", 1, 0, 5000, K::TERMINAL | K::MONEY);
    for n in 0..32u8 {
        t[0x60 + n as usize].immediate_bytes = n + 1;
    }
    t
}

static TABLE: LazyLock<[OpcodeInfo; 256]> = LazyLock::new(build);

static BY_NAME: LazyLock<HashMap<&'static str, u8>> = LazyLock::new(|| {
    TABLE
        .iter()
        .filter(|i| i.defined)
        .map(|i| (i.mnemonic, i.code))
        .collect()
});

/// Metadata for any byte. Unassigned bytes come back with `defined ==
/// false` and are classified as terminal.
pub fn lookup(byte: u8) -> &'static OpcodeInfo {
    &TABLE[byte as usize]
}

pub fn by_mnemonic(name: &str) -> Option<u8> {
    BY_NAME.get(name.to_ascii_uppercase().as_str()).copied()
}

pub fn table() -> &'static [OpcodeInfo; 256] {
    &TABLE
}

pub fn is_money_related(byte: u8) -> bool {
    lookup(byte).is_money()
}

/// Static gas costs, optionally overridden from a text table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GasSchedule {
    costs: [u32; 256],
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum GasScheduleError {
    #[error("line {line}: expected `<opcode> <gas>`")]
    Malformed { line: usize },
    #[error("line {line}: unknown opcode `{name}`")]
    UnknownOpcode { line: usize, name: String },
}

impl Default for GasSchedule {
    fn default() -> Self {
        let mut costs = [0u32; 256];
        for (i, c) in costs.iter_mut().enumerate() {
            *c = TABLE[i].gas;
        }
        GasSchedule { costs }
    }
}

impl GasSchedule {
    pub fn cost(&self, byte: u8) -> u32 {
        self.costs[byte as usize]
    }

    /// Parses lines of `MNEMONIC gas` or `0xNN gas`. Blank lines and lines
    /// starting with `#` are ignored. Unlisted opcodes keep their defaults.
    pub fn parse(text: &str) -> Result<Self, GasScheduleError> {
        let mut s = GasSchedule::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(name), Some(gas), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(GasScheduleError::Malformed { line: n + 1 });
            };
            let gas: u32 = gas
                .parse()
                .map_err(|_| GasScheduleError::Malformed { line: n + 1 })?;
            let code = if let Some(hex) = name.strip_prefix("0x") {
                u8::from_str_radix(hex, 16).ok()
            } else {
                by_mnemonic(name)
            };
            let code = code.ok_or_else(|| GasScheduleError::UnknownOpcode {
                line: n + 1,
                name: name.to_string(),
            })?;
            s.costs[code as usize] = gas;
        }
        Ok(s)
    }
}
