//! Free variables of the execution environment.
//!
//! A variable id encodes its meaning directly (transaction, kind, index),
//! so executions that share a prefix agree on ids without coordination.

use std::fmt;

use evmscope_smt::term::Tags;
use evmscope_smt::VarId;

pub const TAG_STORAGE: Tags = 1 << 0;
pub const TAG_CALLER: Tags = 1 << 1;
pub const TAG_TIME: Tags = 1 << 2;
pub const TAG_NUMBER: Tags = 1 << 3;
pub const TAG_CALLVALUE: Tags = 1 << 4;

/// Transaction index used for the constructor run.
pub const CTOR_TX: u32 = 15;

/// Uninterpreted symbol for storage contents before any analysed write.
pub const SYM_INITIAL_STORAGE: u32 = 1;

const TX_BITS: u32 = 4;
const KIND_BITS: u32 = 6;
const INDEX_BITS: u32 = 32 - TX_BITS - KIND_BITS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EnvVar {
    Caller,
    Origin,
    CallValue,
    CalldataSize,
    CalldataByte(u32),
    Timestamp,
    Number,
    GasPrice,
    Difficulty,
    GasLimit,
    Coinbase,
    Gas(u32),
    Balance(u32),
    ExtCodeSize(u32),
    BlockHash(u32),
    ReturnDataSize(u32),
    ReturnByte(u32),
    CallSuccess(u32),
    Fresh(u32),
    FreshByte(u32),
    Address,
    InitialBalance,
    CtorArgByte(u32),
    ExtCodeHash(u32),
    CreatedAddress(u32),
}

impl EnvVar {
    fn code(self) -> (u32, u32) {
        use EnvVar::*;
        match self {
            Caller => (0, 0),
            Origin => (1, 0),
            CallValue => (2, 0),
            CalldataSize => (3, 0),
            CalldataByte(i) => (4, i),
            Timestamp => (5, 0),
            Number => (6, 0),
            GasPrice => (7, 0),
            Difficulty => (8, 0),
            GasLimit => (9, 0),
            Coinbase => (10, 0),
            Gas(i) => (11, i),
            Balance(i) => (12, i),
            ExtCodeSize(i) => (13, i),
            BlockHash(i) => (14, i),
            ReturnDataSize(i) => (15, i),
            ReturnByte(i) => (16, i),
            CallSuccess(i) => (17, i),
            Fresh(i) => (18, i),
            FreshByte(i) => (19, i),
            Address => (20, 0),
            InitialBalance => (21, 0),
            CtorArgByte(i) => (22, i),
            ExtCodeHash(i) => (23, i),
            CreatedAddress(i) => (24, i),
        }
    }

    fn from_code(kind: u32, i: u32) -> Option<EnvVar> {
        use EnvVar::*;
        Some(match kind {
            0 => Caller,
            1 => Origin,
            2 => CallValue,
            3 => CalldataSize,
            4 => CalldataByte(i),
            5 => Timestamp,
            6 => Number,
            7 => GasPrice,
            8 => Difficulty,
            9 => GasLimit,
            10 => Coinbase,
            11 => Gas(i),
            12 => Balance(i),
            13 => ExtCodeSize(i),
            14 => BlockHash(i),
            15 => ReturnDataSize(i),
            16 => ReturnByte(i),
            17 => CallSuccess(i),
            18 => Fresh(i),
            19 => FreshByte(i),
            20 => Address,
            21 => InitialBalance,
            22 => CtorArgByte(i),
            23 => ExtCodeHash(i),
            24 => CreatedAddress(i),
            _ => return None,
        })
    }

    pub fn width(self) -> u32 {
        use EnvVar::*;
        match self {
            Caller | Origin | Coinbase | Address | CreatedAddress(_) => 160,
            CalldataSize | ExtCodeSize(_) | ReturnDataSize(_) => 32,
            CalldataByte(_) | ReturnByte(_) | FreshByte(_) | CtorArgByte(_) => 8,
            Timestamp | Number | GasPrice | GasLimit | Gas(_) => 64,
            CallSuccess(_) => 1,
            _ => 256,
        }
    }

    pub fn tags(self) -> Tags {
        match self {
            EnvVar::Caller => TAG_CALLER,
            EnvVar::Timestamp => TAG_TIME,
            EnvVar::Number => TAG_NUMBER,
            EnvVar::CallValue => TAG_CALLVALUE,
            _ => 0,
        }
    }

    /// Variables of a transaction's own input, shown in witnesses.
    pub fn is_input(self) -> bool {
        matches!(
            self,
            EnvVar::Caller
                | EnvVar::CallValue
                | EnvVar::CalldataSize
                | EnvVar::CalldataByte(_)
                | EnvVar::Timestamp
                | EnvVar::Number
        )
    }
}

/// A variable together with the transaction it belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TxVar {
    pub tx: u32,
    pub var: EnvVar,
}

impl TxVar {
    pub fn new(tx: u32, var: EnvVar) -> Self {
        TxVar { tx, var }
    }

    pub fn id(self) -> VarId {
        let (kind, index) = self.var.code();
        assert!(self.tx < (1 << TX_BITS) && index < (1 << INDEX_BITS));
        VarId((self.tx << (KIND_BITS + INDEX_BITS)) | (kind << INDEX_BITS) | index)
    }

    pub fn decode(id: VarId) -> Option<TxVar> {
        let tx = id.0 >> (KIND_BITS + INDEX_BITS);
        let kind = (id.0 >> INDEX_BITS) & ((1 << KIND_BITS) - 1);
        let index = id.0 & ((1 << INDEX_BITS) - 1);
        EnvVar::from_code(kind, index).map(|var| TxVar { tx, var })
    }
}

impl fmt::Display for TxVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use EnvVar::*;
        let p = if self.tx == CTOR_TX {
            "ctor".to_string()
        } else {
            format!("tx{}", self.tx + 1)
        };
        match self.var {
            Caller => write!(f, "{p}.caller"),
            Origin => write!(f, "{p}.origin"),
            CallValue => write!(f, "{p}.value"),
            CalldataSize => write!(f, "{p}.calldatasize"),
            CalldataByte(i) => write!(f, "{p}.calldata[{i}]"),
            Timestamp => write!(f, "{p}.timestamp"),
            Number => write!(f, "{p}.number"),
            GasPrice => write!(f, "{p}.gasprice"),
            Difficulty => write!(f, "{p}.difficulty"),
            GasLimit => write!(f, "{p}.gaslimit"),
            Coinbase => write!(f, "{p}.coinbase"),
            Gas(i) => write!(f, "{p}.gas#{i}"),
            Balance(i) => write!(f, "{p}.balance#{i}"),
            ExtCodeSize(i) => write!(f, "{p}.extcodesize#{i}"),
            BlockHash(i) => write!(f, "{p}.blockhash#{i}"),
            ReturnDataSize(i) => write!(f, "{p}.returndatasize#{i}"),
            ReturnByte(i) => write!(f, "{p}.returndata#{}[{}]", i >> 12, i & 0xfff),
            CallSuccess(i) => write!(f, "{p}.call#{i}.success"),
            Fresh(i) => write!(f, "{p}.fresh#{i}"),
            FreshByte(i) => write!(f, "{p}.freshbyte#{i}"),
            Address => f.write_str("this"),
            InitialBalance => f.write_str("initial_balance"),
            CtorArgByte(i) => write!(f, "ctor.arg[{i}]"),
            ExtCodeHash(i) => write!(f, "{p}.extcodehash#{i}"),
            CreatedAddress(i) => write!(f, "{p}.created#{i}"),
        }
    }
}

/// Renders a variable id for display.
pub fn var_name(id: VarId) -> String {
    match TxVar::decode(id) {
        Some(v) => v.to_string(),
        None => format!("v{}", id.0),
    }
}
