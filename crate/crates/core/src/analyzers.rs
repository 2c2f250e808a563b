//! Per-path property checks.

use std::collections::BTreeSet;
use std::fmt;

use evmscope_smt::term::{self, Op, Term};
use evmscope_smt::Word;
use num_bigint::{BigInt, BigUint};
use serde::{Deserialize, Serialize};

use crate::cfg::Cfg;
use crate::isa::{self, GasSchedule};
use crate::pathgen::{segment_receives, Callee, ProgramPath};
use crate::symexec::vars::{TAG_CALLER, TAG_NUMBER, TAG_STORAGE, TAG_TIME};
use crate::symexec::State;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PropertyId {
    TransferLimit,
    NonExistingAddress,
    GuardSuicide,
    BlackHole,
    MaxGas,
}

impl PropertyId {
    pub const ALL: [PropertyId; 5] = [
        PropertyId::TransferLimit,
        PropertyId::NonExistingAddress,
        PropertyId::GuardSuicide,
        PropertyId::BlackHole,
        PropertyId::MaxGas,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PropertyId::TransferLimit => "TransferLimit",
            PropertyId::NonExistingAddress => "NonExistingAddress",
            PropertyId::GuardSuicide => "GuardSuicide",
            PropertyId::BlackHole => "BlackHole",
            PropertyId::MaxGas => "MaxGas",
        }
    }

    /// Accepts the canonical name in any case.
    pub fn parse(s: &str) -> Option<PropertyId> {
        PropertyId::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s.trim()))
    }

    /// False for properties that only inform.
    pub fn is_violation(self) -> bool {
        self != PropertyId::MaxGas
    }
}

impl fmt::Display for PropertyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Guard kinds a self-destruct path lacks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Guard {
    /// No comparison between the caller and a stored address.
    Ownership,
    /// No condition on the block timestamp or number.
    TimeOrHeight,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "property")]
pub enum Evidence {
    TransferLimit {
        remaining: Remaining,
    },
    NonExistingAddress {
        address: String,
        instruction_offset: u32,
    },
    GuardSuicide {
        selfdestruct_offset: u32,
        missing_guards: BTreeSet<Guard>,
    },
    BlackHole {
        payable_entry: String,
    },
    MaxGas {
        gas: u64,
    },
}

impl Evidence {
    pub fn property(&self) -> PropertyId {
        match self {
            Evidence::TransferLimit { .. } => PropertyId::TransferLimit,
            Evidence::NonExistingAddress { .. } => PropertyId::NonExistingAddress,
            Evidence::GuardSuicide { .. } => PropertyId::GuardSuicide,
            Evidence::BlackHole { .. } => PropertyId::BlackHole,
            Evidence::MaxGas { .. } => PropertyId::MaxGas,
        }
    }
}

/// Limit left after the transfers of a path: a known part minus any
/// number of transfers of unknown size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Remaining {
    pub known: BigInt,
    pub unknown_debits: usize,
}

impl Remaining {
    pub fn may_be_negative(&self) -> bool {
        self.known < BigInt::from(0) || self.unknown_debits > 0
    }
}

impl fmt::Display for Remaining {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.known)?;
        for _ in 0..self.unknown_debits {
            f.write_str(" - ?")?;
        }
        Ok(())
    }
}

impl Serialize for Remaining {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Tracks how much of the limit is left along a path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransferLedger {
    pub limit: BigUint,
    remaining: Remaining,
}

impl TransferLedger {
    pub fn new(limit: BigUint) -> Self {
        TransferLedger {
            remaining: Remaining {
                known: BigInt::from(limit.clone()),
                unknown_debits: 0,
            },
            limit,
        }
    }

    /// Subtracts a transfer; `None` is an amount that could not be resolved.
    pub fn debit(&mut self, amount: Option<Word>) {
        match amount {
            Some(w) => {
                let v = BigUint::from_bytes_be(&w.to_be_bytes::<32>());
                self.remaining.known -= BigInt::from(v);
            }
            None => self.remaining.unknown_debits += 1,
        }
    }

    pub fn remaining(&self) -> &Remaining {
        &self.remaining
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PropertyViolation {
    #[serde(skip)]
    pub property: PropertyId,
    #[serde(flatten)]
    pub evidence: Evidence,
}

impl From<Evidence> for PropertyViolation {
    fn from(evidence: Evidence) -> Self {
        PropertyViolation {
            property: evidence.property(),
            evidence,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("address registry unavailable: {0}")]
pub struct RegistryUnavailable(pub String);

/// Answers whether an account is known on the main network.
pub trait AddressRegistry: Send + Sync {
    fn exists(&self, address: &[u8; 20]) -> Result<bool, RegistryUnavailable>;
}

#[derive(Debug, Clone)]
pub struct AnalyzerConfig {
    /// `None` disables the transfer-limit check.
    pub transfer_limit: Option<BigUint>,
    pub disabled: BTreeSet<PropertyId>,
    /// When set, a timestamp or block-number condition also counts as a
    /// guard for self-destruction.
    pub time_guard_suppresses: bool,
}

impl Default for AnalyzerConfig {
    fn default() -> Self {
        AnalyzerConfig {
            transfer_limit: None,
            disabled: BTreeSet::new(),
            time_guard_suppresses: false,
        }
    }
}

impl AnalyzerConfig {
    pub fn enabled(&self, p: PropertyId) -> bool {
        !self.disabled.contains(&p)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PathFindings {
    pub violations: Vec<PropertyViolation>,
    pub warnings: Vec<String>,
}

/// Amount of a transfer event, `None` when it cannot be fixed.
pub type ValueOracle<'a> = &'a dyn Fn(usize) -> Option<Word>;

/// Remaining limit after the transfers of a path. Transfers inside a
/// rolled-back transaction are ignored; a self-destruct hands over the whole
/// balance.
pub fn check_transfer_limit(
    st: &State,
    limit: &BigUint,
    value_of: ValueOracle<'_>,
) -> Option<PropertyViolation> {
    let mut ledger = TransferLedger::new(limit.clone());
    for (i, c) in st.log.calls.iter().enumerate() {
        if c.reverted || !carries_value(c.opcode) {
            continue;
        }
        ledger.debit(value_of(i));
    }
    for s in &st.log.selfdestructs {
        ledger.debit(s.amount.as_const());
    }
    let r = ledger.remaining();
    r.may_be_negative().then(|| {
        Evidence::TransferLimit {
            remaining: r.clone(),
        }
        .into()
    })
}

fn carries_value(op: u8) -> bool {
    matches!(op, isa::CALL | isa::CALLCODE | isa::CREATE | isa::CREATE2)
}

fn address_bytes(t: &Term) -> Option<[u8; 20]> {
    let w = t.as_const()?.to_be_bytes::<32>();
    let mut a = [0u8; 20];
    a.copy_from_slice(&w[12..]);
    Some(a)
}

pub fn format_address(a: &[u8; 20]) -> String {
    format!("0x{}", hex::encode(a))
}

/// Queries the registry for every constant `CALL` target and self-destruct
/// beneficiary. Non-constant addresses are skipped.
pub fn check_address_existence(
    st: &State,
    registry: &dyn AddressRegistry,
    findings: &mut PathFindings,
) {
    let mut targets: Vec<(u32, &Term)> = Vec::new();
    for c in &st.log.calls {
        if c.opcode == isa::CALL && !c.reverted {
            if let Some(to) = &c.to {
                targets.push((c.offset, to));
            }
        }
    }
    for s in &st.log.selfdestructs {
        targets.push((s.offset, &s.beneficiary));
    }
    let mut seen = BTreeSet::new();
    for (offset, t) in targets {
        let Some(addr) = address_bytes(t) else {
            continue;
        };
        if !seen.insert((offset, addr)) {
            continue;
        }
        match registry.exists(&addr) {
            Ok(true) => {}
            Ok(false) => findings.violations.push(
                Evidence::NonExistingAddress {
                    address: format_address(&addr),
                    instruction_offset: offset,
                }
                .into(),
            ),
            Err(e) => findings
                .warnings
                .push(format!("{} at offset {offset}: {e}", format_address(&addr))),
        }
    }
}

/// An equality between a caller-derived operand and a storage-derived one.
fn is_ownership_test(t: &Term) -> bool {
    let mut found = false;
    term::visit(std::slice::from_ref(t), |n| {
        if let Op::Bin(evmscope_smt::BinOp::Eq, a, b) = n.op() {
            let caller_storage = |x: &Term, y: &Term| {
                x.has_tags(TAG_CALLER) && !x.has_tags(TAG_STORAGE) && y.has_tags(TAG_STORAGE)
            };
            if caller_storage(a, b) || caller_storage(b, a) {
                found = true;
            }
        }
    });
    found
}

/// Flags each self-destruct whose transaction condition holds no ownership
/// test.
pub fn check_guard_suicide(st: &State, config: &AnalyzerConfig) -> Vec<PropertyViolation> {
    let mut out = Vec::new();
    for s in &st.log.selfdestructs {
        let conds: Vec<&Term> = st
            .log
            .constraints
            .iter()
            .filter(|c| c.tx == s.tx)
            .map(|c| &c.term)
            .collect();
        let owned = conds.iter().any(|t| is_ownership_test(t));
        let timed = conds
            .iter()
            .any(|t| t.has_tags(TAG_TIME) || t.has_tags(TAG_NUMBER));
        if owned || (timed && config.time_guard_suppresses) {
            continue;
        }
        let mut missing = BTreeSet::from([Guard::Ownership]);
        if !timed {
            missing.insert(Guard::TimeOrHeight);
        }
        out.push(
            Evidence::GuardSuicide {
                selfdestruct_offset: s.offset,
                missing_guards: missing,
            }
            .into(),
        );
    }
    out
}

/// Names an entry for display: selector hex or `fallback`.
pub fn callee_name(c: &Callee) -> String {
    match c {
        Callee::Selector(s) => format!("0x{}", hex::encode(s)),
        Callee::Fallback => "fallback".to_string(),
    }
}

/// Applies only to contracts with no reachable money-related opcode: each
/// segment that accepts Ether through a payable entry and returns normally
/// is a violation.
pub fn check_black_hole(cfg: &Cfg, path: &ProgramPath) -> Vec<PropertyViolation> {
    if cfg.has_reachable_money_opcode() {
        return Vec::new();
    }
    let mut entries = BTreeSet::new();
    for (i, seg) in path.segments.iter().enumerate() {
        if segment_receives(cfg, path, i) {
            entries.insert(callee_name(&seg.callee));
        }
    }
    entries
        .into_iter()
        .map(|payable_entry| Evidence::BlackHole { payable_entry }.into())
        .collect()
}

/// Sum of static gas over every instruction of the path.
pub fn estimate_gas(cfg: &Cfg, path: &ProgramPath, gas: &GasSchedule) -> u64 {
    path.blocks
        .iter()
        .flat_map(|b| cfg.block(*b).instructions(&cfg.program))
        .map(|i| gas.cost(i.opcode) as u64)
        .sum()
}

/// Runs every enabled checker on one explored path.
pub fn analyze_path(
    cfg: &Cfg,
    path: &ProgramPath,
    st: &State,
    config: &AnalyzerConfig,
    registry: Option<&dyn AddressRegistry>,
    value_of: ValueOracle<'_>,
) -> PathFindings {
    let mut f = PathFindings::default();
    if let (true, Some(limit)) = (
        config.enabled(PropertyId::TransferLimit),
        &config.transfer_limit,
    ) {
        f.violations.extend(check_transfer_limit(st, limit, value_of));
    }
    if config.enabled(PropertyId::NonExistingAddress) {
        if let Some(r) = registry {
            check_address_existence(st, r, &mut f);
        }
    }
    if config.enabled(PropertyId::GuardSuicide) {
        f.violations.extend(check_guard_suicide(st, config));
    }
    if config.enabled(PropertyId::BlackHole) {
        f.violations.extend(check_black_hole(cfg, path));
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ledger_goes_negative_after_second_transfer() {
        let mut l = TransferLedger::new(BigUint::from(30u8));
        l.debit(Some(Word::from(20u8)));
        assert!(!l.remaining().may_be_negative());
        l.debit(Some(Word::from(20u8)));
        assert_eq!(l.remaining().known, BigInt::from(-10));
        assert!(l.remaining().may_be_negative());
    }

    #[test]
    fn unknown_amount_is_conservative() {
        let mut l = TransferLedger::new(BigUint::from(30u8));
        l.debit(None);
        assert!(l.remaining().may_be_negative());
        assert_eq!(l.remaining().to_string(), "30 - ?");
    }

    #[test]
    fn property_names_round_trip() {
        for p in PropertyId::ALL {
            assert_eq!(PropertyId::parse(p.name()), Some(p));
        }
        assert_eq!(PropertyId::parse("guardsuicide"), Some(PropertyId::GuardSuicide));
        assert!(!PropertyId::MaxGas.is_violation());
    }
}
