//! Analysis reports and their JSON and HTML renderings.

mod html;

use std::collections::BTreeMap;
use std::time::Duration;

use serde::Serialize;

use crate::abi::{decode_args, split_signature};
use crate::analyzers::{Evidence, PropertyId, PropertyViolation};
use crate::disasm::ContractInput;
use crate::pathgen::{Callee, ProgramPath, Via};
use crate::srcmap::SourceSpan;
use crate::symexec::TxInput;

pub use html::to_html;

pub const SCHEMA_VERSION: u32 = 1;

/// Prefix of a call made from inside an external call.
pub const REENTRY_MARK: &str = "\u{21a9}";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigSummary {
    pub call_bound: u32,
    pub loop_bound: u32,
    pub max_blocks: usize,
    pub wall_time_s: u64,
    pub solver: String,
    pub solver_timeout_ms: u64,
    pub transfer_limit: Option<String>,
    pub threshold: f64,
    pub epsilon: f64,
    pub alpha: BTreeMap<PropertyId, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxGas {
    pub gas: u64,
    pub call_sequence: Vec<String>,
    pub blocks: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Statistics {
    /// Structural paths within the bounds.
    pub paths_enumerated: usize,
    /// Structural paths kept by the money filter.
    pub paths_money_related: usize,
    /// Money-filtered paths not refuted during symbolic exploration.
    pub paths_explored: usize,
    pub paths_violating: usize,
    pub paths_gated: usize,
    pub paths_symbolically_executed: usize,
    pub paths_infeasible: usize,
    /// Reported paths per violated property.
    pub violations: BTreeMap<PropertyId, usize>,
    pub timed_out: bool,
    /// Static lower-bound estimate of the most expensive explored path.
    pub max_gas: Option<MaxGas>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationEntry {
    #[serde(flatten)]
    pub violation: PropertyViolation,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FeasibilityEntry {
    Feasible { witness: Vec<TxInput> },
    Unknown { reason: String },
    /// Above the threshold, but a shorter path with the same violations
    /// was not refuted, so this one was not solved.
    Deferred,
    /// Below the threshold; not sent to the solver.
    Unchecked,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalPath {
    pub rank: usize,
    pub call_sequence: Vec<String>,
    pub score: f64,
    pub length: usize,
    pub gated: bool,
    pub violations: Vec<ViolationEntry>,
    pub feasibility: FeasibilityEntry,
    pub gas: u64,
    pub blocks: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub source_spans: Vec<SourceSpan>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema: u32,
    pub contract: String,
    pub config: ConfigSummary,
    pub statistics: Statistics,
    pub diagnostics: Vec<String>,
    pub warnings: Vec<String>,
    pub critical_paths: Vec<CriticalPath>,
    #[serde(skip)]
    pub elapsed: Duration,
    #[serde(skip)]
    pub source: Option<String>,
}

impl Report {
    pub fn has_violations(&self) -> bool {
        self.critical_paths
            .iter()
            .any(|p| p.violations.iter().any(|v| v.violation.property.is_violation()))
    }

    /// Distinct violated properties over all reported paths.
    pub fn properties(&self) -> Vec<PropertyId> {
        self.statistics.violations.keys().copied().collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }
}

/// Warning text shown with a violation.
pub fn message(v: &PropertyViolation, limit: Option<&str>) -> String {
    match &v.evidence {
        Evidence::TransferLimit { remaining } => format!(
            "Ether sent along this path may exceed the transfer limit of {} wei (limit left: {remaining}).",
            limit.unwrap_or("?")
        ),
        Evidence::NonExistingAddress {
            address,
            instruction_offset,
        } => format!(
            "The instruction at offset {instruction_offset} sends Ether to {address}, which has no \
             transaction history on the main network. Creating that account costs at least 25,000 \
             extra gas and the Ether may be lost."
        ),
        Evidence::GuardSuicide {
            selfdestruct_offset,
            ..
        } => format!(
            "SELFDESTRUCT at offset {selfdestruct_offset} is reachable without checking the caller \
             against a stored owner address."
        ),
        Evidence::BlackHole { payable_entry } => format!(
            "The contract accepts Ether through {payable_entry} but contains no instruction that \
             can send Ether out."
        ),
        Evidence::MaxGas { gas } => format!("Estimated gas of this path: {gas}."),
    }
}

/// One descriptor per call segment: the function name, decoded arguments
/// and value when a witness exists, and a re-entry mark for calls made from
/// inside an external call.
pub fn to_call_sequence(
    path: &ProgramPath,
    contract: &ContractInput,
    witness: Option<&[TxInput]>,
) -> Vec<String> {
    path.segments
        .iter()
        .enumerate()
        .map(|(i, seg)| {
            let mark = if seg.via == Via::ExternalCallback {
                REENTRY_MARK
            } else {
                ""
            };
            let tx = witness.and_then(|w| w.get(i));
            let mut text = match seg.callee {
                Callee::Selector(sel) => match contract.signature_of(sel) {
                    Some(f) => {
                        let (name, types) = split_signature(&f.signature);
                        match tx {
                            Some(t) if !types.is_empty() => {
                                format!("{name}({})", decode_args(&types, &t.calldata).join(", "))
                            }
                            _ => f.signature.clone(),
                        }
                    }
                    None => format!("0x{}", hex::encode(sel)),
                },
                Callee::Fallback => "<fallback>".to_string(),
            };
            if let Some(t) = tx {
                if !t.value.is_zero() {
                    text.push_str(&format!(" {{value: {}}}", t.value));
                }
            }
            format!("{mark}{text}")
        })
        .collect()
}
