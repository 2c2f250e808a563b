//! The `address,exists,checked_at` line format shared by fixtures and caches.

use std::collections::HashMap;

use crate::{AddressRecord, Source};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AddressError {
    #[error("address is empty")]
    Empty,
    #[error("address has more than 40 hex digits")]
    TooLong,
    #[error("address contains a non-hex character")]
    NotHex,
}

/// Parses a hex address, with or without `0x`. Short forms are padded with
/// leading zeros.
pub fn parse_address(s: &str) -> Result<[u8; 20], AddressError> {
    let s = s.trim();
    let digits = s
        .strip_prefix("0x")
        .or_else(|| s.strip_prefix("0X"))
        .unwrap_or(s);
    if digits.is_empty() {
        return Err(AddressError::Empty);
    }
    if digits.len() > 40 {
        return Err(AddressError::TooLong);
    }
    let padded = format!("{digits:0>40}");
    let mut out = [0u8; 20];
    hex::decode_to_slice(&padded, &mut out).map_err(|_| AddressError::NotHex)?;
    Ok(out)
}

pub fn format_record(r: &AddressRecord) -> String {
    format!(
        "0x{},{},{}",
        hex::encode(r.address),
        u8::from(r.exists),
        r.checked_at
    )
}

/// Parses a table. Blank lines and `#` comments are skipped. Errors carry
/// the 1-based line number.
pub fn parse_table(
    text: &str,
    source: Source,
) -> Result<HashMap<[u8; 20], AddressRecord>, (usize, String)> {
    let mut out = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |m: String| (i + 1, m);
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let [addr, exists, checked_at] = fields[..] else {
            return Err(err(format!("expected 3 fields, found {}", fields.len())));
        };
        let address = parse_address(addr).map_err(|e| err(e.to_string()))?;
        let exists = match exists {
            "1" | "true" => true,
            "0" | "false" => false,
            other => return Err(err(format!("bad exists flag `{other}`"))),
        };
        let checked_at = checked_at
            .parse()
            .map_err(|_| err(format!("bad timestamp `{checked_at}`")))?;
        out.insert(
            address,
            AddressRecord {
                address,
                exists,
                source,
                checked_at,
            },
        );
    }
    Ok(out)
}
