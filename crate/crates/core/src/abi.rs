//! Minimal decoding of call arguments for display.

use evmscope_smt::Word;

/// Splits `name(t1,t2)` into the name and parameter types. Tuple types are
/// kept as single parameters.
pub fn split_signature(sig: &str) -> (&str, Vec<&str>) {
    let Some(open) = sig.find('(') else {
        return (sig, Vec::new());
    };
    let name = &sig[..open];
    let inner = sig[open + 1..].strip_suffix(')').unwrap_or(&sig[open + 1..]);
    if inner.is_empty() {
        return (name, Vec::new());
    }
    let mut params = Vec::new();
    let (mut depth, mut from) = (0i32, 0usize);
    for (i, c) in inner.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                params.push(&inner[from..i]);
                from = i + 1;
            }
            _ => {}
        }
    }
    params.push(&inner[from..]);
    (name, params)
}

fn word_at(data: &[u8], pos: usize) -> [u8; 32] {
    let mut w = [0u8; 32];
    for (i, b) in w.iter_mut().enumerate() {
        *b = data.get(pos + i).copied().unwrap_or(0);
    }
    w
}

fn decode_static(ty: &str, w: [u8; 32]) -> Option<String> {
    let v = Word::from_be_bytes(w);
    if ty == "address" {
        return Some(format!("0x{}", hex::encode(&w[12..])));
    }
    if ty == "bool" {
        return Some((!v.is_zero()).to_string());
    }
    if let Some(bits) = ty.strip_prefix("uint") {
        let bits: usize = if bits.is_empty() { 256 } else { bits.parse().ok()? };
        let masked = if bits >= 256 { v } else { v & ((Word::from(1u8) << bits) - Word::from(1u8)) };
        return Some(masked.to_string());
    }
    if let Some(bits) = ty.strip_prefix("int") {
        let bits: usize = if bits.is_empty() { 256 } else { bits.parse().ok()? };
        let masked = if bits >= 256 { v } else { v & ((Word::from(1u8) << bits) - Word::from(1u8)) };
        let negative = masked.bit(bits - 1);
        if negative {
            let modulus_minus = if bits >= 256 { !masked } else { ((Word::from(1u8) << bits) - Word::from(1u8)) ^ masked };
            return Some(format!("-{}", modulus_minus + Word::from(1u8)));
        }
        return Some(masked.to_string());
    }
    if let Some(n) = ty.strip_prefix("bytes") {
        let n: usize = n.parse().ok().filter(|n| (1..=32).contains(n))?;
        return Some(format!("0x{}", hex::encode(&w[..n])));
    }
    None
}

/// Renders the arguments in `calldata` (selector included) according to
/// the parameter types. Dynamic parameters are shown as `<dynamic>`.
pub fn decode_args(types: &[&str], calldata: &[u8]) -> Vec<String> {
    let body = calldata.get(4..).unwrap_or(&[]);
    types
        .iter()
        .enumerate()
        .map(|(i, ty)| decode_static(ty, word_at(body, 32 * i)).unwrap_or_else(|| "<dynamic>".into()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_signatures() {
        assert_eq!(split_signature("withdraw()"), ("withdraw", vec![]));
        assert_eq!(
            split_signature("transfer(address,uint256)"),
            ("transfer", vec!["address", "uint256"])
        );
        assert_eq!(split_signature("f((uint8,bool),int8)").1, vec!["(uint8,bool)", "int8"]);
    }

    #[test]
    fn decodes_static_words() {
        let mut cd = vec![0xaa, 0xbb, 0xcc, 0xdd];
        let mut a = [0u8; 32];
        a[31] = 0x05;
        cd.extend(a);
        let mut b = [0xffu8; 32];
        b[0] = 0xff;
        cd.extend(b);
        assert_eq!(decode_args(&["uint8", "int8"], &cd), vec!["5", "-1"]);
        assert_eq!(decode_args(&["bool", "string"], &cd), vec!["true", "<dynamic>"]);
        assert_eq!(decode_args(&["address"], &cd[..4]), vec![format!("0x{}", "00".repeat(20))]);
    }
}
