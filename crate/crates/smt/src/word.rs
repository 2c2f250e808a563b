//! Machine-word semantics of the EVM arithmetic, comparison and bitwise
//! opcodes on 256-bit unsigned integers.

use ruint::aliases::U256;

pub type Word = U256;

#[inline]
pub fn from_bool(b: bool) -> Word {
    if b {
        Word::from(1u8)
    } else {
        Word::ZERO
    }
}

#[inline]
pub fn is_negative(a: Word) -> bool {
    a.bit(255)
}

#[inline]
fn neg(a: Word) -> Word {
    a.wrapping_neg()
}

#[inline]
fn abs(a: Word) -> Word {
    if is_negative(a) {
        neg(a)
    } else {
        a
    }
}

pub fn add(a: Word, b: Word) -> Word {
    a.wrapping_add(b)
}

pub fn sub(a: Word, b: Word) -> Word {
    a.wrapping_sub(b)
}

pub fn mul(a: Word, b: Word) -> Word {
    a.wrapping_mul(b)
}

/// Unsigned division; division by zero yields zero.
pub fn div(a: Word, b: Word) -> Word {
    if b.is_zero() {
        Word::ZERO
    } else {
        a / b
    }
}

/// Two's complement division, truncating toward zero. `MIN / -1` wraps to `MIN`.
pub fn sdiv(a: Word, b: Word) -> Word {
    if b.is_zero() {
        return Word::ZERO;
    }
    let q = abs(a) / abs(b);
    if is_negative(a) != is_negative(b) {
        neg(q)
    } else {
        q
    }
}

pub fn rem(a: Word, b: Word) -> Word {
    if b.is_zero() {
        Word::ZERO
    } else {
        a % b
    }
}

/// Signed remainder; the result takes the sign of the dividend.
pub fn srem(a: Word, b: Word) -> Word {
    if b.is_zero() {
        return Word::ZERO;
    }
    let r = abs(a) % abs(b);
    if is_negative(a) {
        neg(r)
    } else {
        r
    }
}

pub fn addmod(a: Word, b: Word, n: Word) -> Word {
    if n.is_zero() {
        Word::ZERO
    } else {
        a.add_mod(b, n)
    }
}

pub fn mulmod(a: Word, b: Word, n: Word) -> Word {
    if n.is_zero() {
        Word::ZERO
    } else {
        a.mul_mod(b, n)
    }
}

pub fn exp(base: Word, exponent: Word) -> Word {
    base.wrapping_pow(exponent)
}

/// Sign-extends `x` from byte `k` (counted from the least significant byte).
pub fn signextend(k: Word, x: Word) -> Word {
    if k >= Word::from(31u8) {
        return x;
    }
    let bit = (k.as_limbs()[0] as usize) * 8 + 7;
    let mask = (Word::from(1u8) << bit) - Word::from(1u8);
    if x.bit(bit) {
        x | !mask
    } else {
        x & mask
    }
}

pub fn lt(a: Word, b: Word) -> Word {
    from_bool(a < b)
}

pub fn gt(a: Word, b: Word) -> Word {
    from_bool(a > b)
}

pub fn slt(a: Word, b: Word) -> Word {
    from_bool(signed_lt(a, b))
}

pub fn sgt(a: Word, b: Word) -> Word {
    from_bool(signed_lt(b, a))
}

fn signed_lt(a: Word, b: Word) -> bool {
    match (is_negative(a), is_negative(b)) {
        (true, false) => true,
        (false, true) => false,
        _ => a < b,
    }
}

pub fn eq(a: Word, b: Word) -> Word {
    from_bool(a == b)
}

pub fn iszero(a: Word) -> Word {
    from_bool(a.is_zero())
}

pub fn and(a: Word, b: Word) -> Word {
    a & b
}

pub fn or(a: Word, b: Word) -> Word {
    a | b
}

pub fn xor(a: Word, b: Word) -> Word {
    a ^ b
}

pub fn not(a: Word) -> Word {
    !a
}

/// Byte `i` of `x`, counting from the most significant byte.
pub fn byte(i: Word, x: Word) -> Word {
    if i >= Word::from(32u8) {
        return Word::ZERO;
    }
    let i = i.as_limbs()[0] as usize;
    Word::from(x.byte(31 - i))
}

fn small_shift(shift: Word) -> Option<usize> {
    if shift >= Word::from(256u16) {
        None
    } else {
        Some(shift.as_limbs()[0] as usize)
    }
}

pub fn shl(shift: Word, x: Word) -> Word {
    match small_shift(shift) {
        Some(s) => x << s,
        None => Word::ZERO,
    }
}

pub fn shr(shift: Word, x: Word) -> Word {
    match small_shift(shift) {
        Some(s) => x >> s,
        None => Word::ZERO,
    }
}

pub fn sar(shift: Word, x: Word) -> Word {
    let negative = is_negative(x);
    match small_shift(shift) {
        Some(s) if negative => !((!x) >> s),
        Some(s) => x >> s,
        None if negative => Word::MAX,
        None => Word::ZERO,
    }
}

/// Keccak-256 digest of `data` as a big-endian word.
pub fn keccak(data: &[u8]) -> Word {
    use tiny_keccak::{Hasher, Keccak};
    let mut k = Keccak::v256();
    k.update(data);
    let mut out = [0u8; 32];
    k.finalize(&mut out);
    Word::from_be_bytes(out)
}

/// Number of significant bits in `a`.
pub fn bit_len(a: Word) -> u32 {
    256 - a.leading_zeros() as u32
}

/// `2^k - 1` when `a` has that shape, returning `k`.
pub fn low_mask_width(a: Word) -> Option<u32> {
    let n = bit_len(a);
    if n == 0 {
        return Some(0);
    }
    if a.count_ones() as u32 == n {
        Some(n)
    } else {
        None
    }
}

/// `k` when `a == 2^k`.
pub fn power_of_two(a: Word) -> Option<u32> {
    if a.count_ones() == 1 {
        Some(bit_len(a) - 1)
    } else {
        None
    }
}

pub fn to_u64(a: Word) -> Option<u64> {
    if bit_len(a) <= 64 {
        Some(a.as_limbs()[0])
    } else {
        None
    }
}

pub fn from_u64(v: u64) -> Word {
    Word::from(v)
}
