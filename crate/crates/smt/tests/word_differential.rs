//! Word semantics against an arbitrary-precision reference.

use evmscope_smt::word::{self, Word};
use num_bigint::{BigInt, BigUint, Sign};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CASES: usize = 120_000;

fn modulus() -> BigUint {
    BigUint::from(1u8) << 256
}

fn big(w: Word) -> BigUint {
    BigUint::from_bytes_be(&w.to_be_bytes::<32>())
}

fn word(b: &BigUint) -> Word {
    let b = b % modulus();
    let bytes = b.to_bytes_be();
    let mut out = [0u8; 32];
    out[32 - bytes.len()..].copy_from_slice(&bytes);
    Word::from_be_bytes(out)
}

fn signed(w: Word) -> BigInt {
    let u = BigInt::from(big(w));
    if w.bit(255) {
        u - BigInt::from(modulus())
    } else {
        u
    }
}

fn from_signed(v: &BigInt) -> Word {
    let m = BigInt::from(modulus());
    let r = ((v % &m) + &m) % &m;
    word(&r.to_biguint().unwrap())
}

fn sample(rng: &mut ChaCha8Rng) -> Word {
    match rng.gen_range(0..8) {
        0 => Word::from(rng.gen_range(0u64..40)),
        1 => [Word::ZERO, Word::from(1u8), Word::MAX, Word::from(1u8) << 255, (Word::from(1u8) << 255) - Word::from(1u8)]
            [rng.gen_range(0..5)],
        2 => (Word::from(1u8) << rng.gen_range(0..256usize)) - Word::from(rng.gen_range(0u8..2)),
        3 => Word::MAX - Word::from(rng.gen_range(0u64..40)),
        4 => Word::from(rng.gen::<u64>()),
        _ => Word::from_be_bytes(rng.gen::<[u8; 32]>()),
    }
}

fn modular(op: &str, a: Word, b: Word, n: Word) -> Word {
    if n.is_zero() {
        return Word::ZERO;
    }
    let r = match op {
        "add" => (big(a) + big(b)) % big(n),
        _ => (big(a) * big(b)) % big(n),
    };
    word(&r)
}

fn reference(op: &str, a: Word, b: Word) -> Word {
    let (ua, ub) = (big(a), big(b));
    let (sa, sb) = (signed(a), signed(b));
    let t = |c: bool| Word::from(c as u8);
    match op {
        "add" => word(&(ua + ub)),
        "sub" => from_signed(&(BigInt::from(ua) - BigInt::from(ub))),
        "mul" => word(&(ua * ub)),
        "div" if b.is_zero() => Word::ZERO,
        "div" => word(&(ua / ub)),
        "rem" if b.is_zero() => Word::ZERO,
        "rem" => word(&(ua % ub)),
        "sdiv" if b.is_zero() => Word::ZERO,
        // BigInt division truncates toward zero, as the EVM does.
        "sdiv" => from_signed(&(sa / sb)),
        "srem" if b.is_zero() => Word::ZERO,
        "srem" => from_signed(&(sa % sb)),
        "exp" => word(&ua.modpow(&ub, &modulus())),
        "lt" => t(ua < ub),
        "gt" => t(ua > ub),
        "slt" => t(sa < sb),
        "sgt" => t(sa > sb),
        "eq" => t(ua == ub),
        "and" => word(&(ua & ub)),
        "or" => word(&(ua | ub)),
        "xor" => word(&(ua ^ ub)),
        "byte" => {
            if ua >= BigUint::from(32u8) {
                Word::ZERO
            } else {
                let i: u32 = ua.try_into().unwrap();
                word(&((ub >> (8 * (31 - i))) & BigUint::from(0xffu8)))
            }
        }
        "shl" if ua >= BigUint::from(256u16) => Word::ZERO,
        "shl" => word(&(ub << usize::try_from(ua).unwrap())),
        "shr" if ua >= BigUint::from(256u16) => Word::ZERO,
        "shr" => word(&(ub >> usize::try_from(ua).unwrap())),
        "sar" => {
            let s = if ua >= BigUint::from(256u16) { 256 } else { usize::try_from(ua).unwrap() };
            // Floor division by 2^s.
            let d = BigInt::from(1u8) << s;
            let q = &sb / &d;
            let q = if sb.sign() == Sign::Minus && &q * &d != sb { q - 1 } else { q };
            from_signed(&q)
        }
        "signextend" => {
            if ua >= BigUint::from(31u8) {
                b
            } else {
                let bits = 8 * (usize::try_from(ua).unwrap() + 1);
                let low = ub & ((BigUint::from(1u8) << bits) - 1u8);
                let v = if low.bit(bits as u64 - 1) {
                    BigInt::from(low) - (BigInt::from(1u8) << bits)
                } else {
                    BigInt::from(low)
                };
                from_signed(&v)
            }
        }
        _ => unreachable!("{op}"),
    }
}

fn implementation(op: &str, a: Word, b: Word) -> Word {
    match op {
        "add" => word::add(a, b),
        "sub" => word::sub(a, b),
        "mul" => word::mul(a, b),
        "div" => word::div(a, b),
        "rem" => word::rem(a, b),
        "sdiv" => word::sdiv(a, b),
        "srem" => word::srem(a, b),
        "exp" => word::exp(a, b),
        "lt" => word::lt(a, b),
        "gt" => word::gt(a, b),
        "slt" => word::slt(a, b),
        "sgt" => word::sgt(a, b),
        "eq" => word::eq(a, b),
        "and" => word::and(a, b),
        "or" => word::or(a, b),
        "xor" => word::xor(a, b),
        "byte" => word::byte(a, b),
        "shl" => word::shl(a, b),
        "shr" => word::shr(a, b),
        "sar" => word::sar(a, b),
        "signextend" => word::signextend(a, b),
        _ => unreachable!("{op}"),
    }
}

const BINARY: [&str; 21] = [
    "add", "sub", "mul", "div", "rem", "sdiv", "srem", "exp", "lt", "gt", "slt", "sgt", "eq", "and", "or",
    "xor", "byte", "shl", "shr", "sar", "signextend",
];

#[test]
fn binary_ops_match_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for i in 0..CASES {
        let op = BINARY[i % BINARY.len()];
        let (a, b) = (sample(&mut rng), sample(&mut rng));
        // Keep shift, index and extension arguments in range most of the time.
        let a = match op {
            "byte" | "signextend" if rng.gen_bool(0.8) => Word::from(rng.gen_range(0u8..34)),
            "shl" | "shr" | "sar" if rng.gen_bool(0.8) => Word::from(rng.gen_range(0u16..260)),
            _ => a,
        };
        assert_eq!(implementation(op, a, b), reference(op, a, b), "{op}({a:#x}, {b:#x})");
    }
}

#[test]
fn ternary_and_unary_ops_match_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xfeed);
    for _ in 0..CASES {
        let (a, b, n) = (sample(&mut rng), sample(&mut rng), sample(&mut rng));
        assert_eq!(word::addmod(a, b, n), modular("add", a, b, n), "addmod({a:#x}, {b:#x}, {n:#x})");
        assert_eq!(word::mulmod(a, b, n), modular("mul", a, b, n), "mulmod({a:#x}, {b:#x}, {n:#x})");
        assert_eq!(word::not(a), word(&(modulus() - 1u8 - big(a))));
        assert_eq!(word::iszero(a), Word::from(a.is_zero() as u8));
    }
}
