//! Rewrites and solvers agree with direct evaluation on small domains.

use std::time::Duration;

use evmscope_smt::term::{self, BinOp};
use evmscope_smt::{BitBlastSolver, CheckResult, Model, Solver, Term, VarId, Word};
use proptest::prelude::*;

#[derive(Debug, Clone)]
enum Expr {
    X,
    Y,
    Const(u16),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    IsZero(Box<Expr>),
}

const OPS: [BinOp; 21] = [
    BinOp::Add,
    BinOp::Sub,
    BinOp::Mul,
    BinOp::Div,
    BinOp::SDiv,
    BinOp::Mod,
    BinOp::SMod,
    BinOp::Exp,
    BinOp::SignExtend,
    BinOp::Lt,
    BinOp::Gt,
    BinOp::Slt,
    BinOp::Sgt,
    BinOp::Eq,
    BinOp::And,
    BinOp::Or,
    BinOp::Xor,
    BinOp::Byte,
    BinOp::Shl,
    BinOp::Shr,
    BinOp::Sar,
];

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        Just(Expr::X),
        Just(Expr::Y),
        prop_oneof![0u16..40, Just(0xff), Just(0xffff), 248u16..260].prop_map(Expr::Const),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (0..OPS.len(), inner.clone(), inner.clone())
                .prop_map(|(i, a, b)| Expr::Bin(OPS[i], Box::new(a), Box::new(b))),
            inner.clone().prop_map(|a| Expr::Not(Box::new(a))),
            inner.prop_map(|a| Expr::IsZero(Box::new(a))),
        ]
    })
}

fn build(e: &Expr) -> Term {
    match e {
        Expr::X => term::var(VarId(0), 8, 0),
        Expr::Y => term::var(VarId(1), 8, 0),
        Expr::Const(c) => term::from_u64(*c as u64),
        Expr::Bin(op, a, b) => term::bin(*op, build(a), build(b)),
        Expr::Not(a) => term::not(build(a)),
        Expr::IsZero(a) => term::iszero(build(a)),
    }
}

fn direct(e: &Expr, x: u8, y: u8) -> Word {
    match e {
        Expr::X => Word::from(x),
        Expr::Y => Word::from(y),
        Expr::Const(c) => Word::from(*c),
        Expr::Bin(op, a, b) => op.apply(direct(a, x, y), direct(b, x, y)),
        Expr::Not(a) => !direct(a, x, y),
        Expr::IsZero(a) => Word::from(direct(a, x, y).is_zero() as u8),
    }
}

fn model(x: u8, y: u8) -> Model {
    let mut m = Model::new();
    m.set(VarId(0), Word::from(x));
    m.set(VarId(1), Word::from(y));
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rewrites_preserve_meaning(e in expr(), x: u8, y: u8) {
        let t = build(&e);
        prop_assert_eq!(model(x, y).eval(&t), direct(&e, x, y));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bitblast_agrees_with_enumeration(e in expr(), target in 0u8..4) {
        let t = build(&e);
        let goal = Word::from(target);
        let witnesses = (0..=255u8)
            .flat_map(|x| (0..=255u8).map(move |y| (x, y)))
            .filter(|&(x, y)| direct(&e, x, y) == goal)
            .count();
        let mut s = BitBlastSolver::new();
        s.assert(term::eq(t.clone(), term::konst(goal)));
        match s.check(Duration::from_secs(20)) {
            CheckResult::Sat(m) => {
                prop_assert!(witnesses > 0);
                let x = m.get(VarId(0));
                let y = m.get(VarId(1));
                prop_assert!(x < Word::from(256u16) && y < Word::from(256u16));
                prop_assert_eq!(direct(&e, x.to::<u8>(), y.to::<u8>()), goal);
            }
            CheckResult::Unsat => prop_assert_eq!(witnesses, 0),
            CheckResult::Unknown(_) => {}
        }
    }
}
