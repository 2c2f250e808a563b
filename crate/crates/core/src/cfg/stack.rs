//! Constant-propagating abstract stack used to resolve jump targets.

use evmscope_smt::{word, Word};

use crate::disasm::Instruction;

const MAX_DEPTH: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AbsValue {
    Const(Word),
    Top,
}

/// The stack grows to the right; the last element is the top.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct AbstractStack {
    items: Vec<AbsValue>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimError {
    Underflow,
    Overflow,
}

impl AbstractStack {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// `n`-th element from the top.
    pub fn peek(&self, n: usize) -> Option<AbsValue> {
        self.items.len().checked_sub(n + 1).map(|i| self.items[i])
    }

    fn pop(&mut self) -> Result<AbsValue, SimError> {
        self.items.pop().ok_or(SimError::Underflow)
    }

    fn push(&mut self, v: AbsValue) -> Result<(), SimError> {
        if self.items.len() >= MAX_DEPTH {
            return Err(SimError::Overflow);
        }
        self.items.push(v);
        Ok(())
    }
}

fn fold2(op: u8, a: Word, b: Word) -> Option<Word> {
    Some(match op {
        0x01 => word::add(a, b),
        0x02 => word::mul(a, b),
        0x03 => word::sub(a, b),
        0x04 => word::div(a, b),
        0x06 => word::rem(a, b),
        0x10 => word::lt(a, b),
        0x11 => word::gt(a, b),
        0x14 => word::eq(a, b),
        0x16 => word::and(a, b),
        0x17 => word::or(a, b),
        0x18 => word::xor(a, b),
        0x1b => word::shl(a, b),
        0x1c => word::shr(a, b),
        _ => return None,
    })
}

/// Applies `instrs` to `stack`. Values the analysis cannot track become
/// [`AbsValue::Top`].
pub fn simulate(stack: &mut AbstractStack, instrs: &[Instruction]) -> Result<(), SimError> {
    for ins in instrs {
        let info = ins.info();
        let op = ins.opcode;
        match op {
            0x60..=0x7f => stack.push(AbsValue::Const(ins.immediate.unwrap()))?,
            0x80..=0x8f => {
                let n = (op - 0x80) as usize;
                let v = stack.peek(n).ok_or(SimError::Underflow)?;
                stack.push(v)?;
            }
            0x90..=0x9f => {
                let n = (op - 0x90) as usize + 1;
                let len = stack.items.len();
                if len <= n {
                    return Err(SimError::Underflow);
                }
                stack.items.swap(len - 1, len - 1 - n);
            }
            0x58 => stack.push(AbsValue::Const(word::from_u64(ins.offset as u64)))?,
            0x15 | 0x19 => {
                let a = stack.pop()?;
                stack.push(match a {
                    AbsValue::Const(c) if op == 0x15 => AbsValue::Const(word::iszero(c)),
                    AbsValue::Const(c) => AbsValue::Const(word::not(c)),
                    AbsValue::Top => AbsValue::Top,
                })?;
            }
            _ if info.pops == 2 && info.pushes == 1 => {
                let a = stack.pop()?;
                let b = stack.pop()?;
                let r = match (a, b) {
                    (AbsValue::Const(a), AbsValue::Const(b)) => fold2(op, a, b).map(AbsValue::Const),
                    _ => None,
                };
                stack.push(r.unwrap_or(AbsValue::Top))?;
            }
            _ => {
                for _ in 0..info.pops {
                    stack.pop()?;
                }
                for _ in 0..info.pushes {
                    stack.push(AbsValue::Top)?;
                }
            }
        }
    }
    Ok(())
}
