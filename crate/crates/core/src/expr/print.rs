use std::fmt;

use super::{BinOp, Expr, Node};

const ADD: u8 = 1;
const MUL: u8 = 2;
const NEG: u8 = 3;
const POW: u8 = 4;
const ATOM: u8 = 5;

fn prec(e: &Expr) -> u8 {
    match e.node() {
        Node::Const(v) if v.is_sign_negative() => NEG,
        Node::Const(_) | Node::Var(_) | Node::Call(..) => ATOM,
        Node::Neg(_) => NEG,
        Node::Binary(BinOp::Add | BinOp::Sub, ..) => ADD,
        Node::Binary(BinOp::Mul | BinOp::Div, ..) => MUL,
        Node::Binary(BinOp::Pow, ..) => POW,
    }
}

fn child(e: &Expr, parens: bool, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if parens {
        write!(f, "(")?;
        write_expr(e, f)?;
        write!(f, ")")
    } else {
        write_expr(e, f)
    }
}

/// Writes text that reparses to a structurally identical tree (up to the
/// `sech` expansion), so evaluation order and rounding are preserved.
pub(super) fn write_expr(e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e.node() {
        Node::Const(v) => write!(f, "{v:?}"),
        Node::Var(n) => write!(f, "{n}"),
        Node::Neg(a) => {
            write!(f, "-")?;
            child(a, prec(a) < NEG, f)
        }
        Node::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_expr(a, f)?;
            write!(f, ")")
        }
        Node::Binary(op, a, b) => match op {
            BinOp::Pow => {
                child(a, prec(a) <= POW, f)?;
                write!(f, "^")?;
                child(b, prec(b) < NEG, f)
            }
            BinOp::Add | BinOp::Sub => {
                child(a, prec(a) < ADD, f)?;
                write!(f, " {} ", op.symbol())?;
                child(b, prec(b) <= ADD, f)
            }
            BinOp::Mul | BinOp::Div => {
                child(a, prec(a) < MUL, f)?;
                write!(f, "{}", op.symbol())?;
                child(b, prec(b) <= MUL, f)
            }
        },
    }
}
