use std::collections::HashMap;

use super::{BinOp, Expr, ExprError, Func, Node};

/// Reasons a primitive operation can refuse its arguments.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Violation {
    LogNonPositive,
    SqrtNegative,
    DivByZero,
    PowDomain,
    NonFinite,
}

impl Violation {
    fn detail(self, args: &[f64]) -> String {
        match self {
            Violation::LogNonPositive => format!("logarithm of non-positive value {}", args[0]),
            Violation::SqrtNegative => format!("square root of negative value {}", args[0]),
            Violation::DivByZero => "division by zero".into(),
            Violation::PowDomain => format!("power {}^{} is undefined", args[0], args[1]),
            Violation::NonFinite => format!("non-finite result from arguments {args:?}"),
        }
    }
}

pub(crate) fn apply_func(f: Func, x: f64) -> Result<f64, Violation> {
    let r = match f {
        Func::Sin => x.sin(),
        Func::Cos => x.cos(),
        Func::Tan => x.tan(),
        Func::Atan => x.atan(),
        Func::Tanh => x.tanh(),
        Func::Cosh => x.cosh(),
        Func::Sinh => x.sinh(),
        Func::Exp => x.exp(),
        Func::Ln => {
            if x <= 0.0 {
                return Err(Violation::LogNonPositive);
            }
            x.ln()
        }
        Func::Sqrt => {
            if x < 0.0 {
                return Err(Violation::SqrtNegative);
            }
            x.sqrt()
        }
        Func::Abs => x.abs(),
    };
    if r.is_finite() {
        Ok(r)
    } else {
        Err(Violation::NonFinite)
    }
}

pub(crate) fn apply_binary(op: BinOp, a: f64, b: f64) -> Result<f64, Violation> {
    let r = match op {
        BinOp::Add => a + b,
        BinOp::Sub => a - b,
        BinOp::Mul => a * b,
        BinOp::Div => {
            if b == 0.0 {
                return Err(Violation::DivByZero);
            }
            a / b
        }
        BinOp::Pow => {
            if (a < 0.0 && b.fract() != 0.0) || (a == 0.0 && b < 0.0) {
                return Err(Violation::PowDomain);
            }
            if b.fract() == 0.0 && b.abs() <= 64.0 {
                a.powi(b as i32)
            } else {
                a.powf(b)
            }
        }
    };
    if r.is_finite() {
        Ok(r)
    } else {
        Err(Violation::NonFinite)
    }
}

fn domain_error(e: &Expr, v: Violation, args: &[f64]) -> ExprError {
    ExprError::Domain {
        node: e.to_string(),
        detail: v.detail(args),
        position: e.span().map(|s| s.start),
    }
}

impl Expr {
    /// Evaluates with variables resolved through `lookup`.
    pub fn eval_with(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Result<f64, ExprError> {
        match self.node() {
            Node::Const(v) => Ok(*v),
            Node::Var(n) => lookup(n).ok_or_else(|| ExprError::Unbound(n.clone())),
            Node::Neg(a) => Ok(-a.eval_with(lookup)?),
            Node::Call(f, a) => {
                let x = a.eval_with(lookup)?;
                apply_func(*f, x).map_err(|v| domain_error(self, v, &[x]))
            }
            Node::Binary(op, a, b) => {
                let x = a.eval_with(lookup)?;
                let y = b.eval_with(lookup)?;
                apply_binary(*op, x, y).map_err(|v| domain_error(self, v, &[x, y]))
            }
        }
    }

    pub fn eval(&self, bindings: &HashMap<String, f64>) -> Result<f64, ExprError> {
        self.eval_with(&|n| bindings.get(n).copied())
    }

    /// Convenience for slices of `(name, value)` pairs.
    pub fn eval_at(&self, bindings: &[(&str, f64)]) -> Result<f64, ExprError> {
        self.eval_with(&|n| bindings.iter().find(|(k, _)| *k == n).map(|(_, v)| *v))
    }

    /// Flattens the tree into a stack program with variables resolved to
    /// positions in `vars`.
    pub fn compile(&self, vars: &[&str]) -> Result<CompiledExpr, ExprError> {
        let mut prog = CompiledExpr {
            code: Vec::new(),
            nodes: Vec::new(),
            arity: vars.len(),
        };
        prog.emit(self, vars)?;
        Ok(prog)
    }
}

#[derive(Debug, Clone)]
enum Instr {
    Const(f64),
    Var(usize),
    Neg,
    Call(Func, usize),
    Binary(BinOp, usize),
}

/// Stack-machine form of an [`Expr`] for repeated evaluation on grids.
///
/// Performs exactly the same floating point operations in the same order as
/// [`Expr::eval_with`], so results are bit-identical.
#[derive(Debug, Clone)]
pub struct CompiledExpr {
    code: Vec<Instr>,
    nodes: Vec<Expr>,
    arity: usize,
}

impl CompiledExpr {
    fn emit(&mut self, e: &Expr, vars: &[&str]) -> Result<(), ExprError> {
        match e.node() {
            Node::Const(v) => self.code.push(Instr::Const(*v)),
            Node::Var(n) => {
                let idx = vars
                    .iter()
                    .position(|v| v == n)
                    .ok_or_else(|| ExprError::Unbound(n.clone()))?;
                self.code.push(Instr::Var(idx));
            }
            Node::Neg(a) => {
                self.emit(a, vars)?;
                self.code.push(Instr::Neg);
            }
            Node::Call(f, a) => {
                self.emit(a, vars)?;
                self.nodes.push(e.clone());
                self.code.push(Instr::Call(*f, self.nodes.len() - 1));
            }
            Node::Binary(op, a, b) => {
                self.emit(a, vars)?;
                self.emit(b, vars)?;
                self.nodes.push(e.clone());
                self.code.push(Instr::Binary(*op, self.nodes.len() - 1));
            }
        }
        Ok(())
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn eval(&self, values: &[f64]) -> Result<f64, ExprError> {
        let mut stack: Vec<f64> = Vec::with_capacity(16);
        for ins in &self.code {
            match *ins {
                Instr::Const(v) => stack.push(v),
                Instr::Var(i) => stack.push(values[i]),
                Instr::Neg => {
                    let x = stack.pop().expect("stack underflow");
                    stack.push(-x);
                }
                Instr::Call(f, node) => {
                    let x = stack.pop().expect("stack underflow");
                    let r = apply_func(f, x)
                        .map_err(|v| domain_error(&self.nodes[node], v, &[x]))?;
                    stack.push(r);
                }
                Instr::Binary(op, node) => {
                    let y = stack.pop().expect("stack underflow");
                    let x = stack.pop().expect("stack underflow");
                    let r = apply_binary(op, x, y)
                        .map_err(|v| domain_error(&self.nodes[node], v, &[x, y]))?;
                    stack.push(r);
                }
            }
        }
        Ok(stack.pop().expect("empty program"))
    }
}
