//! Scalar expression trees for the user-supplied free functions.
//!
//! Expressions are parsed from infix text, evaluated in IEEE double precision
//! and differentiated symbolically. Trees are immutable and cheap to clone
//! (nodes are reference counted), so they can be shared across threads.

mod diff;
mod eval;
mod parse;
mod print;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

pub use eval::CompiledExpr;
pub use parse::parse;

/// Byte range of a node in the source text it was parsed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at byte {position}: expected {expected}, found {found}")]
    Syntax {
        position: usize,
        expected: String,
        found: String,
    },
    #[error("unknown variable `{name}` at byte {position}")]
    UnknownVariable { name: String, position: usize },
    #[error("unknown function `{name}` at byte {position}")]
    UnknownFunction { name: String, position: usize },
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("domain violation in `{node}`{}: {detail}", fmt_pos(.position))]
    Domain {
        node: String,
        detail: String,
        position: Option<usize>,
    },
}

fn fmt_pos(p: &Option<usize>) -> String {
    match p {
        Some(p) => format!(" (byte {p})"),
        None => String::new(),
    }
}

/// Elementary functions understood by the parser.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Atan,
    Tanh,
    Cosh,
    Sinh,
    Exp,
    Ln,
    Sqrt,
    Abs,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Atan => "atan",
            Func::Tanh => "tanh",
            Func::Cosh => "cosh",
            Func::Sinh => "sinh",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    pub(crate) fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "atan" => Func::Atan,
            "tanh" => Func::Tanh,
            "cosh" => Func::Cosh,
            "sinh" => Func::Sinh,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    pub fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone)]
pub enum Node {
    Const(f64),
    Var(String),
    Neg(Expr),
    Call(Func, Expr),
    Binary(BinOp, Expr, Expr),
}

#[derive(Debug)]
struct Inner {
    node: Node,
    span: Option<Span>,
}

/// Immutable expression tree.
#[derive(Debug, Clone)]
pub struct Expr(Arc<Inner>);

impl PartialEq for Expr {
    /// Structural equality; source spans are ignored.
    fn eq(&self, other: &Self) -> bool {
        if Arc::ptr_eq(&self.0, &other.0) {
            return true;
        }
        match (self.node(), other.node()) {
            (Node::Const(a), Node::Const(b)) => a.to_bits() == b.to_bits(),
            (Node::Var(a), Node::Var(b)) => a == b,
            (Node::Neg(a), Node::Neg(b)) => a == b,
            (Node::Call(f, a), Node::Call(g, b)) => f == g && a == b,
            (Node::Binary(o, a, b), Node::Binary(p, c, d)) => o == p && a == c && b == d,
            _ => false,
        }
    }
}

impl Expr {
    pub(crate) fn with_span(node: Node, span: Option<Span>) -> Expr {
        Expr(Arc::new(Inner { node, span }))
    }

    pub fn node(&self) -> &Node {
        &self.0.node
    }

    pub fn span(&self) -> Option<Span> {
        self.0.span
    }

    pub fn constant(v: f64) -> Expr {
        Expr::with_span(Node::Const(v), None)
    }

    pub fn var(name: impl Into<String>) -> Expr {
        Expr::with_span(Node::Var(name.into()), None)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self.node() {
            Node::Const(v) => Some(*v),
            _ => None,
        }
    }

    fn is_const(&self, v: f64) -> bool {
        self.as_const() == Some(v)
    }

    /// Negation with literal folding.
    pub fn neg(&self) -> Expr {
        match self.node() {
            Node::Const(v) => Expr::constant(-v),
            _ => Expr::with_span(Node::Neg(self.clone()), None),
        }
    }

    pub fn call(&self, f: Func) -> Expr {
        if let Some(v) = self.as_const() {
            if let Ok(r) = eval::apply_func(f, v) {
                return Expr::constant(r);
            }
        }
        Expr::with_span(Node::Call(f, self.clone()), None)
    }

    /// Binary node with folding of literal operands and the additive and
    /// multiplicative identities.
    pub fn binary(op: BinOp, lhs: &Expr, rhs: &Expr) -> Expr {
        if let (Some(a), Some(b)) = (lhs.as_const(), rhs.as_const()) {
            if let Ok(r) = eval::apply_binary(op, a, b) {
                return Expr::constant(r);
            }
        }
        match op {
            BinOp::Add if lhs.is_const(0.0) => return rhs.clone(),
            BinOp::Add | BinOp::Sub if rhs.is_const(0.0) => return lhs.clone(),
            BinOp::Sub if lhs.is_const(0.0) => return rhs.neg(),
            BinOp::Mul if lhs.is_const(0.0) || rhs.is_const(0.0) => return Expr::constant(0.0),
            BinOp::Mul if lhs.is_const(1.0) => return rhs.clone(),
            BinOp::Mul | BinOp::Div if rhs.is_const(1.0) => return lhs.clone(),
            BinOp::Div if lhs.is_const(0.0) => return Expr::constant(0.0),
            BinOp::Pow if rhs.is_const(1.0) => return lhs.clone(),
            BinOp::Pow if rhs.is_const(0.0) => return Expr::constant(1.0),
            _ => {}
        }
        Expr::with_span(Node::Binary(op, lhs.clone(), rhs.clone()), None)
    }

    pub fn add(&self, rhs: &Expr) -> Expr {
        Expr::binary(BinOp::Add, self, rhs)
    }
    pub fn sub(&self, rhs: &Expr) -> Expr {
        Expr::binary(BinOp::Sub, self, rhs)
    }
    pub fn mul(&self, rhs: &Expr) -> Expr {
        Expr::binary(BinOp::Mul, self, rhs)
    }
    pub fn div(&self, rhs: &Expr) -> Expr {
        Expr::binary(BinOp::Div, self, rhs)
    }
    pub fn pow(&self, rhs: &Expr) -> Expr {
        Expr::binary(BinOp::Pow, self, rhs)
    }
    pub fn powi(&self, k: i32) -> Expr {
        self.pow(&Expr::constant(k as f64))
    }
    pub fn scale(&self, k: f64) -> Expr {
        Expr::constant(k).mul(self)
    }

    /// Names of all variables appearing in the tree, sorted.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self.node() {
            Node::Const(_) => {}
            Node::Var(n) => {
                out.insert(n.clone());
            }
            Node::Neg(a) | Node::Call(_, a) => a.collect_vars(out),
            Node::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn depends_on(&self, var: &str) -> bool {
        match self.node() {
            Node::Const(_) => false,
            Node::Var(n) => n == var,
            Node::Neg(a) | Node::Call(_, a) => a.depends_on(var),
            Node::Binary(_, a, b) => a.depends_on(var) || b.depends_on(var),
        }
    }

    /// Replaces every occurrence of `var` by `value`, folding literals.
    pub fn substitute(&self, var: &str, value: &Expr) -> Expr {
        if !self.depends_on(var) {
            return self.clone();
        }
        match self.node() {
            Node::Const(_) => self.clone(),
            Node::Var(n) if n == var => value.clone(),
            Node::Var(_) => self.clone(),
            Node::Neg(a) => a.substitute(var, value).neg(),
            Node::Call(f, a) => a.substitute(var, value).call(*f),
            Node::Binary(op, a, b) => {
                Expr::binary(*op, &a.substitute(var, value), &b.substitute(var, value))
            }
        }
    }

    /// Binds named constants, leaving the remaining variables free.
    pub fn bind_constants<'a, I>(&self, constants: I) -> Expr
    where
        I: IntoIterator<Item = (&'a str, f64)>,
    {
        constants
            .into_iter()
            .fold(self.clone(), |e, (name, v)| e.substitute(name, &Expr::constant(v)))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print::write_expr(self, f)
    }
}
