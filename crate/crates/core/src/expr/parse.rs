use super::{BinOp, Expr, ExprError, Func, Node, Span};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number `{v}`"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Op(c) => format!("`{c}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize, usize)>, ExprError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let ch = src[i..].chars().next().unwrap_or(' ');
        if ch.is_whitespace() {
            i += ch.len_utf8();
            continue;
        }
        let start = i;
        if ch.is_ascii_digit() || (ch == '.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| ExprError::Syntax {
                position: start,
                expected: "number".into(),
                found: format!("`{text}`"),
            })?;
            out.push((Tok::Num(v), start, i));
            continue;
        }
        if ch.is_ascii_alphabetic() || ch == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start, i));
            continue;
        }
        let tok = match ch {
            '+' | '-' | '*' | '/' | '^' => Tok::Op(ch),
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            other => {
                return Err(ExprError::Syntax {
                    position: start,
                    expected: "operand or operator".into(),
                    found: format!("`{other}`"),
                })
            }
        };
        i += ch.len_utf8();
        out.push((tok, start, i));
    }
    out.push((Tok::End, src.len(), src.len()));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
    allowed: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn start(&self) -> usize {
        self.toks[self.pos].1
    }

    fn prev_end(&self) -> usize {
        if self.pos == 0 {
            0
        } else {
            self.toks[self.pos - 1].2
        }
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> ExprError {
        ExprError::Syntax {
            position: self.start(),
            expected: expected.into(),
            found: self.peek().describe(),
        }
    }

    fn node(node: Node, start: usize, end: usize) -> Expr {
        Expr::with_span(node, Some(Span { start, end }))
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let start = self.start();
        let mut lhs = self.term()?;
        while let Tok::Op(c @ ('+' | '-')) = *self.peek() {
            self.bump();
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Self::node(Node::Binary(op, lhs, rhs), start, self.prev_end());
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let start = self.start();
        let mut lhs = self.unary()?;
        while let Tok::Op(c @ ('*' | '/')) = *self.peek() {
            self.bump();
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Self::node(Node::Binary(op, lhs, rhs), start, self.prev_end());
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        let start = self.start();
        match self.peek() {
            Tok::Op('-') => {
                self.bump();
                let inner = self.unary()?;
                Ok(Self::node(Node::Neg(inner), start, self.prev_end()))
            }
            Tok::Op('+') => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let start = self.start();
        let base = self.primary()?;
        if let Tok::Op('^') = self.peek() {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Self::node(
                Node::Binary(BinOp::Pow, base, exponent),
                start,
                self.prev_end(),
            ));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        let start = self.start();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Self::node(Node::Const(v), start, self.prev_end()))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                if *self.peek() != Tok::RParen {
                    return Err(self.error("`)`"));
                }
                self.bump();
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() == Tok::LParen {
                    self.bump();
                    let arg = self.expr()?;
                    if *self.peek() != Tok::RParen {
                        return Err(self.error("`)`"));
                    }
                    self.bump();
                    let end = self.prev_end();
                    if name == "sech" {
                        let cosh = Self::node(Node::Call(Func::Cosh, arg), start, end);
                        let one = Self::node(Node::Const(1.0), start, end);
                        return Ok(Self::node(Node::Binary(BinOp::Div, one, cosh), start, end));
                    }
                    let f = Func::from_name(&name).ok_or(ExprError::UnknownFunction {
                        name: name.clone(),
                        position: start,
                    })?;
                    return Ok(Self::node(Node::Call(f, arg), start, end));
                }
                let end = self.prev_end();
                if self.allowed.contains(&name.as_str()) {
                    Ok(Self::node(Node::Var(name), start, end))
                } else if name == "pi" {
                    Ok(Self::node(Node::Const(std::f64::consts::PI), start, end))
                } else {
                    Err(ExprError::UnknownVariable {
                        name,
                        position: start,
                    })
                }
            }
            _ => Err(self.error("operand")),
        }
    }
}

/// Parses infix source text into an expression tree.
///
/// Precedence from tightest: `^` (right associative), unary minus, `*` `/`,
/// then `+` `-`. Function calls use `name(expr)`; `sech(u)` is accepted and
/// expands to `1/cosh(u)`. The identifier `pi` is the constant unless it is
/// listed as a variable.
pub fn parse(source: &str, allowed_vars: &[&str]) -> Result<Expr, ExprError> {
    let toks = lex(source)?;
    let mut p = Parser {
        toks,
        pos: 0,
        allowed: allowed_vars,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.error("operator or end of input"));
    }
    Ok(e)
}
