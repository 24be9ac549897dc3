use super::{BinOp, Expr, Func, Node};

impl Expr {
    /// Exact symbolic derivative with respect to `var`.
    ///
    /// The result is only constant-folded; no other rewriting is applied.
    pub fn differentiate(&self, var: &str) -> Expr {
        if !self.depends_on(var) {
            return Expr::constant(0.0);
        }
        match self.node() {
            Node::Const(_) => Expr::constant(0.0),
            Node::Var(n) => Expr::constant(if n == var { 1.0 } else { 0.0 }),
            Node::Neg(a) => a.differentiate(var).neg(),
            Node::Call(f, u) => {
                let du = u.differentiate(var);
                let outer = match f {
                    Func::Sin => u.call(Func::Cos),
                    Func::Cos => u.call(Func::Sin).neg(),
                    // sec^2 u
                    Func::Tan => Expr::constant(1.0).div(&u.call(Func::Cos).powi(2)),
                    Func::Atan => Expr::constant(1.0).div(&Expr::constant(1.0).add(&u.powi(2))),
                    Func::Tanh => Expr::constant(1.0).sub(&u.call(Func::Tanh).powi(2)),
                    Func::Sinh => u.call(Func::Cosh),
                    Func::Cosh => u.call(Func::Sinh),
                    Func::Exp => self.clone(),
                    Func::Ln => Expr::constant(1.0).div(u),
                    Func::Sqrt => Expr::constant(0.5).div(self),
                    Func::Abs => u.div(self),
                };
                outer.mul(&du)
            }
            Node::Binary(op, u, v) => {
                let du = u.differentiate(var);
                let dv = v.differentiate(var);
                match op {
                    BinOp::Add => du.add(&dv),
                    BinOp::Sub => du.sub(&dv),
                    BinOp::Mul => du.mul(v).add(&u.mul(&dv)),
                    BinOp::Div => du.mul(v).sub(&u.mul(&dv)).div(&v.powi(2)),
                    BinOp::Pow => {
                        if !v.depends_on(var) {
                            // v u^(v-1) u'
                            let vm1 = v.sub(&Expr::constant(1.0));
                            v.mul(&u.pow(&vm1)).mul(&du)
                        } else if !u.depends_on(var) {
                            self.mul(&u.call(Func::Ln)).mul(&dv)
                        } else {
                            let t = dv
                                .mul(&u.call(Func::Ln))
                                .add(&v.mul(&du).div(u));
                            self.mul(&t)
                        }
                    }
                }
            }
        }
    }

    /// Repeated derivative.
    pub fn nth_derivative(&self, var: &str, order: usize) -> Expr {
        (0..order).fold(self.clone(), |e, _| e.differentiate(var))
    }
}
