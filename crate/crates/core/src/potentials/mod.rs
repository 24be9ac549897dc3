//! Intertwined potential pairs.
//!
//! Every builder produces closed-form expressions in the Cartesian variables
//! `x1..xn` for `V0`, `V1`, `L0` and `P = V1 − V0`, so the consistency
//! identities can be checked with exact derivatives.

mod elementary;
mod general;
mod space;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::euclid::IntertwinerParams;
use crate::expr::{CompiledExpr, Expr, ExprError};
use crate::field::{cartesian_names, FieldError, Guard, ScalarField, GUARD_BAND};
use crate::integrability::ConstraintReport;

pub use elementary::{build_1d_pair, build_constant_shift, build_translational, projection_basis};
pub use general::{
    build_2d_pair, build_general_pair, free_motion_partners_2d, free_motion_v1_closed_form,
    solve_riccati_2d, RiccatiBranch, RiccatiSolution,
};
pub use space::{build_3d_pair, free_motion_partners_3d, FreeMotionKind};
pub(crate) use general::build_2d_pair_guarded;

#[derive(Debug, Clone, thiserror::Error)]
pub enum PotentialError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Params(#[from] crate::euclid::ParamsError),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("integrability conditions fail: {}", .0.failed().join(", "))]
    NotIntegrable(Box<ConstraintReport>),
    #[error("h is not annihilated by L·∇: |L·∇h| = {residual:e} at {point:?}")]
    HomogeneousViolated { residual: f64, point: Vec<f64> },
    #[error("g depends on the a-direction: |a·∇g| = {residual:e} at {point:?}")]
    GDependsOnA { residual: f64, point: Vec<f64> },
}

/// Serializable description of a pair.
#[derive(Debug, Clone, Serialize)]
pub struct PairMetadata {
    pub family: String,
    pub n: usize,
    pub params: IntertwinerParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chart: Option<String>,
    pub singular_loci: Vec<String>,
    pub notes: Vec<String>,
}

/// One intertwined pair `(V0, V1)` with its operator `L = L0 + L·∇`.
#[derive(Debug, Clone)]
pub struct PotentialPair {
    pub params: IntertwinerParams,
    pub v0_expr: Expr,
    pub v1_expr: Expr,
    pub l0_expr: Expr,
    pub p_expr: Expr,
    pub v0: ScalarField,
    pub v1: ScalarField,
    pub l0: ScalarField,
    pub p: ScalarField,
    pub guards: Vec<Guard>,
    pub meta: PairMetadata,
}

impl PotentialPair {
    pub(crate) fn assemble(
        params: IntertwinerParams,
        v0: Expr,
        v1: Expr,
        l0: Expr,
        p: Expr,
        guards: Vec<Guard>,
        meta: PairMetadata,
    ) -> Result<PotentialPair, PotentialError> {
        let names = cartesian_names(params.n());
        let vars: Vec<&str> = names.iter().map(String::as_str).collect();
        let field = |e: &Expr| ScalarField::from_expr_guarded(e, &vars, &guards);
        Ok(PotentialPair {
            v0: field(&v0)?,
            v1: field(&v1)?,
            l0: field(&l0)?,
            p: field(&p)?,
            params,
            v0_expr: v0,
            v1_expr: v1,
            l0_expr: l0,
            p_expr: p,
            guards,
            meta,
        })
    }

    pub fn n(&self) -> usize {
        self.params.n()
    }

    pub fn var_names(&self) -> Vec<String> {
        cartesian_names(self.n())
    }

    pub fn l_vector(&self, x: &[f64]) -> Vec<f64> {
        self.params.vector_field(x)
    }

    /// Description of the singular locus containing `x`, if any.
    pub fn singular_at(&self, x: &[f64]) -> Option<String> {
        self.v0.singular_at(x)
    }

    /// Smallest absolute value of the guard expressions at `x`.
    pub fn guard_distance(&self, x: &[f64]) -> f64 {
        let names = self.var_names();
        let bind: Vec<(&str, f64)> = names.iter().map(String::as_str).zip(x.iter().copied()).collect();
        self.guards
            .iter()
            .map(|g| g.expr.eval_at(&bind).map(f64::abs).unwrap_or(0.0))
            .fold(f64::INFINITY, f64::min)
    }

    /// Copy with `V1` shifted by a constant; the result is no longer intertwined.
    pub fn corrupted(&self, shift: f64) -> Result<PotentialPair, PotentialError> {
        let mut meta = self.meta.clone();
        meta.family = format!("{} (V1 shifted by {shift})", meta.family);
        let v1 = self.v1_expr.add(&Expr::constant(shift));
        PotentialPair::assemble(
            self.params.clone(),
            self.v0_expr.clone(),
            v1,
            self.l0_expr.clone(),
            self.p_expr.clone(),
            self.guards.clone(),
            meta,
        )
    }

    /// Compiles the derivative expressions needed by the identity checks.
    pub fn checker(&self) -> Result<ConsistencyChecker, PotentialError> {
        ConsistencyChecker::new(self)
    }

    /// Random points in `[lo, hi]^n` whose guard values all exceed `margin`.
    pub fn sample_regular_points(
        &self,
        count: usize,
        seed: u64,
        lo: f64,
        hi: f64,
        margin: f64,
    ) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        let mut tries = 0;
        while out.len() < count && tries < 100_000 {
            tries += 1;
            let x: Vec<f64> = (0..self.n()).map(|_| rng.gen_range(lo..hi)).collect();
            if self.guard_distance(&x) > margin
                && self.v0.eval(&x).is_ok()
                && self.v1.eval(&x).is_ok()
            {
                out.push(x);
            }
        }
        out
    }
}

/// Residuals of the consistency identities at one point.
#[derive(Debug, Clone, Copy, Serialize, Default)]
pub struct IdentityResiduals {
    /// `max_j |2∂_j L0 − P L_j|`
    pub eq11: f64,
    /// `|(−∇² + P) L0 − L·∇V0|`
    pub eq12: f64,
    /// `|∇²L0 − ½ L·∇P|`
    pub eq14: f64,
    /// `|L0 P − ½ L·∇(V1 + V0)|`
    pub eq15: f64,
    /// `|P − (V1 − V0)|`
    pub p_split: f64,
}

impl IdentityResiduals {
    pub fn max(&self) -> f64 {
        [self.eq11, self.eq12, self.eq14, self.eq15, self.p_split]
            .into_iter()
            .fold(0.0, f64::max)
    }

    fn merge(&mut self, o: &IdentityResiduals) {
        self.eq11 = self.eq11.max(o.eq11);
        self.eq12 = self.eq12.max(o.eq12);
        self.eq14 = self.eq14.max(o.eq14);
        self.eq15 = self.eq15.max(o.eq15);
        self.p_split = self.p_split.max(o.p_split);
    }
}

/// Exact-derivative evaluator for the consistency identities.
pub struct ConsistencyChecker {
    params: IntertwinerParams,
    l0: CompiledExpr,
    grad_l0: Vec<CompiledExpr>,
    lap_l0: CompiledExpr,
    p: CompiledExpr,
    grad_p: Vec<CompiledExpr>,
    v0: CompiledExpr,
    v1: CompiledExpr,
    grad_v0: Vec<CompiledExpr>,
    grad_v1: Vec<CompiledExpr>,
}

impl ConsistencyChecker {
    fn new(pair: &PotentialPair) -> Result<Self, PotentialError> {
        let names = pair.var_names();
        let vars: Vec<&str> = names.iter().map(String::as_str).collect();
        let grad = |e: &Expr| -> Result<Vec<CompiledExpr>, ExprError> {
            vars.iter().map(|v| e.differentiate(v).compile(&vars)).collect()
        };
        let lap = vars.iter().fold(Expr::constant(0.0), |acc, v| {
            acc.add(&pair.l0_expr.differentiate(v).differentiate(v))
        });
        Ok(ConsistencyChecker {
            params: pair.params.clone(),
            l0: pair.l0_expr.compile(&vars)?,
            grad_l0: grad(&pair.l0_expr)?,
            lap_l0: lap.compile(&vars)?,
            p: pair.p_expr.compile(&vars)?,
            grad_p: grad(&pair.p_expr)?,
            v0: pair.v0_expr.compile(&vars)?,
            v1: pair.v1_expr.compile(&vars)?,
            grad_v0: grad(&pair.v0_expr)?,
            grad_v1: grad(&pair.v1_expr)?,
        })
    }

    /// Residuals at `x`. Each is scaled by `max(1, |terms|)` so that values
    /// near the singular loci, where the potentials are large, are judged
    /// relative to their size.
    pub fn residuals_at(&self, x: &[f64]) -> Result<IdentityResiduals, PotentialError> {
        let l = self.params.vector_field(x);
        let ev = |c: &CompiledExpr| c.eval(x);
        let dot = |g: &[CompiledExpr]| -> Result<f64, ExprError> {
            let mut s = 0.0;
            for (gj, lj) in g.iter().zip(&l) {
                s += gj.eval(x)? * lj;
            }
            Ok(s)
        };
        let l0 = ev(&self.l0)?;
        let p = ev(&self.p)?;
        let v0 = ev(&self.v0)?;
        let v1 = ev(&self.v1)?;
        let lap = ev(&self.lap_l0)?;
        let ld_p = dot(&self.grad_p)?;
        let ld_v0 = dot(&self.grad_v0)?;
        let ld_v1 = dot(&self.grad_v1)?;
        let rel = |a: f64, b: f64| (a - b).abs() / 1f64.max(a.abs()).max(b.abs());
        let mut eq11 = 0.0f64;
        for (j, g) in self.grad_l0.iter().enumerate() {
            eq11 = eq11.max(rel(2.0 * g.eval(x)?, p * l[j]));
        }
        Ok(IdentityResiduals {
            eq11,
            eq12: rel(-lap + p * l0, ld_v0),
            eq14: rel(lap, 0.5 * ld_p),
            eq15: rel(l0 * p, 0.5 * (ld_v1 + ld_v0)),
            p_split: rel(p, v1 - v0),
        })
    }

    /// Worst residuals over a set of points.
    pub fn max_over(&self, points: &[Vec<f64>]) -> Result<IdentityResiduals, PotentialError> {
        let mut acc = IdentityResiduals::default();
        for x in points {
            acc.merge(&self.residuals_at(x)?);
        }
        Ok(acc)
    }
}

/// Radical-inverse (Halton) point `index` in `[lo, hi]^dim`.
pub fn halton_point(index: usize, dim: usize, lo: f64, hi: f64) -> Vec<f64> {
    const PRIMES: [usize; 6] = [2, 3, 5, 7, 11, 13];
    (0..dim)
        .map(|d| {
            let base = PRIMES[d % PRIMES.len()];
            let (mut f, mut r, mut i) = (1.0, 0.0, index + 1);
            while i > 0 {
                f /= base as f64;
                r += f * (i % base) as f64;
                i /= base;
            }
            lo + (hi - lo) * r
        })
        .collect()
}

/// Verifies `v·∇h = 0` at 50 quasi-random points in `[-2, 2]^n` away from
/// the guard loci. `v` gives the direction field at each point.
pub(crate) fn validate_annihilated(
    h: &Expr,
    vars: &[&str],
    guards: &[Guard],
    direction: &dyn Fn(&[f64]) -> Vec<f64>,
) -> Result<Option<(f64, Vec<f64>)>, PotentialError> {
    let grads: Vec<CompiledExpr> = vars
        .iter()
        .map(|v| h.differentiate(v).compile(vars))
        .collect::<Result<_, _>>()?;
    let guards: Vec<CompiledExpr> = guards
        .iter()
        .map(|g| g.expr.compile(vars))
        .collect::<Result<_, _>>()?;
    let mut checked = 0;
    let mut index = 0;
    while checked < 50 && index < 5000 {
        let x = halton_point(index, vars.len(), -2.0, 2.0);
        index += 1;
        let near = guards
            .iter()
            .any(|g| g.eval(&x).map(|v| v.abs() < 1e3 * GUARD_BAND).unwrap_or(true));
        if near {
            continue;
        }
        let g: Result<Vec<f64>, _> = grads.iter().map(|c| c.eval(&x)).collect();
        let Ok(g) = g else { continue };
        let v = direction(&x);
        let s: f64 = g.iter().zip(&v).map(|(a, b)| a * b).sum();
        let scale = crate::linalg::norm(&g) * crate::linalg::norm(&v);
        if s.abs() > 1e-8 * scale.max(1.0) {
            return Ok(Some((s.abs(), x)));
        }
        checked += 1;
    }
    Ok(None)
}

/// Renames user-facing Cartesian aliases `x, y, z` to `x1, x2, x3`.
pub(crate) fn rename_aliases(e: &Expr, n: usize) -> Expr {
    let mut out = e.clone();
    for (alias, idx) in [("x", 1), ("y", 2), ("z", 3)] {
        if idx <= n {
            out = out.substitute(alias, &Expr::var(format!("x{idx}")));
        }
    }
    out
}

/// Cartesian names accepted in user expressions: `x1..xn`, plus `x, y, z`
/// for n ≤ 3.
pub fn cartesian_inputs(n: usize) -> Vec<String> {
    let mut v = cartesian_names(n);
    for (alias, idx) in [("x", 1), ("y", 2), ("z", 3)] {
        if idx <= n {
            v.push(alias.to_string());
        }
    }
    v
}
