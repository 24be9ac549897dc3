//! The general class with rotations, its planar specialisation, and the
//! Riccati-derived partners of free motion in the plane.

use serde::Serialize;

use super::{
    cartesian_inputs, rename_aliases, validate_annihilated, PairMetadata, PotentialError,
    PotentialPair,
};
use crate::euclid::IntertwinerParams;
use crate::expr::{Expr, Func};
use crate::field::{cartesian_names, Guard};
use crate::integrability::check_pfaffian_conditions;

fn one() -> Expr {
    Expr::constant(1.0)
}

/// Shared assembly for `L0 = f(η)` with `V± = f² ± s·f′` and
/// `V0 = ½h + V−/L²`, `V1 = ½h + V+/L²`.
///
/// `s` is the expression multiplying `f′` (in Cartesian variables), `inv_l2`
/// the factor `1/L²`, `p` the closed form of `P`.
#[allow(clippy::too_many_arguments)]
pub(super) fn assemble_eta_family(
    params: IntertwinerParams,
    f: &Expr,
    eta: &Expr,
    s: &Expr,
    lsq: &Expr,
    half_h: &Expr,
    p_of: &dyn Fn(&Expr) -> Expr,
    guards: Vec<Guard>,
    meta: PairMetadata,
) -> Result<PotentialPair, PotentialError> {
    let fp = f.differentiate("eta");
    let fx = f.substitute("eta", eta);
    let fpx = fp.substitute("eta", eta);
    let names = cartesian_names(params.n());
    let unknown: Vec<String> = fx.variables().into_iter().filter(|v| !names.contains(v)).collect();
    if !unknown.is_empty() {
        return Err(PotentialError::Invalid(format!(
            "f may only depend on eta, found {}",
            unknown.join(", ")
        )));
    }
    let sq = fx.powi(2);
    let vm = sq.sub(&s.mul(&fpx));
    let vp = sq.add(&s.mul(&fpx));
    let v0 = half_h.add(&vm.div(lsq));
    let v1 = half_h.add(&vp.div(lsq));
    let p = p_of(&fpx);
    PotentialPair::assemble(params, v0, v1, fx, p, guards, meta)
}

/// General pair for any `n` with `η = L_i/L_j` and `c_ij ≠ 0`.
///
/// `h` may use the Cartesian names and `Lsq` (for `L²`); it must satisfy
/// `L·∇h = 0`, which is checked at 50 quasi-random points.
pub fn build_general_pair(
    params: &IntertwinerParams,
    pair: (usize, usize),
    f: &Expr,
    h: &Expr,
) -> Result<PotentialPair, PotentialError> {
    let n = params.n();
    let (i, j) = pair;
    if i >= n || j >= n || i == j {
        return Err(PotentialError::Invalid(format!("invalid index pair ({i}, {j})")));
    }
    let cij = params.c_at(i, j);
    if cij == 0.0 {
        return Err(PotentialError::Invalid(format!(
            "c_{}{} must be nonzero",
            i + 1,
            j + 1
        )));
    }
    let report = check_pfaffian_conditions(params);
    if !report.all_satisfied {
        return Err(PotentialError::NotIntegrable(Box::new(report)));
    }
    let li = params.component_expr(i);
    let lj = params.component_expr(j);
    let lsq = params.length_squared_expr();
    let eta = li.div(&lj);
    let names = cartesian_names(n);
    let vars: Vec<&str> = names.iter().map(String::as_str).collect();
    let hx = rename_aliases(h, n).substitute("Lsq", &lsq);
    let allowed = cartesian_inputs(n);
    if let Some(bad) = hx.variables().into_iter().find(|v| !allowed.contains(v)) {
        return Err(PotentialError::Invalid(format!("h uses unknown variable {bad}")));
    }
    let guards = vec![
        Guard::new(lj.clone(), format!("L{} = 0", j + 1)),
        Guard::new(lsq.clone(), "L² = 0"),
    ];
    let pc = params.clone();
    if let Some((residual, point)) =
        validate_annihilated(&hx, &vars, &guards, &move |x| pc.vector_field(x))?
    {
        return Err(PotentialError::HomogeneousViolated { residual, point });
    }
    let s = lsq.div(&lj.powi(2)).scale(cij);
    let lj2 = lj.powi(2);
    let meta = PairMetadata {
        family: "general".into(),
        n,
        params: params.clone(),
        f: Some(f.to_string()),
        h: Some(h.to_string()),
        g: None,
        chart: Some(format!("eta = L{}/L{}", i + 1, j + 1)),
        singular_loci: guards.iter().map(|g| g.label.clone()).collect(),
        notes: vec![],
    };
    assemble_eta_family(
        params.clone(),
        f,
        &eta,
        &s,
        &lsq,
        &hx.scale(0.5),
        &move |fp| fp.scale(2.0 * cij).div(&lj2),
        guards,
        meta,
    )
}

/// Planar pair: `κ² = L1² + L2²`, `η = L1/L2`, `V± = f² ± c(1+η²)f′`,
/// `V0 = ½h(κ) + V−/κ²`, `V1 = ½h(κ) + V+/κ²`.
pub fn build_2d_pair(a1: f64, a2: f64, c: f64, f: &Expr, h: &Expr) -> Result<PotentialPair, PotentialError> {
    build_2d_pair_guarded(a1, a2, c, f, h, &[])
}

/// Like [`build_2d_pair`] with additional singular loci given as expressions in `eta`.
pub(crate) fn build_2d_pair_guarded(
    a1: f64,
    a2: f64,
    c: f64,
    f: &Expr,
    h: &Expr,
    eta_guards: &[Guard],
) -> Result<PotentialPair, PotentialError> {
    if c == 0.0 {
        return Err(PotentialError::Invalid("c must be nonzero".into()));
    }
    let params = IntertwinerParams::two_d(a1, a2, c);
    let l1 = params.component_expr(0);
    let l2 = params.component_expr(1);
    let k2 = l1.powi(2).add(&l2.powi(2));
    let kappa = k2.call(Func::Sqrt);
    let eta = l1.div(&l2);
    if let Some(bad) = h.variables().into_iter().find(|v| v != "kappa") {
        return Err(PotentialError::Invalid(format!(
            "h may only depend on kappa, found {bad}"
        )));
    }
    let hx = h.substitute("kappa", &kappa);
    let s = one().add(&eta.powi(2)).scale(c);
    let mut guards = vec![
        Guard::new(l2.clone(), "a2 - c x = 0 (eta undefined)"),
        Guard::new(k2.clone(), "kappa = 0"),
    ];
    for g in eta_guards {
        guards.push(Guard::new(g.expr.substitute("eta", &eta), g.label.clone()));
    }
    let l2sq = l2.powi(2);
    let meta = PairMetadata {
        family: "2d".into(),
        n: 2,
        params: params.clone(),
        f: Some(f.to_string()),
        h: Some(h.to_string()),
        g: None,
        chart: Some("(kappa, eta), eta = L1/L2".into()),
        singular_loci: guards.iter().map(|g| g.label.clone()).collect(),
        notes: vec![],
    };
    assemble_eta_family(
        params,
        f,
        &eta,
        &s,
        &k2,
        &hx.scale(0.5),
        &move |fp| fp.scale(2.0 * c).div(&l2sq),
        guards,
        meta,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RiccatiBranch {
    /// `b < 0`, tangent branch
    Tan,
    /// `b > 0`, hyperbolic tangent branch
    Tanh,
    /// `b = 0`, rational branch
    Rational,
}

/// Closed-form solution of `f² − c(1+η²)f′ = b`.
#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    pub f: Expr,
    pub branch: RiccatiBranch,
    /// Expressions in `eta` vanishing on the poles of `f`.
    pub poles: Vec<Guard>,
    pub b: f64,
    pub b1: f64,
    pub c: f64,
}

impl RiccatiSolution {
    /// `f² − c(1+η²)f′ − b` at `η`.
    pub fn residual(&self, eta: f64) -> Result<f64, crate::expr::ExprError> {
        let f = self.f.eval_at(&[("eta", eta)])?;
        let fp = self.f.differentiate("eta").eval_at(&[("eta", eta)])?;
        Ok(f * f - self.c * (1.0 + eta * eta) * fp - self.b)
    }
}

/// Branches by the sign of `b` (principal branch of `tan`):
/// `b<0`: `f = √−b·tan((√−b/c)(atan η − b1))`;
/// `b>0`: `f = √b·tanh((√b/c)(b1 − atan η))`;
/// `b=0`: `f = c/(b1 − atan η)`.
pub fn solve_riccati_2d(b: f64, b1: f64, c: f64) -> Result<RiccatiSolution, PotentialError> {
    if c == 0.0 {
        return Err(PotentialError::Invalid("c must be nonzero".into()));
    }
    let atan = Expr::var("eta").call(Func::Atan);
    let (f, branch, poles) = if b < 0.0 {
        let s = (-b).sqrt();
        let arg = atan.sub(&Expr::constant(b1)).scale(s / c);
        let f = arg.call(Func::Tan).scale(s);
        let pole = Guard::new(arg.call(Func::Cos), "pole of tan branch");
        (f, RiccatiBranch::Tan, vec![pole])
    } else if b > 0.0 {
        let s = b.sqrt();
        let arg = Expr::constant(b1).sub(&atan).scale(s / c);
        (arg.call(Func::Tanh).scale(s), RiccatiBranch::Tanh, vec![])
    } else {
        let den = Expr::constant(b1).sub(&atan);
        let f = Expr::constant(c).div(&den);
        (f, RiccatiBranch::Rational, vec![Guard::new(den, "b1 - atan(eta) = 0")])
    };
    Ok(RiccatiSolution {
        f,
        branch,
        poles,
        b,
        b1,
        c,
    })
}

/// Partner of free motion (`V0 = 0`): Riccati `f` with `h = −2b/κ²`.
pub fn free_motion_partners_2d(
    b: f64,
    b1: f64,
    c: f64,
    a1: f64,
    a2: f64,
) -> Result<PotentialPair, PotentialError> {
    let sol = solve_riccati_2d(b, b1, c)?;
    let h = if b == 0.0 {
        Expr::constant(0.0)
    } else {
        Expr::constant(-2.0 * b).div(&Expr::var("kappa").powi(2))
    };
    let mut pair = build_2d_pair_guarded(a1, a2, c, &sol.f, &h, &sol.poles)?;
    pair.meta.family = "free-motion-2d".into();
    pair.meta.notes.push(format!(
        "b = {b}, b1 = {b1}, branch = {:?}; V0 vanishes identically",
        sol.branch
    ));
    Ok(pair)
}

/// Closed forms of `V1` for the free-motion partners, in `x1, x2`:
/// `2c²[κ(b1 − atan η)]⁻²` for `b = 0` and `−2b[κ cos(·)]⁻²` /
/// `−2b[κ cosh(·)]⁻²` for `b < 0` / `b > 0`.
pub fn free_motion_v1_closed_form(b: f64, b1: f64, c: f64, a1: f64, a2: f64) -> Expr {
    let params = IntertwinerParams::two_d(a1, a2, c);
    let l1 = params.component_expr(0);
    let l2 = params.component_expr(1);
    let kappa = l1.powi(2).add(&l2.powi(2)).call(Func::Sqrt);
    let atan = l1.div(&l2).call(Func::Atan);
    let den = if b == 0.0 {
        kappa.mul(&Expr::constant(b1).sub(&atan))
    } else if b < 0.0 {
        let s = (-b).sqrt();
        kappa.mul(&atan.sub(&Expr::constant(b1)).scale(s / c).call(Func::Cos))
    } else {
        let s = b.sqrt();
        kappa.mul(&Expr::constant(b1).sub(&atan).scale(s / c).call(Func::Cosh))
    };
    let num = if b == 0.0 { 2.0 * c * c } else { -2.0 * b };
    Expr::constant(num).div(&den.powi(2))
}
