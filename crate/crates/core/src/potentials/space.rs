//! Pairs in three dimensions over the `(β, γ, η)` chart.

use serde::Serialize;

use super::general::assemble_eta_family;
use super::{PairMetadata, PotentialError, PotentialPair};
use crate::coords::{Chart3D, EtaPoly};
use crate::euclid::IntertwinerParams;
use crate::expr::{Expr, Func};
use crate::field::Guard;
use crate::integrability::EtaVariant;

/// `β`, `γ`, `η` and `L² = a² − 2γ` as expressions in `x1, x2, x3`.
struct ChartExprs {
    beta: Expr,
    gamma: Expr,
    eta: Expr,
    lsq: Expr,
    denom: Expr,
}

fn chart_exprs(chart: &Chart3D) -> ChartExprs {
    let p = chart.params();
    let r: Vec<Expr> = (1..=3).map(|k| Expr::var(format!("x{k}"))).collect();
    let dot = |v: &[f64]| {
        v.iter()
            .zip(&r)
            .fold(Expr::constant(0.0), |acc, (vi, xi)| acc.add(&xi.scale(*vi)))
    };
    let beta = dot(&chart.c);
    let axc = crate::linalg::cross(&chart.a, &chart.c);
    let r2 = r.iter().fold(Expr::constant(0.0), |acc, x| acc.add(&x.powi(2)));
    let gamma = dot(&axc).add(&beta.powi(2).sub(&r2.scale(chart.c_norm_sq())).scale(0.5));
    let a2 = crate::linalg::dot(&chart.a, &chart.a);
    let lsq = Expr::constant(a2).sub(&gamma.scale(2.0));
    let (i, j) = chart.variant.pair();
    let denom = p.component_expr(j);
    let eta = p.component_expr(i).div(&denom);
    ChartExprs {
        beta,
        gamma,
        eta,
        lsq,
        denom,
    }
}

fn chart_for(params: &IntertwinerParams, variant: EtaVariant) -> Result<Chart3D, PotentialError> {
    Chart3D::new(params, variant).map_err(|e| PotentialError::Invalid(e.to_string()))
}

/// `V± = f² ± p(η)f′`, `V0 = ½h(β,γ) + V−/L²`, `V1 = ½h(β,γ) + V+/L²`
/// with `L² = a² − 2γ`; requires `a·c = 0`.
pub fn build_3d_pair(
    params: &IntertwinerParams,
    f: &Expr,
    h: &Expr,
    variant: EtaVariant,
) -> Result<PotentialPair, PotentialError> {
    build_3d_guarded(params, f, h, variant, &[], "3d")
}

fn build_3d_guarded(
    params: &IntertwinerParams,
    f: &Expr,
    h: &Expr,
    variant: EtaVariant,
    eta_guards: &[Guard],
    family: &str,
) -> Result<PotentialPair, PotentialError> {
    let chart = chart_for(params, variant)?;
    if let Some(bad) = h.variables().into_iter().find(|v| v != "beta" && v != "gamma") {
        return Err(PotentialError::Invalid(format!(
            "h may only depend on beta and gamma, found {bad}"
        )));
    }
    let ex = chart_exprs(&chart);
    let hx = h.substitute("beta", &ex.beta).substitute("gamma", &ex.gamma);
    let (_, j) = variant.pair();
    let mut guards = vec![
        Guard::new(ex.denom.clone(), format!("L{} = 0", j + 1)),
        Guard::new(ex.lsq.clone(), "L² = a² − 2γ ≤ 0"),
    ];
    for g in eta_guards {
        guards.push(Guard::new(g.expr.substitute("eta", &ex.eta), g.label.clone()));
    }
    let poly = chart.poly;
    let s = poly.expr(&ex.eta);
    let lsq = ex.lsq.clone();
    let meta = PairMetadata {
        family: family.into(),
        n: 3,
        params: params.clone(),
        f: Some(f.to_string()),
        h: Some(h.to_string()),
        g: None,
        chart: Some(format!(
            "(beta, gamma, {}) with polynomial {}",
            match variant {
                EtaVariant::Eta => "eta = L1/L2",
                EtaVariant::Eta2 => "eta2 = L1/L3",
                EtaVariant::Eta3 => "eta3 = L2/L3",
            },
            variant.polynomial_name()
        )),
        singular_loci: guards.iter().map(|g| g.label.clone()).collect(),
        notes: vec![],
    };
    let s2 = s.clone();
    assemble_eta_family(
        params.clone(),
        f,
        &ex.eta,
        &s,
        &ex.lsq,
        &hx.scale(0.5),
        &move |fp| s2.mul(fp).scale(2.0).div(&lsq),
        guards,
        meta,
    )
}

/// Which of the three listed partners of free motion to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FreeMotionKind {
    /// `f = [b1 − (1/c)atan(p′/2c)]⁻¹`, `V1 = 2f²/L²`
    One,
    /// `f = ½p′`, `V1 = (2/L²)(c² + ¼p′²)`
    Two,
    /// `f = ½p′ + p/(b1 − η)`, `V1 = (2/L²)(c² + f²)`
    Three,
}

impl TryFrom<u8> for FreeMotionKind {
    type Error = PotentialError;

    fn try_from(k: u8) -> Result<Self, PotentialError> {
        match k {
            1 => Ok(FreeMotionKind::One),
            2 => Ok(FreeMotionKind::Two),
            3 => Ok(FreeMotionKind::Three),
            _ => Err(PotentialError::Invalid(format!("free-motion kind must be 1, 2 or 3, got {k}"))),
        }
    }
}

/// `f(η)` and `h(β, γ)` making `V0 = 0` for the chosen kind.
pub(crate) fn free_motion_data(poly: &EtaPoly, kind: FreeMotionKind, b1: f64) -> (Expr, Expr, Vec<Guard>) {
    let eta = Expr::var("eta");
    let c = poly.norm;
    let dp = poly.derivative_expr(&eta);
    let h_rot = Expr::constant(2.0 * c * c).div(&Expr::var("Lsq"));
    match kind {
        FreeMotionKind::One => {
            let den = Expr::constant(b1).sub(&dp.scale(0.5 / c).call(Func::Atan).scale(1.0 / c));
            let f = Expr::constant(1.0).div(&den);
            (f, Expr::constant(0.0), vec![Guard::new(den, "b1 - atan(p'/2c)/c = 0")])
        }
        FreeMotionKind::Two => (dp.scale(0.5), h_rot, vec![]),
        FreeMotionKind::Three => {
            let den = Expr::constant(b1).sub(&eta);
            let f = dp.scale(0.5).add(&poly.expr(&eta).div(&den));
            (f, h_rot, vec![Guard::new(den, "eta = b1")])
        }
    }
}

/// Partners of free motion in space (`V0 = 0`).
pub fn free_motion_partners_3d(
    params: &IntertwinerParams,
    kind: FreeMotionKind,
    b1: f64,
    variant: EtaVariant,
) -> Result<PotentialPair, PotentialError> {
    let chart = chart_for(params, variant)?;
    let (f, h, poles) = free_motion_data(&chart.poly, kind, b1);
    let a2 = crate::linalg::dot(&chart.a, &chart.a);
    let lsq = Expr::constant(a2).sub(&Expr::var("gamma").scale(2.0));
    let h = h.substitute("Lsq", &lsq);
    let mut pair = build_3d_guarded(params, &f, &h, variant, &poles, "free-motion-3d")?;
    pair.meta.notes.push(format!("kind = {kind:?}, b1 = {b1}; V0 vanishes identically"));
    Ok(pair)
}
