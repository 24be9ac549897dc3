//! Pairs with a pure translation as the differential part: the 1D partners,
//! the constant-shift family and the translational family.

use super::{
    rename_aliases, validate_annihilated, PairMetadata, PotentialError, PotentialPair,
};
use crate::euclid::IntertwinerParams;
use crate::expr::Expr;
use crate::field::cartesian_names;
use crate::linalg;

/// `V0 = L0² − L0′ + b`, `V1 = L0² + L0′ + b` with `L = L0 + ∂x`.
/// `l0` is an expression in `x`.
pub fn build_1d_pair(l0: &Expr, b: f64) -> Result<PotentialPair, PotentialError> {
    let w = l0.substitute("x", &Expr::var("x1"));
    let extra: Vec<String> = w.variables().into_iter().filter(|v| v != "x1").collect();
    if !extra.is_empty() {
        return Err(PotentialError::Invalid(format!(
            "L0 may only depend on x, found {}",
            extra.join(", ")
        )));
    }
    let dw = w.differentiate("x1");
    let base = w.powi(2).add(&Expr::constant(b));
    let params = IntertwinerParams::new(1, vec![1.0], vec![vec![0.0]])?;
    let meta = PairMetadata {
        family: "1d".into(),
        n: 1,
        params: params.clone(),
        f: Some(l0.to_string()),
        h: None,
        g: None,
        chart: None,
        singular_loci: vec![],
        notes: vec![format!("b = {b}")],
    };
    PotentialPair::assemble(
        params,
        base.sub(&dw),
        base.add(&dw),
        w,
        dw.scale(2.0),
        vec![],
        meta,
    )
}

/// Orthonormal basis of the complement of `a`, by Gram–Schmidt on `a` followed
/// by the standard basis vectors.
pub fn projection_basis(a: &[f64]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut seeds = vec![a.to_vec()];
    seeds.extend(linalg::identity(n));
    let q = linalg::gram_schmidt(&seeds, 1e-10);
    q.into_iter().skip(1).take(n.saturating_sub(1)).collect()
}

/// `g` over Cartesian names and projections `s1..s_{n-1}` onto the complement
/// of `a`; returns it in `x1..xn` after checking `a·∇g = 0`.
fn prepare_g(a: &[f64], g: &Expr) -> Result<Expr, PotentialError> {
    let n = a.len();
    let names = cartesian_names(n);
    let mut e = rename_aliases(g, n);
    for (k, b) in projection_basis(a).iter().enumerate() {
        let proj = b.iter().zip(&names).fold(Expr::constant(0.0), |acc, (bi, xi)| {
            acc.add(&Expr::var(xi.as_str()).scale(*bi))
        });
        e = e.substitute(&format!("s{}", k + 1), &proj);
    }
    let unknown: Vec<String> = e
        .variables()
        .into_iter()
        .filter(|v| !names.contains(v))
        .collect();
    if !unknown.is_empty() {
        return Err(PotentialError::Invalid(format!(
            "g uses unknown variables {}",
            unknown.join(", ")
        )));
    }
    let vars: Vec<&str> = names.iter().map(String::as_str).collect();
    let a_dir = a.to_vec();
    if let Some((residual, point)) = validate_annihilated(&e, &vars, &[], &move |_| a_dir.clone())? {
        return Err(PotentialError::GDependsOnA { residual, point });
    }
    Ok(e)
}

fn dot_expr(v: &[f64], names: &[String]) -> Expr {
    v.iter().zip(names).fold(Expr::constant(0.0), |acc, (vi, xi)| {
        acc.add(&Expr::var(xi.as_str()).scale(*vi))
    })
}

/// Constant-shift family: `V1 = V0 + p0` with
/// `V0 = ¼p0² r² + p0 b·r + g` and `L0 = ½p0 a·r + a·b`; rotations vanish.
pub fn build_constant_shift(
    a: &[f64],
    p0: f64,
    b: &[f64],
    g: &Expr,
) -> Result<PotentialPair, PotentialError> {
    let n = a.len();
    if n == 0 || a.iter().all(|v| *v == 0.0) {
        return Err(PotentialError::Invalid("a must be nonzero".into()));
    }
    if b.len() != n {
        return Err(PotentialError::Invalid(format!(
            "b has length {}, expected {n}",
            b.len()
        )));
    }
    let names = cartesian_names(n);
    let gx = prepare_g(a, g)?;
    let r2 = names
        .iter()
        .fold(Expr::constant(0.0), |acc, x| acc.add(&Expr::var(x.as_str()).powi(2)));
    let v0 = r2
        .scale(0.25 * p0 * p0)
        .add(&dot_expr(b, &names).scale(p0))
        .add(&gx);
    let v1 = v0.add(&Expr::constant(p0));
    let l0 = dot_expr(a, &names)
        .scale(0.5 * p0)
        .add(&Expr::constant(linalg::dot(a, b)));
    let params = IntertwinerParams::new(n, a.to_vec(), vec![vec![0.0; n]; n])?;
    let meta = PairMetadata {
        family: "constant-shift".into(),
        n,
        params: params.clone(),
        f: None,
        h: None,
        g: Some(g.to_string()),
        chart: None,
        singular_loci: vec![],
        notes: vec![format!("p0 = {p0}, b = {b:?}")],
    };
    PotentialPair::assemble(params, v0, v1, l0, Expr::constant(p0), vec![], meta)
}

/// Translational family: `L = f(ζ) + a·∇` with `ζ = a·r/2`,
/// `V± = f²/a² ± ½f′`, `V0 = ½g + V−`, `V1 = ½g + V+`.
pub fn build_translational(a: &[f64], f: &Expr, g: &Expr) -> Result<PotentialPair, PotentialError> {
    let n = a.len();
    if n == 0 || a.iter().all(|v| *v == 0.0) {
        return Err(PotentialError::Invalid("a must be nonzero".into()));
    }
    let names = cartesian_names(n);
    let gx = prepare_g(a, g)?;
    let zeta = dot_expr(a, &names).scale(0.5);
    let fp = f.differentiate("zeta");
    let a2 = linalg::dot(a, a);
    let fz = f.substitute("zeta", &zeta);
    let fpz = fp.substitute("zeta", &zeta);
    let unknown: Vec<String> = fz.variables().into_iter().filter(|v| !names.contains(v)).collect();
    if !unknown.is_empty() {
        return Err(PotentialError::Invalid(format!(
            "f may only depend on zeta, found {}",
            unknown.join(", ")
        )));
    }
    let sq = fz.powi(2).scale(1.0 / a2);
    let half_g = gx.scale(0.5);
    let v0 = half_g.add(&sq.sub(&fpz.scale(0.5)));
    let v1 = half_g.add(&sq.add(&fpz.scale(0.5)));
    let params = IntertwinerParams::new(n, a.to_vec(), vec![vec![0.0; n]; n])?;
    let meta = PairMetadata {
        family: "translational".into(),
        n,
        params: params.clone(),
        f: Some(f.to_string()),
        h: None,
        g: Some(g.to_string()),
        chart: Some("zeta = a·r/2".into()),
        singular_loci: vec![],
        notes: vec![],
    };
    PotentialPair::assemble(params, v0, v1, fz, fpz, vec![], meta)
}
