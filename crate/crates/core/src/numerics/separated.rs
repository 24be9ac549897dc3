//! The planar problem separated in `(ρ, ξ)`:
//! `[−∂ξ² + 𝒱]U = (ℰ_n + M)U` and `[−∂ρ² + ℋ − e^{2cρ}E⁰]R = −(ℰ_n + M)R`.
//!
//! The ξ-equation is an ordinary eigenproblem. For the ρ-equation the
//! eigenvalue is prescribed and `E⁰` is the unknown; its lowest eigenvalue
//! decreases strictly with `E⁰`, so `E⁰` is bracketed by a geometric scan and
//! refined by bisection.

use serde::Serialize;

use super::{solve_values, Grid1D, NumericsError, Spectrum, SymTridiagonal, TransformedState};
use crate::expr::Expr;

/// Inputs of [`separated_2d_solve`]. `calv` is in `xi`, `calh` in `rho`.
#[derive(Debug, Clone)]
pub struct SeparatedSpec {
    pub calv: Expr,
    pub calh: Expr,
    pub c: f64,
    /// seed level `n`; `φ_n` defines `f = −φ_n′/φ_n`
    pub n: usize,
    /// choose `M = ℰ_{n+} − ℰ_n` from a level index; overrides `m`
    pub n_plus: Option<usize>,
    pub m: f64,
    pub xi_grid: Grid1D,
    pub rho_grid: Grid1D,
    /// number of ξ-levels computed
    pub k: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanStep {
    pub e0: f64,
    pub eigenvalue: f64,
    /// computed minus required ρ-eigenvalue
    pub mismatch: f64,
}

/// A required ξ-eigenvalue and the computed level it matched, if any.
#[derive(Debug, Clone, Serialize)]
pub struct XiMatch {
    pub target: f64,
    pub index: Option<usize>,
    pub eigenvalue: Option<f64>,
}

impl XiMatch {
    fn find(spectrum: &Spectrum, target: f64, tol: f64) -> XiMatch {
        let best = spectrum
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - target).abs().total_cmp(&(b.1 - target).abs()))
            .filter(|(_, e)| (*e - target).abs() <= tol);
        XiMatch {
            target,
            index: best.map(|b| b.0),
            eigenvalue: best.map(|b| *b.1),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SeparatedReport {
    /// spectrum of `−∂ξ² + 𝒱`
    pub xi: Spectrum,
    pub n: usize,
    pub e_n: f64,
    pub m: f64,
    /// `ℰ_n + M`, the ξ-eigenvalue of `U⁰`
    pub u0: XiMatch,
    /// `ℰ_n − M`; no match is reported rather than interpolated
    pub n_minus: XiMatch,
    /// sign changes of `φ_n`; each is a pole of `f`
    pub seed_nodes: Vec<f64>,
    pub e0: f64,
    /// lowest ρ-eigenvalue at the returned `E⁰`
    pub rho_eigenvalue: f64,
    pub rho_target: f64,
    pub scan: Vec<ScanStep>,
    /// images `Lψ` of the ξ-states, tested against `−∂² + f² + f′`
    pub transformed: Vec<TransformedState>,
    pub transformed_tolerance: f64,
}

impl SeparatedReport {
    /// `U¹ = LU⁰` as found among the transformed states.
    pub fn u1(&self) -> Option<&TransformedState> {
        self.u0.index.and_then(|i| self.transformed.get(i))
    }
}

fn rho_ground(base: &[f64], weight: &[f64], e0: f64, h: f64) -> f64 {
    let v: Vec<f64> = base.iter().zip(weight).map(|(b, w)| b - w * e0).collect();
    SymTridiagonal::schrodinger(&v, h).eigenvalue(0)
}

/// Finds `E⁰` with lowest eigenvalue `target` of `−∂² + base − weight·E⁰`.
fn solve_e0(base: &[f64], weight: &[f64], target: f64, h: f64) -> Result<(f64, f64, Vec<ScanStep>), NumericsError> {
    let mut trace = Vec::new();
    let mut eval = |e0: f64| {
        let eigenvalue = rho_ground(base, weight, e0, h);
        trace.push(ScanStep {
            e0,
            eigenvalue,
            mismatch: eigenvalue - target,
        });
        eigenvalue - target
    };
    let g0 = eval(0.0);
    if g0 == 0.0 {
        return Ok((0.0, target, trace));
    }
    // the mismatch falls as E⁰ grows, so step towards its sign change
    let dir = if g0 > 0.0 { 1.0 } else { -1.0 };
    let mut prev = 0.0;
    let mut bracket = None;
    let mut step = 1.0;
    for _ in 0..80 {
        let e = dir * step;
        if eval(e).signum() != g0.signum() {
            bracket = Some(if dir > 0.0 { (prev, e) } else { (e, prev) });
            break;
        }
        prev = e;
        step *= 2.0;
    }
    let Some((mut lo, mut hi)) = bracket else {
        return Err(NumericsError::ScanBracket { target, trace });
    };
    // invariant: mismatch(lo) > 0 > mismatch(hi)
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if eval(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let e0 = 0.5 * (lo + hi);
    Ok((e0, rho_ground(base, weight, e0, h), trace))
}

/// Solves both separated equations for the pair generated by the `n`-th
/// ξ-state and reports how `L = f + ∂ξ` acts on the ξ-states.
pub fn separated_2d_solve(spec: &SeparatedSpec) -> Result<SeparatedReport, NumericsError> {
    if spec.c == 0.0 {
        return Err(NumericsError::Invalid("c must be nonzero".into()));
    }
    let edge = spec.xi_grid.lo.abs().max(spec.xi_grid.hi.abs());
    if spec.c.abs() * edge >= std::f64::consts::FRAC_PI_2 {
        return Err(NumericsError::Invalid(format!(
            "xi grid leaves the chart strip |c xi| < pi/2 (c = {}, |xi| up to {edge})",
            spec.c
        )));
    }
    if spec.n >= spec.k || spec.n_plus.is_some_and(|p| p >= spec.k) {
        return Err(NumericsError::Invalid(format!("levels must be below k = {}", spec.k)));
    }
    let calv = spec.xi_grid.sample(&spec.calv, "xi")?;
    let xi = solve_values(&calv, &spec.xi_grid, spec.k)?;
    let e_n = xi.eigenvalues[spec.n];
    let m = match spec.n_plus {
        Some(p) => xi.eigenvalues[p] - e_n,
        None => spec.m,
    };
    let tol = 10.0 * xi.tolerance;
    let u0 = XiMatch::find(&xi, e_n + m, tol);
    let n_minus = XiMatch::find(&xi, e_n - m, tol);

    let step = crate::hierarchy::darboux_step_eigen(&calv, &xi, spec.n)
        .map_err(|e| NumericsError::Invalid(e.to_string()))?;
    let f = step.superpotential();
    let v_plus: Vec<f64> = step.v_new.iter().map(|v| v - e_n).collect();
    let mut minus = xi.clone();
    minus.eigenvalues.iter_mut().for_each(|e| *e -= e_n);
    let transformed = super::transform_states(&f, &v_plus, &minus);

    let base = spec.rho_grid.sample(&spec.calh, "rho")?;
    let weight: Vec<f64> = spec.rho_grid.nodes().iter().map(|r| (2.0 * spec.c * r).exp()).collect();
    let rho_target = -(e_n + m);
    let (e0, rho_eigenvalue, scan) = solve_e0(&base, &weight, rho_target, spec.rho_grid.spacing())?;

    Ok(SeparatedReport {
        transformed_tolerance: 10.0 * xi.tolerance,
        xi,
        n: spec.n,
        e_n,
        m,
        u0,
        n_minus,
        seed_nodes: step.seed_nodes.clone(),
        e0,
        rho_eigenvalue,
        rho_target,
        scan,
        transformed,
    })
}
