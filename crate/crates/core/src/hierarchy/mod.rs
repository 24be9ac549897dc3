//! Darboux transformations of one-dimensional Schrödinger operators, chains of
//! them, the missing partner state and the lift of a 1D seed to a planar pair.

use serde::Serialize;

use crate::expr::{Expr, Func};
use crate::field::Guard;
use crate::numerics::{dirichlet_derivative, solve_values, Grid1D, NumericsError, Spectrum};
use crate::potentials::PotentialPair;

/// Largest scaled residual of a seed accepted by [`embed_2d`].
pub const SEED_RESIDUAL_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, thiserror::Error)]
pub enum HierarchyError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Expr(#[from] crate::expr::ExprError),
    #[error(transparent)]
    Potential(#[from] crate::potentials::PotentialError),
    #[error("seed vanishes at grid node x = {x}")]
    ZeroAtNode { x: f64 },
    #[error("seed has {count} node(s); the missing state needs a nodeless seed")]
    SeedHasNodes { count: usize },
    #[error("seed residual {residual:e} exceeds {limit:e} at xi = {xi}")]
    SeedResidual { residual: f64, limit: f64, xi: f64 },
    #[error("level {level} is singular; no further steps possible")]
    SingularLevel { level: usize },
    #[error("invalid input: {0}")]
    Invalid(String),
}

/// `φ_{i+1}/φ_i` and `φ_{i−1}/φ_i` at every node.
#[derive(Debug, Clone)]
struct Ratios {
    up: Vec<f64>,
    down: Vec<f64>,
}

impl Ratios {
    /// Ratios of sampled values. A sampled seed need not vanish beyond the
    /// ends, so the outer ratios extrapolate `ln φ` as a cubic.
    fn direct(phi: &[f64], grid: &Grid1D) -> Result<Ratios, HierarchyError> {
        if let Some(i) = phi.iter().position(|v| *v == 0.0 || !v.is_finite()) {
            return Err(HierarchyError::ZeroAtNode { x: grid.node(i) });
        }
        let n = phi.len();
        let mut up: Vec<f64> = (0..n).map(|i| if i + 1 < n { phi[i + 1] / phi[i] } else { 0.0 }).collect();
        let mut down: Vec<f64> = (0..n).map(|i| if i > 0 { phi[i - 1] / phi[i] } else { 0.0 }).collect();
        let ghost = |r: [f64; 3], fallback: f64| {
            if r.iter().all(|v| *v > 0.0) {
                (3.0 * r[0].ln() - 3.0 * r[1].ln() + r[2].ln()).exp()
            } else {
                fallback
            }
        };
        if n >= 4 {
            down[0] = ghost([down[1], down[2], down[3]], (3.0 * phi[0] - 3.0 * phi[1] + phi[2]) / phi[0]);
            up[n - 1] = ghost(
                [up[n - 2], up[n - 3], up[n - 4]],
                (3.0 * phi[n - 1] - 3.0 * phi[n - 2] + phi[n - 3]) / phi[n - 1],
            );
        }
        Ok(Ratios { up, down })
    }

    /// Ratios of the discrete eigenfunction at `lambda`, propagated inwards
    /// from both ends so that the decaying tails never underflow.
    fn eigen(v: &[f64], lambda: f64, phi: &[f64], grid: &Grid1D) -> Ratios {
        let n = v.len();
        let h2 = grid.spacing().powi(2);
        let d: Vec<f64> = v.iter().map(|vi| 2.0 + h2 * (vi - lambda)).collect();
        let m = phi
            .iter()
            .enumerate()
            .fold(0, |best, (i, x)| if x.abs() > phi[best].abs() { i } else { best });
        let mut up = vec![0.0; n];
        let mut down = vec![0.0; n];
        for i in 0..m {
            up[i] = d[i] - down[i];
            down[i + 1] = 1.0 / up[i];
        }
        for i in (m + 1..n).rev() {
            down[i] = d[i] - up[i];
            up[i - 1] = 1.0 / down[i];
        }
        Ratios { up, down }
    }

    /// Sign changes between neighbouring nodes, as midpoints.
    fn nodes(&self, grid: &Grid1D) -> Vec<f64> {
        let h = grid.spacing();
        (0..self.up.len().saturating_sub(1))
            .filter(|i| self.up[*i] < 0.0)
            .map(|i| grid.node(i) + 0.5 * h)
            .collect()
    }

    /// Central differences of `ln φ`: `((ln φ)′, (ln φ)″)`.
    fn log_derivatives(&self, h: f64) -> (Vec<f64>, Vec<f64>) {
        let first: Vec<f64> = self.up.iter().zip(&self.down).map(|(u, d)| (u - d) / (2.0 * h)).collect();
        let second = self
            .up
            .iter()
            .zip(&self.down)
            .zip(&first)
            .map(|((u, d), f)| (u - 2.0 + d) / (h * h) - f * f)
            .collect();
        (first, second)
    }
}

/// One Darboux step on a grid: `V ↦ V − 2(ln φ)″`, `ψ ↦ ψ′ − (ln φ)′ψ`.
#[derive(Debug, Clone, Serialize)]
pub struct DarbouxStep {
    pub grid: Grid1D,
    pub lambda: f64,
    #[serde(skip)]
    pub v_new: Vec<f64>,
    #[serde(skip)]
    pub log_first: Vec<f64>,
    #[serde(skip)]
    pub log_second: Vec<f64>,
    /// positions where the seed changes sign; each one is a pole of `V_new`
    pub seed_nodes: Vec<f64>,
}

impl DarbouxStep {
    pub fn is_singular(&self) -> bool {
        !self.seed_nodes.is_empty()
    }

    pub fn map_state(&self, psi: &[f64]) -> Vec<f64> {
        let d = dirichlet_derivative(psi, self.grid.spacing());
        d.iter().zip(&self.log_first).zip(psi).map(|((d, l), p)| d - l * p).collect()
    }

    /// `f = −(ln φ)′`, the superpotential of the factorisation.
    pub fn superpotential(&self) -> Vec<f64> {
        self.log_first.iter().map(|v| -v).collect()
    }
}

/// Seed of a Darboux step.
#[derive(Debug, Clone)]
pub enum Seed {
    /// The `index`-th eigenstate of the current level.
    Eigen(usize),
    /// Explicit node values at energy `lambda`.
    Values { phi: Vec<f64>, lambda: f64 },
    /// Closed form in `var` at energy `lambda`.
    Closed { phi: Expr, var: String, lambda: f64 },
}

fn finish_step(v: &[f64], grid: &Grid1D, lambda: f64, ratios: Ratios) -> DarbouxStep {
    let (log_first, log_second) = ratios.log_derivatives(grid.spacing());
    let seed_nodes = ratios.nodes(grid);
    if !seed_nodes.is_empty() {
        log::warn!(
            "Darboux seed at lambda = {lambda} has {} node(s); the new potential has poles there",
            seed_nodes.len()
        );
    }
    let v_new = v.iter().zip(&log_second).map(|(v, l)| v - 2.0 * l).collect();
    DarbouxStep {
        grid: grid.clone(),
        lambda,
        v_new,
        log_first,
        log_second,
        seed_nodes,
    }
}

/// Darboux step with seed values `phi` at energy `lambda`; log-derivatives by
/// central differences.
pub fn darboux_step(v: &[f64], phi: &[f64], lambda: f64, grid: &Grid1D) -> Result<DarbouxStep, HierarchyError> {
    check_len(v, grid)?;
    check_len(phi, grid)?;
    Ok(finish_step(v, grid, lambda, Ratios::direct(phi, grid)?))
}

/// Darboux step seeded by the `index`-th computed eigenstate of `spectrum`.
/// The neighbour ratios come from the discrete three-term recurrence.
pub fn darboux_step_eigen(
    v: &[f64],
    spectrum: &Spectrum,
    index: usize,
) -> Result<DarbouxStep, HierarchyError> {
    check_len(v, &spectrum.grid)?;
    let (lambda, phi) = spectrum
        .eigenvalues
        .get(index)
        .zip(spectrum.eigenvectors.get(index))
        .ok_or_else(|| HierarchyError::Invalid(format!("no eigenstate {index} in a spectrum of {}", spectrum.len())))?;
    let ratios = Ratios::eigen(v, *lambda, phi, &spectrum.grid);
    Ok(finish_step(v, &spectrum.grid, *lambda, ratios))
}

/// Closed-form step: `V − 2(φ″/φ − (φ′/φ)²)` and the coefficient `(ln φ)′ = φ′/φ`.
pub fn darboux_step_expr(v: &Expr, phi: &Expr, var: &str) -> (Expr, Expr) {
    let d1 = phi.differentiate(var);
    let d2 = d1.differentiate(var);
    let log1 = d1.div(phi);
    let log2 = d2.div(phi).sub(&log1.powi(2));
    (v.sub(&log2.scale(2.0)), log1)
}

fn check_len(v: &[f64], grid: &Grid1D) -> Result<(), HierarchyError> {
    if v.len() != grid.n {
        return Err(HierarchyError::Invalid(format!("{} values for {} nodes", v.len(), grid.n)));
    }
    Ok(())
}

/// `U = −(1/φ) ∫ φ²` from the first node, by the trapezoid rule with its
/// leading end correction.
pub fn missing_state(phi: &[f64], grid: &Grid1D) -> Result<Vec<f64>, HierarchyError> {
    check_len(phi, grid)?;
    if let Some(i) = phi.iter().position(|v| *v == 0.0 || !v.is_finite()) {
        return Err(HierarchyError::ZeroAtNode { x: grid.node(i) });
    }
    let ratios = Ratios::direct(phi, grid)?;
    let count = ratios.nodes(grid).len();
    if count > 0 {
        return Err(HierarchyError::SeedHasNodes { count });
    }
    let h = grid.spacing();
    let n = phi.len();
    let g: Vec<f64> = phi.iter().map(|p| p * p).collect();
    let dg = |i: usize| -> f64 {
        if i == 0 {
            (-3.0 * g[0] + 4.0 * g[1] - g[2]) / (2.0 * h)
        } else if i + 1 == n {
            (3.0 * g[n - 1] - 4.0 * g[n - 2] + g[n - 3]) / (2.0 * h)
        } else {
            (g[i + 1] - g[i - 1]) / (2.0 * h)
        }
    };
    let dg0 = dg(0);
    let mut trap = 0.0;
    let mut u = Vec::with_capacity(n);
    for i in 0..n {
        if i > 0 {
            trap += 0.5 * h * (g[i - 1] + g[i]);
        }
        let integral = trap - h * h / 12.0 * (dg(i) - dg0);
        u.push(-integral / phi[i]);
    }
    Ok(u)
}

/// `max |−U″ + (V − λ)U| / max |U|` with the five-point second derivative.
pub fn missing_state_residual(u: &[f64], v: &[f64], lambda: f64, grid: &Grid1D) -> f64 {
    let h2 = grid.spacing().powi(2);
    let n = u.len();
    let scale = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let r = (2..n.saturating_sub(2)).fold(0.0f64, |m, i| {
        let d2 = (-u[i + 2] + 16.0 * u[i + 1] - 30.0 * u[i] + 16.0 * u[i - 1] - u[i - 2]) / (12.0 * h2);
        m.max((-d2 + (v[i] - lambda) * u[i]).abs())
    });
    r / scale
}

/// Wronskian `U (1/φ)′ − U′ (1/φ)` at the node nearest the interval centre.
/// `1/φ` spans the image of the seed's energy eigenspace under the state map,
/// so a nonzero value certifies that `U` is new.
pub fn missing_state_wronskian(u: &[f64], phi: &[f64], grid: &Grid1D) -> f64 {
    let i = (grid.n / 2).clamp(1, grid.n - 2);
    let h = grid.spacing();
    let w = |k: usize| 1.0 / phi[k];
    let du = (u[i + 1] - u[i - 1]) / (2.0 * h);
    let dw = (w(i + 1) - w(i - 1)) / (2.0 * h);
    u[i] * dw - du * w(i)
}

#[derive(Debug, Clone, Serialize)]
pub struct HierarchyLevel {
    pub level: usize,
    /// seed energy removed when producing this level from the previous one
    pub deleted: Option<f64>,
    pub seed_index: Option<usize>,
    pub seed_nodes: Vec<f64>,
    pub singular: bool,
    /// `None` for a singular level
    pub spectrum: Option<Spectrum>,
    /// largest `|E_k(new) − E_{k'}(old)|` after removing the deleted value
    pub isospectral_deviation: Option<f64>,
    #[serde(skip)]
    pub potential: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Hierarchy {
    pub grid: Grid1D,
    pub levels: Vec<HierarchyLevel>,
}

impl Hierarchy {
    /// `level,deleted,singular,e0,e1,...` rows; missing values stay empty.
    pub fn to_csv(&self) -> String {
        let width = self
            .levels
            .iter()
            .filter_map(|l| l.spectrum.as_ref().map(|s| s.len()))
            .max()
            .unwrap_or(0);
        let mut s = String::from("level,deleted,singular");
        for k in 0..width {
            s.push_str(&format!(",e{k}"));
        }
        s.push('\n');
        for l in &self.levels {
            s.push_str(&format!(
                "{},{},{}",
                l.level,
                l.deleted.map(crate::output::g17).unwrap_or_default(),
                l.singular
            ));
            let values = l.spectrum.as_ref().map(|sp| sp.eigenvalues.as_slice()).unwrap_or(&[]);
            for k in 0..width {
                s.push(',');
                if let Some(e) = values.get(k) {
                    s.push_str(&crate::output::g17(*e));
                }
            }
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("hierarchy serializes")
    }
}

fn deviation_after_removal(old: &[f64], new: &[f64], deleted: f64) -> f64 {
    let skip = old
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - deleted).abs().total_cmp(&(b.1 - deleted).abs()))
        .map(|(i, _)| i);
    let rest: Vec<f64> = old
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != skip)
        .map(|(_, v)| *v)
        .collect();
    rest.iter().zip(new).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
}

/// Applies the seeds in order, recording the lowest `k` levels of every
/// intermediate potential. An empty seed list returns the input level alone.
pub fn build_hierarchy(v: &[f64], seeds: &[Seed], grid: &Grid1D, k: usize) -> Result<Hierarchy, HierarchyError> {
    check_len(v, grid)?;
    let spectrum = solve_values(v, grid, k)?;
    let mut levels = vec![HierarchyLevel {
        level: 0,
        deleted: None,
        seed_index: None,
        seed_nodes: vec![],
        singular: false,
        spectrum: Some(spectrum),
        isospectral_deviation: None,
        potential: v.to_vec(),
    }];
    for (j, seed) in seeds.iter().enumerate() {
        let prev = levels.last().expect("at least the input level");
        let Some(spec) = prev.spectrum.as_ref() else {
            return Err(HierarchyError::SingularLevel { level: prev.level });
        };
        let (step, seed_index) = match seed {
            Seed::Eigen(i) => (darboux_step_eigen(&prev.potential, spec, *i)?, Some(*i)),
            Seed::Values { phi, lambda } => (darboux_step(&prev.potential, phi, *lambda, grid)?, None),
            Seed::Closed { phi, var, lambda } => {
                let values = grid.sample(phi, var)?;
                (darboux_step(&prev.potential, &values, *lambda, grid)?, None)
            }
        };
        let singular = step.is_singular();
        let spectrum = if singular { None } else { Some(solve_values(&step.v_new, grid, k)?) };
        let isospectral_deviation = spectrum
            .as_ref()
            .map(|s| deviation_after_removal(&spec.eigenvalues, &s.eigenvalues, step.lambda));
        levels.push(HierarchyLevel {
            level: j + 1,
            deleted: Some(step.lambda),
            seed_index,
            seed_nodes: step.seed_nodes.clone(),
            singular,
            spectrum,
            isospectral_deviation,
            potential: step.v_new,
        });
    }
    Ok(Hierarchy {
        grid: grid.clone(),
        levels,
    })
}

/// Lifts the separated seed problem `−φ″ + 𝒱φ = ℰ_n φ` to the plane.
///
/// With `f = −φ′/φ` and `h = 2e^{−2cρ}(ℋ + ℰ_n)` the pair is
/// `V0 = e^{−2cρ}(𝒱 + ℋ)` and
/// `V1 = e^{−2cρ}[2(φ′/φ)² + 2ℰ_n − 𝒱 + ℋ]`, written in Cartesian form via
/// `ξ = atan(η)/c` and `e^{cρ} = κ`. `calv` and `phi` use `xi`, `calh` uses `rho`.
pub fn embed_2d(
    calv: &Expr,
    calh: &Expr,
    e_n: f64,
    phi: &Expr,
    c: f64,
    a: [f64; 2],
) -> Result<PotentialPair, HierarchyError> {
    if c == 0.0 {
        return Err(HierarchyError::Invalid("c must be nonzero".into()));
    }
    for (e, var, name) in [(calv, "xi", "V"), (phi, "xi", "phi"), (calh, "rho", "H")] {
        if let Some(bad) = e.variables().into_iter().find(|v| v != var) {
            return Err(HierarchyError::Invalid(format!("{name} may only depend on {var}, found {bad}")));
        }
    }
    check_seed(calv, e_n, phi, c)?;
    let xi_of_eta = Expr::var("eta").call(Func::Atan).scale(1.0 / c);
    let f = phi.differentiate("xi").div(phi).neg().substitute("xi", &xi_of_eta);
    let kappa = Expr::var("kappa");
    let rho = kappa.call(Func::Ln).scale(1.0 / c);
    let h = calh
        .substitute("rho", &rho)
        .add(&Expr::constant(e_n))
        .scale(2.0)
        .div(&kappa.powi(2));
    let guard = Guard::new(phi.substitute("xi", &xi_of_eta), "phi_n = 0");
    let mut pair = crate::potentials::build_2d_pair_guarded(a[0], a[1], c, &f, &h, &[guard])?;
    pair.meta.family = "embed-2d".into();
    pair.meta.notes.push(format!("V = {calv}, H = {calh}, E_n = {e_n}, phi_n = {phi}"));
    Ok(pair)
}

/// `−φ″ + (𝒱 − ℰ_n)φ`, scaled by the largest term, on the open strip
/// `|cξ| < π/2`.
fn check_seed(calv: &Expr, e_n: f64, phi: &Expr, c: f64) -> Result<(), HierarchyError> {
    let d2 = phi.differentiate("xi").differentiate("xi").compile(&["xi"])?;
    let vc = calv.compile(&["xi"])?;
    let pc = phi.compile(&["xi"])?;
    let half = 0.9 * std::f64::consts::FRAC_PI_2 / c.abs();
    for i in 0..=40 {
        let xi = -half + 2.0 * half * i as f64 / 40.0;
        let (Ok(p), Ok(pp), Ok(v)) = (pc.eval(&[xi]), d2.eval(&[xi]), vc.eval(&[xi])) else {
            continue;
        };
        let scale = 1f64.max(pp.abs()).max((v * p).abs()).max((e_n * p).abs());
        let residual = (-pp + (v - e_n) * p).abs() / scale;
        if residual > SEED_RESIDUAL_LIMIT {
            return Err(HierarchyError::SeedResidual {
                residual,
                limit: SEED_RESIDUAL_LIMIT,
                xi,
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests;
