//! Grids, finite differences and the spectral checks built on them.

mod eigen;
mod fd;
mod partner;
mod separated;

use serde::Serialize;

pub use eigen::{solve_1d_eigen, solve_values, Spectrum, SymTridiagonal, SOLVER_TOLERANCE};
pub use fd::{
    convergence_study, fitted_order, gaussian, intertwining_convergence, intertwining_field,
    intertwining_residual, ladder_check, ladder_commutator_exact, ldl_closed_form_field,
    lld_closed_form_field, symmetry_convergence, symmetry_fields, symmetry_residual, BoxGrid,
    Convergence, GridOperators, LadderReport,
};
pub use partner::{
    partner_spectrum_check, transform_states, PairingRow, PartnerReport, TransformedState,
    ANNIHILATION_THRESHOLD,
};
pub use separated::{separated_2d_solve, ScanStep, SeparatedReport, SeparatedSpec, XiMatch};

#[derive(Debug, Clone, thiserror::Error)]
pub enum NumericsError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("potential is singular at node x = {x}")]
    SingularNode { x: f64 },
    #[error("test function touches a singular region: {0}")]
    SingularRegion(String),
    #[error("no bracket for E0 after {} scan steps (target {target})", .trace.len())]
    ScanBracket { target: f64, trace: Vec<ScanStep> },
    #[error(transparent)]
    Expr(#[from] crate::expr::ExprError),
}

/// `n` interior nodes of `[lo, hi]`; the end points carry the Dirichlet data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid1D {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Grid1D {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Grid1D, NumericsError> {
        if n < 3 {
            return Err(NumericsError::Invalid(format!("need at least 3 nodes, got {n}")));
        }
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(NumericsError::Invalid(format!("empty interval [{lo}, {hi}]")));
        }
        Ok(Grid1D { lo, hi, n })
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.n + 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.lo + (i + 1) as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Samples a one-variable expression at every node.
    pub fn sample(&self, e: &crate::expr::Expr, var: &str) -> Result<Vec<f64>, NumericsError> {
        let c = e.compile(&[var])?;
        self.nodes()
            .into_iter()
            .map(|x| match c.eval(&[x]) {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(NumericsError::SingularNode { x }),
            })
            .collect()
    }
}

/// Central first difference with zero Dirichlet data beyond the ends.
pub fn dirichlet_derivative(u: &[f64], h: f64) -> Vec<f64> {
    let n = u.len();
    (0..n)
        .map(|i| {
            let l = if i > 0 { u[i - 1] } else { 0.0 };
            let r = if i + 1 < n { u[i + 1] } else { 0.0 };
            (r - l) / (2.0 * h)
        })
        .collect()
}

/// `(−∂² + V)u` with zero Dirichlet data beyond the ends.
pub fn apply_hamiltonian(v: &[f64], u: &[f64], h: f64) -> Vec<f64> {
    SymTridiagonal::schrodinger(v, h).apply(u)
}

#[cfg(test)]
mod tests;
