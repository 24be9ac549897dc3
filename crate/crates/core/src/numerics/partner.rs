//! Partner Hamiltonians `H± = −∂² + f² ± f′` and the states `L = f + ∂` maps
//! between them.

use serde::Serialize;

use super::{apply_hamiltonian, dirichlet_derivative, solve_values, Grid1D, NumericsError, Spectrum};
use crate::expr::Expr;

/// `‖Lψ‖₂ ≤` this marks a unit-norm state as annihilated by `L`.
pub const ANNIHILATION_THRESHOLD: f64 = 1e-2;

#[derive(Debug, Clone, Serialize)]
pub struct PairingRow {
    /// index into the spectrum of `H+`
    pub k: usize,
    pub e_plus: f64,
    /// the `H−` eigenvalue it pairs with
    pub e_minus: f64,
    pub deviation: f64,
}

/// `Lψ` for one eigenpair `(E, ψ)` of `H−`.
#[derive(Debug, Clone, Serialize)]
pub struct TransformedState {
    pub index: usize,
    pub energy: f64,
    /// grid 2-norm of `Lψ` with `ψ` normalised
    pub norm: f64,
    pub annihilated: bool,
    /// `‖(H+ − E)Lψ‖∞ / ‖Lψ‖∞`; `None` when annihilated
    pub residual: Option<f64>,
    #[serde(skip)]
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PartnerReport {
    pub f: String,
    pub minus: Spectrum,
    pub plus: Spectrum,
    /// ground state of `H−` annihilated, so `E_k(H+)` pairs with `E_{k+1}(H−)`
    pub unbroken: bool,
    pub pairing: Vec<PairingRow>,
    pub max_deviation: f64,
    pub transformed: Vec<TransformedState>,
    /// accepted relative residual of the transformed states
    pub transformed_tolerance: f64,
}

impl PartnerReport {
    pub fn transformed_ok(&self) -> bool {
        self.transformed
            .iter()
            .all(|t| t.residual.is_none_or(|r| r <= self.transformed_tolerance))
    }

    /// `k,e_plus,e_minus,deviation` rows.
    pub fn pairing_csv(&self) -> String {
        let mut s = String::from("k,e_plus,e_minus,deviation\n");
        for r in &self.pairing {
            s.push_str(&format!(
                "{},{}\n",
                r.k,
                crate::output::csv_row(&[r.e_plus, r.e_minus, r.deviation])
            ));
        }
        s
    }
}

/// Applies `L = f + ∂` to every eigenvector of `minus` and measures each
/// image as an eigenfunction of `−∂² + v_plus` at the same energy.
pub fn transform_states(f: &[f64], v_plus: &[f64], minus: &Spectrum) -> Vec<TransformedState> {
    let h = minus.grid.spacing();
    minus
        .eigenvectors
        .iter()
        .zip(&minus.eigenvalues)
        .enumerate()
        .map(|(index, (psi, &energy))| {
            let d = dirichlet_derivative(psi, h);
            let lpsi: Vec<f64> = (0..psi.len()).map(|i| f[i] * psi[i] + d[i]).collect();
            let norm = (h * lpsi.iter().map(|v| v * v).sum::<f64>()).sqrt();
            let annihilated = norm <= ANNIHILATION_THRESHOLD;
            let residual = if annihilated {
                None
            } else {
                let hl = apply_hamiltonian(v_plus, &lpsi, h);
                // the outermost nodes see the one-sided derivative of L
                let n = lpsi.len();
                let r = (2..n - 2).fold(0.0f64, |m, i| m.max((hl[i] - energy * lpsi[i]).abs()));
                let s = lpsi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                Some(r / s)
            };
            TransformedState {
                index,
                energy,
                norm,
                annihilated,
                residual,
                values: lpsi,
            }
        })
        .collect()
}

/// Spectra of `H± = −∂² + f² ± f′` on `grid`, their pairing and the images of
/// the `H−` eigenfunctions under `L = f + ∂`. `f` depends on `var` only.
pub fn partner_spectrum_check(f: &Expr, var: &str, grid: &Grid1D, k: usize) -> Result<PartnerReport, NumericsError> {
    if let Some(bad) = f.variables().into_iter().find(|v| v != var) {
        return Err(NumericsError::Invalid(format!("f may only depend on {var}, found {bad}")));
    }
    let fp = f.differentiate(var);
    let fv = grid.sample(f, var)?;
    let fpv = grid.sample(&fp, var)?;
    let vm: Vec<f64> = fv.iter().zip(&fpv).map(|(a, b)| a * a - b).collect();
    let vp: Vec<f64> = fv.iter().zip(&fpv).map(|(a, b)| a * a + b).collect();
    let minus = solve_values(&vm, grid, k)?;
    let plus = solve_values(&vp, grid, k)?;
    let transformed_tolerance = 10.0 * minus.tolerance;
    let transformed = transform_states(&fv, &vp, &minus);
    let unbroken = transformed.first().is_some_and(|t| t.annihilated);
    let offset = usize::from(unbroken);
    let pairing: Vec<PairingRow> = (0..k.saturating_sub(offset))
        .map(|i| {
            let e_plus = plus.eigenvalues[i];
            let e_minus = minus.eigenvalues[i + offset];
            PairingRow {
                k: i,
                e_plus,
                e_minus,
                deviation: (e_plus - e_minus).abs(),
            }
        })
        .collect();
    let max_deviation = pairing.iter().fold(0.0f64, |m, r| m.max(r.deviation));
    Ok(PartnerReport {
        f: f.to_string(),
        minus,
        plus,
        unbroken,
        pairing,
        max_deviation,
        transformed,
        transformed_tolerance,
    })
}
