//! Symmetric tridiagonal eigenproblems: Sturm-sequence bisection for the
//! eigenvalues, inverse iteration for the vectors.

use serde::Serialize;

use super::{Grid1D, NumericsError};
use crate::field::ScalarField;
use crate::output::csv_row;

/// Relative residual target, multiplied by the Gershgorin width.
pub const SOLVER_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    /// `off[i]` couples rows `i` and `i + 1`.
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    /// `−∂² + V` with Dirichlet ends: diagonal `2/h² + V_i`, off-diagonal `−1/h²`.
    pub fn schrodinger(v: &[f64], h: f64) -> SymTridiagonal {
        let k = 1.0 / (h * h);
        SymTridiagonal {
            diag: v.iter().map(|vi| 2.0 * k + vi).collect(),
            off: vec![-k; v.len().saturating_sub(1)],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Gershgorin interval containing the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        let tiny = f64::MIN_POSITIVE.sqrt();
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.len() {
            let e2 = if i > 0 { self.off[i - 1] * self.off[i - 1] } else { 0.0 };
            q = self.diag[i] - x - if i > 0 { e2 / q } else { 0.0 };
            if q == 0.0 {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.off[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// Solves `(T − σ)y = b` by Gaussian elimination with partial pivoting.
    fn shifted_solve(&self, sigma: f64, b: &[f64]) -> Vec<f64> {
        let n = self.len();
        // rows hold three bands: (main, upper, second upper) after pivoting
        let mut dl: Vec<f64> = self.off.clone();
        let mut d: Vec<f64> = self.diag.iter().map(|v| v - sigma).collect();
        let mut du: Vec<f64> = self.off.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut x = b.to_vec();
        let eps = f64::EPSILON * (self.gershgorin().1 - self.gershgorin().0).abs().max(1.0);
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = eps;
                }
                let m = dl[i] / d[i];
                d[i + 1] -= m * du[i];
                x[i + 1] -= m * x[i];
                dl[i] = 0.0;
            } else {
                let m = d[i] / dl[i];
                d[i] = dl[i];
                let tmp = d[i + 1];
                d[i + 1] = du[i] - m * tmp;
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -m;
                }
                du[i] = tmp;
                x.swap(i, i + 1);
                x[i + 1] -= m * x[i];
            }
        }
        if d[n - 1] == 0.0 {
            d[n - 1] = eps;
        }
        x[n - 1] /= d[n - 1];
        if n > 1 {
            x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            x[i] = (x[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i];
        }
        x
    }

    /// Unit-norm eigenvector for an accurate eigenvalue `lambda`, made
    /// orthogonal to `previous`.
    pub fn eigenvector(&self, lambda: f64, previous: &[Vec<f64>]) -> Vec<f64> {
        let n = self.len();
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i as f64) * 0.7).sin()).collect();
        for _ in 0..4 {
            let mut y = self.shifted_solve(lambda, &x);
            for p in previous {
                let d: f64 = p.iter().zip(&y).map(|(a, b)| a * b).sum();
                for (yi, pi) in y.iter_mut().zip(p) {
                    *yi -= d * pi;
                }
            }
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            x = y.into_iter().map(|v| v / norm).collect();
        }
        x
    }
}

/// Lowest eigenpairs of a 1D Schrödinger operator on a grid.
#[derive(Debug, Clone, Serialize)]
pub struct Spectrum {
    pub grid: Grid1D,
    pub eigenvalues: Vec<f64>,
    /// Node values, normalised so that `h Σ ψ² = 1`.
    #[serde(skip)]
    pub eigenvectors: Vec<Vec<f64>>,
    /// `‖Hψ − Eψ‖∞` per pair.
    pub residuals: Vec<f64>,
    /// Accepted residual, `SOLVER_TOLERANCE` times the spectral width.
    pub tolerance: f64,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `index,eigenvalue,residual` with `%.17g` numbers.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,eigenvalue,residual\n");
        for (i, (e, r)) in self.eigenvalues.iter().zip(&self.residuals).enumerate() {
            s.push_str(&format!("{i},{}\n", csv_row(&[*e, *r])));
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spectrum serializes")
    }

    /// Eigenfunctions as `x,psi0,psi1,...` rows.
    pub fn eigenvectors_csv(&self) -> String {
        let mut s = String::from("x");
        for i in 0..self.len() {
            s.push_str(&format!(",psi{i}"));
        }
        s.push('\n');
        for (j, x) in self.grid.nodes().into_iter().enumerate() {
            let mut row = vec![x];
            row.extend(self.eigenvectors.iter().map(|v| v[j]));
            s.push_str(&csv_row(&row));
            s.push('\n');
        }
        s
    }
}

/// Lowest `k` eigenpairs of `−∂² + V` for node values `v`.
pub fn solve_values(v: &[f64], grid: &Grid1D, k: usize) -> Result<Spectrum, NumericsError> {
    if v.len() != grid.n {
        return Err(NumericsError::Invalid(format!(
            "{} potential values for {} nodes",
            v.len(),
            grid.n
        )));
    }
    if k > grid.n {
        return Err(NumericsError::Invalid(format!("k = {k} exceeds N = {}", grid.n)));
    }
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(NumericsError::SingularNode { x: grid.node(i) });
    }
    let h = grid.spacing();
    let t = SymTridiagonal::schrodinger(v, h);
    let (glo, ghi) = t.gershgorin();
    let tolerance = SOLVER_TOLERANCE * (ghi - glo);
    let mut eigenvalues: Vec<f64> = Vec::with_capacity(k);
    let mut unit: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    for idx in 0..k {
        let lambda = t.eigenvalue(idx);
        // only nearly degenerate predecessors need explicit orthogonalisation
        let close: Vec<Vec<f64>> = eigenvalues
            .iter()
            .zip(&unit)
            .filter(|(e, _)| (lambda - **e).abs() < 1e-6 * (ghi - glo))
            .map(|(_, u)| u.clone())
            .collect();
        let mut u = t.eigenvector(lambda, &close);
        let peak = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if let Some(first) = u.iter().find(|v| v.abs() > 1e-3 * peak) {
            if *first < 0.0 {
                u.iter_mut().for_each(|v| *v = -*v);
            }
        }
        let scale = 1.0 / h.sqrt();
        let psi: Vec<f64> = u.iter().map(|v| v * scale).collect();
        let tpsi = t.apply(&psi);
        let res = tpsi
            .iter()
            .zip(&psi)
            .fold(0.0f64, |m, (a, b)| m.max((a - lambda * b).abs()));
        eigenvalues.push(lambda);
        residuals.push(res);
        unit.push(u);
    }
    let eigenvectors = unit
        .into_iter()
        .map(|u| u.into_iter().map(|v| v / h.sqrt()).collect())
        .collect();
    Ok(Spectrum {
        grid: grid.clone(),
        eigenvalues,
        eigenvectors,
        residuals,
        tolerance,
    })
}

/// Lowest `k` eigenpairs of `−∂² + V` with Dirichlet ends.
pub fn solve_1d_eigen(v: &ScalarField, grid: &Grid1D, k: usize) -> Result<Spectrum, NumericsError> {
    if v.dim() != 1 {
        return Err(NumericsError::Invalid(format!("potential has dimension {}", v.dim())));
    }
    let values = grid
        .nodes()
        .into_iter()
        .map(|x| v.eval(&[x]).map_err(|_| NumericsError::SingularNode { x }))
        .collect::<Result<Vec<f64>, _>>()?;
    solve_values(&values, grid, k)
}
