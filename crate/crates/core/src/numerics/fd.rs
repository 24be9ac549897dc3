//! Tensor-grid finite differences for the intertwining, symmetry and ladder
//! relations. Every operator leaves `NaN` where its stencil leaves the box, so
//! composed operators automatically shrink the valid interior.

use serde::Serialize;

use super::NumericsError;
use crate::potentials::PotentialPair;

/// Uniform tensor grid over `[lo, hi]` with `cells` intervals per axis.
#[derive(Debug, Clone, Serialize)]
pub struct BoxGrid {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub cells: usize,
}

impl BoxGrid {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, cells: usize) -> Result<BoxGrid, NumericsError> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(NumericsError::Invalid("box corners differ in dimension".into()));
        }
        if cells < 2 || lo.iter().zip(&hi).any(|(a, b)| b <= a) {
            return Err(NumericsError::Invalid("empty box or fewer than 2 cells".into()));
        }
        Ok(BoxGrid { lo, hi, cells })
    }

    /// Cube of half-width `w` around `center`.
    pub fn cube(center: &[f64], w: f64, cells: usize) -> Result<BoxGrid, NumericsError> {
        BoxGrid::new(
            center.iter().map(|c| c - w).collect(),
            center.iter().map(|c| c + w).collect(),
            cells,
        )
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.cells + 1
    }

    pub fn len(&self) -> usize {
        self.nodes_per_axis().pow(self.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self, k: usize) -> f64 {
        (self.hi[k] - self.lo[k]) / self.cells as f64
    }

    fn stride(&self, k: usize) -> usize {
        self.nodes_per_axis().pow(k as u32)
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let m = self.nodes_per_axis();
        (0..self.dim())
            .map(|_| {
                let i = flat % m;
                flat /= m;
                i
            })
            .collect()
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().enumerate().map(|(k, i)| i * self.stride(k)).sum()
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(k, i)| self.lo[k] + *i as f64 * self.spacing(k))
            .collect()
    }

    pub fn sample<E>(&self, f: impl Fn(&[f64]) -> Result<f64, E>) -> Result<Vec<f64>, E> {
        (0..self.len()).map(|i| f(&self.point(i))).collect()
    }

    /// Central first difference along axis `k`.
    pub fn partial(&self, u: &[f64], k: usize) -> Vec<f64> {
        let s = self.stride(k);
        let m = self.nodes_per_axis();
        let inv = 0.5 / self.spacing(k);
        (0..self.len())
            .map(|i| {
                let ik = (i / s) % m;
                if ik == 0 || ik + 1 == m {
                    f64::NAN
                } else {
                    (u[i + s] - u[i - s]) * inv
                }
            })
            .collect()
    }

    /// Standard `(2n+1)`-point Laplacian.
    pub fn laplacian(&self, u: &[f64]) -> Vec<f64> {
        let m = self.nodes_per_axis();
        let mut out = vec![0.0; self.len()];
        for k in 0..self.dim() {
            let s = self.stride(k);
            let inv = 1.0 / (self.spacing(k) * self.spacing(k));
            for (i, o) in out.iter_mut().enumerate() {
                let ik = (i / s) % m;
                if ik == 0 || ik + 1 == m {
                    *o = f64::NAN;
                } else {
                    *o += (u[i + s] - 2.0 * u[i] + u[i - s]) * inv;
                }
            }
        }
        out
    }
}

/// A pair sampled on a grid: `V0`, `V1`, `L0` and the components of `L`.
pub struct GridOperators {
    pub grid: BoxGrid,
    pub v0: Vec<f64>,
    pub v1: Vec<f64>,
    pub l0: Vec<f64>,
    pub lvec: Vec<Vec<f64>>,
}

impl GridOperators {
    pub fn new(pair: &PotentialPair, grid: &BoxGrid) -> Result<GridOperators, NumericsError> {
        if grid.dim() != pair.n() {
            return Err(NumericsError::Invalid(format!(
                "grid dimension {} but pair dimension {}",
                grid.dim(),
                pair.n()
            )));
        }
        let sing = |e: crate::field::FieldError| NumericsError::SingularRegion(e.to_string());
        let v0 = grid.sample(|x| pair.v0.eval(x)).map_err(sing)?;
        let v1 = grid.sample(|x| pair.v1.eval(x)).map_err(sing)?;
        let l0 = grid.sample(|x| pair.l0.eval(x)).map_err(sing)?;
        let mut lvec = vec![vec![0.0; grid.len()]; grid.dim()];
        for i in 0..grid.len() {
            for (k, l) in pair.l_vector(&grid.point(i)).into_iter().enumerate() {
                lvec[k][i] = l;
            }
        }
        Ok(GridOperators {
            grid: grid.clone(),
            v0,
            v1,
            l0,
            lvec,
        })
    }

    fn hamiltonian(&self, v: &[f64], u: &[f64]) -> Vec<f64> {
        let lap = self.grid.laplacian(u);
        lap.iter().zip(v).zip(u).map(|((l, v), u)| -l + v * u).collect()
    }

    pub fn h0(&self, u: &[f64]) -> Vec<f64> {
        self.hamiltonian(&self.v0, u)
    }

    pub fn h1(&self, u: &[f64]) -> Vec<f64> {
        self.hamiltonian(&self.v1, u)
    }

    /// `L·∇u`.
    pub fn transport(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        for (k, lk) in self.lvec.iter().enumerate() {
            let d = self.grid.partial(u, k);
            for i in 0..u.len() {
                out[i] += lk[i] * d[i];
            }
        }
        out
    }

    /// `Lu = L0 u + L·∇u`.
    pub fn l(&self, u: &[f64]) -> Vec<f64> {
        let t = self.transport(u);
        (0..u.len()).map(|i| self.l0[i] * u[i] + t[i]).collect()
    }

    /// `L†u = L0 u − L·∇u`; the divergence of `L` vanishes.
    pub fn l_dagger(&self, u: &[f64]) -> Vec<f64> {
        let t = self.transport(u);
        (0..u.len()).map(|i| self.l0[i] * u[i] - t[i]).collect()
    }
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Normalised gaussian-shaped test function `exp(−|x − center|²/(2σ²))`.
pub fn gaussian(center: &[f64], sigma: f64) -> impl Fn(&[f64]) -> f64 + '_ {
    move |x| {
        let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
        (-0.5 * r2 / (sigma * sigma)).exp()
    }
}

/// `(LH0 − H1L)ψ` on the grid.
pub fn intertwining_field(ops: &GridOperators, psi: &[f64]) -> Vec<f64> {
    sub(&ops.l(&ops.h0(psi)), &ops.h1(&ops.l(psi)))
}

/// `[H0, L†L]ψ` and `[LL†, H1]ψ` on the grid.
pub fn symmetry_fields(ops: &GridOperators, psi: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let ldl = |u: &[f64]| ops.l_dagger(&ops.l(u));
    let lld = |u: &[f64]| ops.l(&ops.l_dagger(u));
    let a = sub(&ops.h0(&ldl(psi)), &ldl(&ops.h0(psi)));
    let b = sub(&lld(&ops.h1(psi)), &ops.h1(&lld(psi)));
    (a, b)
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().filter(|x| x.is_finite()).fold(0.0, |m, x| m.max(x.abs()))
}

/// `‖(LH0 − H1L)ψ‖∞` over the valid interior of a cube of half-width `w`.
pub fn intertwining_residual(
    pair: &PotentialPair,
    psi: &dyn Fn(&[f64]) -> f64,
    center: &[f64],
    w: f64,
    cells: usize,
) -> Result<f64, NumericsError> {
    let grid = BoxGrid::cube(center, w, cells)?;
    let ops = GridOperators::new(pair, &grid)?;
    let u = grid.sample(|x| Ok::<_, NumericsError>(psi(x)))?;
    Ok(sup_norm(&intertwining_field(&ops, &u)))
}

/// Both symmetry commutator norms over a cube.
pub fn symmetry_residual(
    pair: &PotentialPair,
    psi: &dyn Fn(&[f64]) -> f64,
    center: &[f64],
    w: f64,
    cells: usize,
) -> Result<(f64, f64), NumericsError> {
    let grid = BoxGrid::cube(center, w, cells)?;
    let ops = GridOperators::new(pair, &grid)?;
    let u = grid.sample(|x| Ok::<_, NumericsError>(psi(x)))?;
    let (a, b) = symmetry_fields(&ops, &u);
    Ok((sup_norm(&a), sup_norm(&b)))
}

/// Residual norms at successive refinements, measured on the nodes of the
/// coarsest grid so that every level is compared at the same points.
#[derive(Debug, Clone, Serialize)]
pub struct Convergence {
    pub cells: Vec<usize>,
    pub spacing: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Least-squares slope of `log r` against `log h`.
    pub order: f64,
}

impl Convergence {
    pub fn passes(&self, min_order: f64) -> bool {
        self.order.is_finite() && self.order >= min_order
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn fitted_order(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Runs `field` on grids with `cells[0] · 2^k` intervals and fits the order.
/// Each entry of `cells` must be a multiple of the first.
pub fn convergence_study(
    lo: &[f64],
    hi: &[f64],
    cells: &[usize],
    field: &dyn Fn(&BoxGrid) -> Result<Vec<f64>, NumericsError>,
) -> Result<Convergence, NumericsError> {
    let coarse = BoxGrid::new(lo.to_vec(), hi.to_vec(), cells[0])?;
    let base = field(&coarse)?;
    let common: Vec<Vec<usize>> = (0..coarse.len())
        .filter(|i| base[*i].is_finite())
        .map(|i| coarse.multi_index(i))
        .collect();
    if common.is_empty() {
        return Err(NumericsError::Invalid("coarsest grid has no valid interior".into()));
    }
    let mut residuals = Vec::new();
    let mut spacing = Vec::new();
    for &n in cells {
        if n % cells[0] != 0 {
            return Err(NumericsError::Invalid(format!("{n} is not a multiple of {}", cells[0])));
        }
        let s = n / cells[0];
        let grid = BoxGrid::new(lo.to_vec(), hi.to_vec(), n)?;
        let r = if n == cells[0] { base.clone() } else { field(&grid)? };
        let norm = common
            .iter()
            .map(|j| {
                let idx: Vec<usize> = j.iter().map(|v| v * s).collect();
                r[grid.flat_index(&idx)]
            })
            .filter(|v| v.is_finite())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        residuals.push(norm);
        spacing.push(grid.spacing(0));
    }
    let order = fitted_order(&spacing, &residuals);
    Ok(Convergence {
        cells: cells.to_vec(),
        spacing,
        residuals,
        order,
    })
}

/// Convergence of `‖(LH0 − H1L)ψ‖∞` for a gaussian `ψ` on a cube.
pub fn intertwining_convergence(
    pair: &PotentialPair,
    center: &[f64],
    sigma: f64,
    w: f64,
    cells: &[usize],
) -> Result<Convergence, NumericsError> {
    let lo: Vec<f64> = center.iter().map(|c| c - w).collect();
    let hi: Vec<f64> = center.iter().map(|c| c + w).collect();
    let psi = gaussian(center, sigma);
    convergence_study(&lo, &hi, cells, &|g| {
        let ops = GridOperators::new(pair, g)?;
        let u = g.sample(|x| Ok::<_, NumericsError>(psi(x)))?;
        Ok(intertwining_field(&ops, &u))
    })
}

/// Convergence of the two symmetry commutators (reported as their maximum).
pub fn symmetry_convergence(
    pair: &PotentialPair,
    center: &[f64],
    sigma: f64,
    w: f64,
    cells: &[usize],
) -> Result<Convergence, NumericsError> {
    let lo: Vec<f64> = center.iter().map(|c| c - w).collect();
    let hi: Vec<f64> = center.iter().map(|c| c + w).collect();
    let psi = gaussian(center, sigma);
    convergence_study(&lo, &hi, cells, &|g| {
        let ops = GridOperators::new(pair, g)?;
        let u = g.sample(|x| Ok::<_, NumericsError>(psi(x)))?;
        let (a, b) = symmetry_fields(&ops, &u);
        Ok(a
            .iter()
            .zip(&b)
            .map(|(x, y)| if x.is_finite() && y.is_finite() { x.abs().max(y.abs()) } else { f64::NAN })
            .collect())
    })
}

/// `L†L ψ − [(L0² − L·∇L0)ψ − (L·∇)²ψ]`; vanishes up to FD error.
pub fn ldl_closed_form_field(ops: &GridOperators, psi: &[f64]) -> Vec<f64> {
    let lhs = ops.l_dagger(&ops.l(psi));
    let dl0 = ops.transport(&ops.l0);
    let dd = ops.transport(&ops.transport(psi));
    (0..psi.len())
        .map(|i| lhs[i] - ((ops.l0[i] * ops.l0[i] - dl0[i]) * psi[i] - dd[i]))
        .collect()
}

/// `LL†ψ − [(L0² + L·∇L0)ψ − (L·∇)²ψ]`.
pub fn lld_closed_form_field(ops: &GridOperators, psi: &[f64]) -> Vec<f64> {
    let lhs = ops.l(&ops.l_dagger(psi));
    let dl0 = ops.transport(&ops.l0);
    let dd = ops.transport(&ops.transport(psi));
    (0..psi.len())
        .map(|i| lhs[i] - ((ops.l0[i] * ops.l0[i] + dl0[i]) * psi[i] - dd[i]))
        .collect()
}

/// Residuals of the ladder relations for a constant-shift pair.
#[derive(Debug, Clone, Serialize)]
pub struct LadderReport {
    /// `‖[H0, L]ψ + p0 Lψ‖∞`
    pub lowering: f64,
    /// `‖[H0, L†]ψ − p0 L†ψ‖∞`
    pub raising: f64,
    /// `‖([L, L†] − p0 a²)ψ‖∞`
    pub commutator: f64,
    pub spacing: f64,
}

impl LadderReport {
    pub fn max(&self) -> f64 {
        self.lowering.max(self.raising).max(self.commutator)
    }
}

/// Ladder relations of the constant-shift family on a cube of half-width `w`
/// around the origin, gaussian `ψ` of width `sigma`.
pub fn ladder_check(
    a: &[f64],
    p0: f64,
    b: &[f64],
    g: &crate::expr::Expr,
    sigma: f64,
    w: f64,
    cells: usize,
) -> Result<LadderReport, NumericsError> {
    let pair = crate::potentials::build_constant_shift(a, p0, b, g)
        .map_err(|e| NumericsError::Invalid(e.to_string()))?;
    let center = vec![0.0; a.len()];
    let grid = BoxGrid::cube(&center, w, cells)?;
    let ops = GridOperators::new(&pair, &grid)?;
    let psi_fn = gaussian(&center, sigma);
    let psi = grid.sample(|x| Ok::<_, NumericsError>(psi_fn(x)))?;
    let a2: f64 = a.iter().map(|v| v * v).sum();
    let lpsi = ops.l(&psi);
    let dpsi = ops.l_dagger(&psi);
    let lower: Vec<f64> = sub(&ops.h0(&lpsi), &ops.l(&ops.h0(&psi)))
        .iter()
        .zip(&lpsi)
        .map(|(c, l)| c + p0 * l)
        .collect();
    let raise: Vec<f64> = sub(&ops.h0(&dpsi), &ops.l_dagger(&ops.h0(&psi)))
        .iter()
        .zip(&dpsi)
        .map(|(c, l)| c - p0 * l)
        .collect();
    let comm: Vec<f64> = sub(&ops.l(&dpsi), &ops.l_dagger(&lpsi))
        .iter()
        .zip(&psi)
        .map(|(c, p)| c - p0 * a2 * p)
        .collect();
    Ok(LadderReport {
        lowering: sup_norm(&lower),
        raising: sup_norm(&raise),
        commutator: sup_norm(&comm),
        spacing: grid.spacing(0),
    })
}

/// `[L, L†]ψ − p0 a² ψ` with exact polynomial derivatives.
pub fn ladder_commutator_exact(a: &[f64], p0: f64, b: &[f64], psi: &crate::poly::Poly) -> f64 {
    use crate::poly::Poly;
    let n = a.len();
    let ab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let mut l0 = Poly::constant(n, ab);
    for (k, ak) in a.iter().enumerate() {
        l0 = l0.add(&Poly::coordinate(n, k).scale(0.5 * p0 * ak));
    }
    let d = |u: &Poly| {
        (0..n).fold(Poly::zero(n), |acc, k| acc.add(&u.derivative(k).scale(a[k])))
    };
    let l = |u: &Poly| l0.mul(u).add(&d(u));
    let ld = |u: &Poly| l0.mul(u).sub(&d(u));
    let a2: f64 = a.iter().map(|v| v * v).sum();
    let r = l(&ld(psi)).sub(&ld(&l(psi))).sub(&psi.scale(p0 * a2));
    r.max_abs_coeff()
}
