//! Separating charts in the plane and in space.
//!
//! The planar chart uses `κ = |L|`, `η = L1/L2` and the displaced polar pair
//! `ρ = ln κ / c`, `ξ = atan η / c`. The spatial chart uses `β = r·c`,
//! `γ = r·(a×c) + ½[(r·c)² − c²r²]` and a ratio `η` of two components of `L`.

use serde::Serialize;

use crate::euclid::IntertwinerParams;
use crate::field::GUARD_BAND;
use crate::integrability::EtaVariant;
use crate::linalg;

/// Step for first derivatives.
pub const JACOBIAN_STEP: f64 = 1e-6;
/// Step for second derivatives.
pub const LAPLACIAN_STEP: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CoordError {
    #[error("point {point:?} lies on the singular locus {locus}")]
    Singular { point: Vec<f64>, locus: String },
    #[error("unsupported chart: {0}")]
    Unsupported(String),
}

fn singular(point: &[f64], locus: &str) -> CoordError {
    CoordError::Singular {
        point: point.to_vec(),
        locus: locus.to_string(),
    }
}

/// Central second difference of a one-dimensional slice.
fn d2(f: &dyn Fn(f64) -> f64, t: f64, h: f64) -> f64 {
    (f(t + h) - 2.0 * f(t) + f(t - h)) / (h * h)
}

fn d1(f: &dyn Fn(f64) -> f64, t: f64, h: f64) -> f64 {
    (f(t + h) - f(t - h)) / (2.0 * h)
}

/// Quadratic `p(η) = (Aη² + 2Bη + C)/D` with `L·∇η = p(η)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EtaPoly {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    /// `|c|`, the norm of the rotation vector
    pub norm: f64,
}

impl EtaPoly {
    /// Polynomial for `η = L_i/L_j` given the rotation vector `cv`.
    pub fn new(cv: [f64; 3], variant: EtaVariant) -> EtaPoly {
        let (i, j) = variant.pair();
        let c2 = cv.iter().map(|v| v * v).sum::<f64>();
        let d = match variant {
            EtaVariant::Eta => cv[2],
            EtaVariant::Eta2 => -cv[1],
            EtaVariant::Eta3 => cv[0],
        };
        EtaPoly {
            a: c2 - cv[j] * cv[j],
            b: cv[i] * cv[j],
            c: c2 - cv[i] * cv[i],
            d,
            norm: c2.sqrt(),
        }
    }

    pub fn eval(&self, eta: f64) -> f64 {
        (self.a * eta * eta + 2.0 * self.b * eta + self.c) / self.d
    }

    pub fn derivative(&self, eta: f64) -> f64 {
        2.0 * (self.a * eta + self.b) / self.d
    }

    /// `p` as an expression in `var`.
    pub fn expr(&self, var: &crate::expr::Expr) -> crate::expr::Expr {
        var.powi(2)
            .scale(self.a / self.d)
            .add(&var.scale(2.0 * self.b / self.d))
            .add(&crate::expr::Expr::constant(self.c / self.d))
    }

    /// `p′` as an expression in `var`.
    pub fn derivative_expr(&self, var: &crate::expr::Expr) -> crate::expr::Expr {
        var.scale(2.0 * self.a / self.d)
            .add(&crate::expr::Expr::constant(2.0 * self.b / self.d))
    }
}

/// Planar chart for `L = (a1 + c y, a2 − c x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Chart2D {
    pub a1: f64,
    pub a2: f64,
    pub c: f64,
    /// Branch used by the inverse map.
    pub branch: &'static str,
}

/// Image of a point under the planar chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coords2D {
    pub kappa: f64,
    pub eta: f64,
    pub rho: f64,
    pub xi: f64,
}

impl Chart2D {
    pub fn new(a1: f64, a2: f64, c: f64) -> Result<Chart2D, CoordError> {
        if c == 0.0 || !c.is_finite() {
            return Err(CoordError::Unsupported("c must be nonzero".into()));
        }
        Ok(Chart2D {
            a1,
            a2,
            c,
            branch: "L2 > 0, c·xi in (-pi/2, pi/2)",
        })
    }

    pub fn components(&self, x: f64, y: f64) -> (f64, f64) {
        (self.a1 + self.c * y, self.a2 - self.c * x)
    }

    pub fn forward(&self, x: f64, y: f64) -> Result<Coords2D, CoordError> {
        let (l1, l2) = self.components(x, y);
        if l2.abs() <= GUARD_BAND {
            return Err(singular(&[x, y], "a2 - c x = 0"));
        }
        let kappa = l1.hypot(l2);
        let eta = l1 / l2;
        Ok(Coords2D {
            kappa,
            eta,
            rho: kappa.ln() / self.c,
            xi: eta.atan() / self.c,
        })
    }

    /// `(ρ, ξ) → (x, y)` on the branch `L2 > 0`.
    pub fn inverse(&self, rho: f64, xi: f64) -> Result<(f64, f64), CoordError> {
        let t = self.c * xi;
        if t.abs() >= std::f64::consts::FRAC_PI_2 {
            return Err(CoordError::Unsupported(format!(
                "c·xi = {t} is outside the principal strip"
            )));
        }
        let kappa = (self.c * rho).exp();
        let x = (self.a2 - kappa * t.cos()) / self.c;
        let y = (kappa * t.sin() - self.a1) / self.c;
        Ok((x, y))
    }

    /// `e^{−2cρ}(∂ρ² + ∂ξ²)F` at `(ρ, ξ)`.
    pub fn laplacian_rho_xi(&self, f: &dyn Fn(f64, f64) -> f64, rho: f64, xi: f64) -> f64 {
        self.laplacian_rho_xi_step(f, rho, xi, LAPLACIAN_STEP)
    }

    pub fn laplacian_rho_xi_step(&self, f: &dyn Fn(f64, f64) -> f64, rho: f64, xi: f64, h: f64) -> f64 {
        let frr = d2(&|r| f(r, xi), rho, h);
        let fxx = d2(&|s| f(rho, s), xi, h);
        (-2.0 * self.c * rho).exp() * (frr + fxx)
    }

    /// `(c²/κ²)[(κ∂κ)² + ((1+η²)∂η)²]G` at `(κ, η)`.
    pub fn laplacian_kappa_eta(&self, g: &dyn Fn(f64, f64) -> f64, kappa: f64, eta: f64) -> f64 {
        let h = LAPLACIAN_STEP;
        let gk = d1(&|k| g(k, eta), kappa, h);
        let gkk = d2(&|k| g(k, eta), kappa, h);
        let ge = d1(&|e| g(kappa, e), eta, h);
        let gee = d2(&|e| g(kappa, e), eta, h);
        let w = 1.0 + eta * eta;
        // (κ∂κ)²G = κG' + κ²G''; ((1+η²)∂η)²G = w(2ηG' + wG'')
        let radial = kappa * gk + kappa * kappa * gkk;
        let angular = w * (2.0 * eta * ge + w * gee);
        self.c * self.c / (kappa * kappa) * (radial + angular)
    }

    /// `|∇η − (c/L2²)L|` relative to `|∇η|`, with `∇η` by central differences.
    pub fn eta_gradient_parallel(&self, x: f64, y: f64) -> Result<f64, CoordError> {
        let (l1, l2) = self.components(x, y);
        if l2.abs() <= GUARD_BAND {
            return Err(singular(&[x, y], "a2 - c x = 0"));
        }
        let eta = |x: f64, y: f64| {
            let (l1, l2) = self.components(x, y);
            l1 / l2
        };
        let h = JACOBIAN_STEP;
        let g = [d1(&|t| eta(t, y), x, h), d1(&|t| eta(x, t), y, h)];
        let k = self.c / (l2 * l2);
        let diff = [g[0] - k * l1, g[1] - k * l2];
        Ok(linalg::norm(&diff) / linalg::norm(&g).max(1e-300))
    }
}

/// Sine of the angle between `g` and `l`.
pub fn parallel_residual(g: &[f64], l: &[f64]) -> f64 {
    let gg = linalg::dot(g, g);
    let ll = linalg::dot(l, l);
    let gl = linalg::dot(g, l);
    ((gg * ll - gl * gl).max(0.0)).sqrt() / (gg * ll).sqrt().max(1e-300)
}

/// Angle residual between `∇(L_i/(r·a))` and `L`, any dimension.
pub fn alpha_gradient_parallel(p: &IntertwinerParams, i: usize, x: &[f64]) -> Result<f64, CoordError> {
    let alpha = |x: &[f64]| p.vector_field(x)[i] / linalg::dot(x, p.a());
    if linalg::dot(x, p.a()).abs() <= GUARD_BAND {
        return Err(singular(x, "r·a = 0"));
    }
    let h = JACOBIAN_STEP;
    let mut g = vec![0.0; x.len()];
    for (k, gk) in g.iter_mut().enumerate() {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[k] += h;
        xm[k] -= h;
        *gk = (alpha(&xp) - alpha(&xm)) / (2.0 * h);
    }
    Ok(parallel_residual(&g, &p.vector_field(x)))
}

/// Spatial chart `(x, y, z) → (β, γ, η)` with `η = L_i/L_j`.
#[derive(Debug, Clone, Serialize)]
pub struct Chart3D {
    pub a: [f64; 3],
    /// Rotation vector `(c23, c31, c12)`.
    pub c: [f64; 3],
    pub variant: EtaVariant,
    pub poly: EtaPoly,
    #[serde(skip)]
    params: IntertwinerParams,
}

/// Relative tolerance for `a·c = 0`.
pub const ORTHOGONALITY_TOL: f64 = 1e-12;

impl Chart3D {
    pub fn new(p: &IntertwinerParams, variant: EtaVariant) -> Result<Chart3D, CoordError> {
        let c = p
            .c_vector()
            .ok_or_else(|| CoordError::Unsupported(format!("need n = 3, got {}", p.n())))?;
        let a = [p.a()[0], p.a()[1], p.a()[2]];
        let ac = linalg::dot(&a, &c);
        if ac.abs() > ORTHOGONALITY_TOL * (1.0 + linalg::norm(&a) * linalg::norm(&c)) {
            return Err(CoordError::Unsupported(format!("a·c = {ac} must vanish")));
        }
        let k = variant.required_component();
        if c[k] == 0.0 {
            return Err(CoordError::Unsupported(format!(
                "variant {} needs c{} ≠ 0",
                variant.polynomial_name(),
                k + 1
            )));
        }
        Ok(Chart3D {
            a,
            c,
            variant,
            poly: EtaPoly::new(c, variant),
            params: p.clone(),
        })
    }

    pub fn params(&self) -> &IntertwinerParams {
        &self.params
    }

    pub fn c_norm_sq(&self) -> f64 {
        linalg::dot(&self.c, &self.c)
    }

    pub fn l_vector(&self, r: &[f64; 3]) -> [f64; 3] {
        let rc = linalg::cross(r, &self.c);
        [self.a[0] + rc[0], self.a[1] + rc[1], self.a[2] + rc[2]]
    }

    pub fn beta(&self, r: &[f64; 3]) -> f64 {
        linalg::dot(r, &self.c)
    }

    /// Expanded form `r·(a×c) + ½[(r·c)² − c²r²]`.
    pub fn gamma(&self, r: &[f64; 3]) -> f64 {
        let ac = linalg::cross(&self.a, &self.c);
        let rc = linalg::dot(r, &self.c);
        linalg::dot(r, &ac) + 0.5 * (rc * rc - self.c_norm_sq() * linalg::dot(r, r))
    }

    /// Compact form `½ r·[(a + L)×c]`.
    pub fn gamma_compact(&self, r: &[f64; 3]) -> f64 {
        let l = self.l_vector(r);
        let s = [self.a[0] + l[0], self.a[1] + l[1], self.a[2] + l[2]];
        0.5 * linalg::dot(r, &linalg::cross(&s, &self.c))
    }

    pub fn eta(&self, r: &[f64; 3]) -> Result<f64, CoordError> {
        let (i, j) = self.variant.pair();
        let l = self.l_vector(r);
        if l[j].abs() <= GUARD_BAND {
            return Err(singular(r, &format!("L{} = 0", j + 1)));
        }
        Ok(l[i] / l[j])
    }

    pub fn forward(&self, r: &[f64; 3]) -> Result<[f64; 3], CoordError> {
        Ok([self.beta(r), self.gamma(r), self.eta(r)?])
    }

    /// `L² = a² − 2γ`.
    pub fn l_squared(&self, gamma: f64) -> f64 {
        linalg::dot(&self.a, &self.a) - 2.0 * gamma
    }

    /// `(β, γ, η) → r` on the branch `L_j > 0`.
    pub fn inverse(&self, u: &[f64; 3]) -> Result<[f64; 3], CoordError> {
        let [beta, gamma, eta] = *u;
        let l2 = self.l_squared(gamma);
        if l2 <= GUARD_BAND {
            return Err(singular(u, "L² = a² − 2γ ≤ 0"));
        }
        let (i, j) = self.variant.pair();
        let k = 3 - i - j;
        let c = self.c;
        let mut d = [0.0; 3];
        d[i] = eta;
        d[j] = 1.0;
        d[k] = -(eta * c[i] + c[j]) / c[k];
        let s = l2.sqrt() / linalg::norm(&d);
        let lma = [
            s * d[0] - self.a[0],
            s * d[1] - self.a[1],
            s * d[2] - self.a[2],
        ];
        let cc = self.c_norm_sq();
        let t = linalg::cross(&c, &lma);
        Ok([
            (beta * c[0] + t[0]) / cc,
            (beta * c[1] + t[1]) / cc,
            (beta * c[2] + t[2]) / cc,
        ])
    }

    /// Analytic Jacobian determinant `∂(β,γ,η)/∂(x,y,z) = c²p(η)`.
    pub fn jacobian(&self, r: &[f64; 3]) -> Result<f64, CoordError> {
        let eta = self.eta(r)?;
        Ok(self.c_norm_sq() * self.poly.eval(eta))
    }

    /// Forward-map Jacobian matrix by central differences, rows `∇β, ∇γ, ∇η`.
    pub fn jacobian_matrix_fd(&self, r: &[f64; 3], h: f64) -> Result<[[f64; 3]; 3], CoordError> {
        let mut m = [[0.0; 3]; 3];
        for col in 0..3 {
            let mut rp = *r;
            let mut rm = *r;
            rp[col] += h;
            rm[col] -= h;
            let fp = self.forward(&rp)?;
            let fm = self.forward(&rm)?;
            for row in 0..3 {
                m[row][col] = (fp[row] - fm[row]) / (2.0 * h);
            }
        }
        Ok(m)
    }

    pub fn jacobian_fd(&self, r: &[f64; 3]) -> Result<f64, CoordError> {
        Ok(linalg::det3(&self.jacobian_matrix_fd(r, JACOBIAN_STEP)?))
    }

    /// Diagonal metric `(1/c², 1/(c²L²), L_j⁴/(c_ij² L²))`.
    pub fn metric(&self, r: &[f64; 3]) -> Result<[f64; 3], CoordError> {
        let (_, j) = self.variant.pair();
        let l = self.l_vector(r);
        let lsq = linalg::dot(&l, &l);
        if l[j].abs() <= GUARD_BAND || lsq <= GUARD_BAND {
            return Err(singular(r, &format!("L{} = 0", j + 1)));
        }
        let cc = self.c_norm_sq();
        let d = self.poly.d;
        Ok([1.0 / cc, 1.0 / (cc * lsq), l[j].powi(4) / (d * d * lsq)])
    }

    /// Pullback metric `∂r/∂u_a · ∂r/∂u_b` from the inverse map.
    pub fn pullback_metric(&self, r: &[f64; 3]) -> Result<[[f64; 3]; 3], CoordError> {
        let u = self.forward(r)?;
        let h = JACOBIAN_STEP;
        let mut cols = [[0.0; 3]; 3];
        for (a, col) in cols.iter_mut().enumerate() {
            let step = h * u[a].abs().max(1.0);
            let mut up = u;
            let mut um = u;
            up[a] += step;
            um[a] -= step;
            let rp = self.inverse(&up)?;
            let rm = self.inverse(&um)?;
            for k in 0..3 {
                col[k] = (rp[k] - rm[k]) / (2.0 * step);
            }
        }
        let mut g = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                g[a][b] = linalg::dot(&cols[a], &cols[b]);
            }
        }
        Ok(g)
    }

    /// `c²[∂β² + ∂γ(L²∂γ)]F + (p/L²)∂η(p∂η)F` at chart point `u`; `h` is the
    /// physical length of each difference step.
    pub fn laplacian(&self, f: &dyn Fn(f64, f64, f64) -> f64, u: &[f64; 3]) -> Result<f64, CoordError> {
        self.laplacian_step(f, u, LAPLACIAN_STEP)
    }

    pub fn laplacian_step(
        &self,
        f: &dyn Fn(f64, f64, f64) -> f64,
        u: &[f64; 3],
        h: f64,
    ) -> Result<f64, CoordError> {
        let [b, g, e] = *u;
        let lsq = self.l_squared(g);
        if lsq <= GUARD_BAND {
            return Err(singular(u, "L² = a² − 2γ ≤ 0"));
        }
        let p = self.poly.eval(e);
        // steps of equal physical length h along each coordinate line
        let cn = self.c_norm_sq().sqrt();
        let l = lsq.sqrt();
        let (hb, hg, he) = (h * cn, h * cn * l, h * (p.abs() / l).max(1e-3));
        let fbb = d2(&|t| f(t, g, e), b, hb);
        let fg = d1(&|t| f(b, t, e), g, hg);
        let fgg = d2(&|t| f(b, t, e), g, hg);
        let fe = d1(&|t| f(b, g, t), e, he);
        let fee = d2(&|t| f(b, g, t), e, he);
        let dp = self.poly.derivative(e);
        // ∂γ(L²∂γF) = L²F_γγ − 2F_γ since ∂γL² = −2
        Ok(self.c_norm_sq() * (fbb + lsq * fgg - 2.0 * fg) + p / lsq * (p * fee + dp * fe))
    }

    /// `|∇η − (c_ij/L_j²)L|` relative to `|∇η|`.
    pub fn eta_gradient_parallel(&self, r: &[f64; 3]) -> Result<f64, CoordError> {
        let (_, j) = self.variant.pair();
        let m = self.jacobian_matrix_fd(r, JACOBIAN_STEP)?;
        let l = self.l_vector(r);
        let k = self.poly.d / (l[j] * l[j]);
        let diff = [m[2][0] - k * l[0], m[2][1] - k * l[1], m[2][2] - k * l[2]];
        Ok(linalg::norm(&diff) / linalg::norm(&m[2]).max(1e-300))
    }

    /// `(L·∇)β`, `(L·∇)γ` and `(L·∇)η − p(η)` by central differences.
    pub fn transport_residuals(&self, r: &[f64; 3]) -> Result<[f64; 3], CoordError> {
        let m = self.jacobian_matrix_fd(r, JACOBIAN_STEP)?;
        let l = self.l_vector(r);
        let eta = self.eta(r)?;
        Ok([
            linalg::dot(&m[0], &l),
            linalg::dot(&m[1], &l),
            linalg::dot(&m[2], &l) - self.poly.eval(eta),
        ])
    }
}

#[cfg(test)]
mod tests;
