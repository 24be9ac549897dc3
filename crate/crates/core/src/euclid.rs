//! Intertwiner parameters and the Euclidean algebra e(n).
//!
//! The differential part of the intertwiner is `L·∇` with
//! `L_j = a_j + Σ_k c_jk x_k`, i.e. `Σ a_j T_j + Σ_{j<k} c_jk L_jk` in terms of
//! the translation generators `T_j = ∂_j` and rotation generators
//! `L_jk = x_k ∂_j − x_j ∂_k`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::expr::Expr;
use crate::field::{cartesian_names, FieldError, ScalarField};
use crate::poly::Poly;

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum ParamsError {
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("dimension mismatch: n = {n} but {what} has length {len}")]
    DimensionMismatch { n: usize, what: &'static str, len: usize },
    #[error("c is not antisymmetric: c[{j}][{k}] = {cjk} but c[{k}][{j}] = {ckj}")]
    NotAntisymmetric { j: usize, k: usize, cjk: f64, ckj: f64 },
    #[error("non-finite parameter value")]
    NonFinite,
}

/// Translation vector `a` and antisymmetric rotation matrix `c` of the
/// intertwiner. Indices are 0-based in the API.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct IntertwinerParams {
    n: usize,
    a: Vec<f64>,
    c: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    n: usize,
    a: Vec<f64>,
    c: Vec<Vec<f64>>,
}

impl TryFrom<RawParams> for IntertwinerParams {
    type Error = ParamsError;
    fn try_from(r: RawParams) -> Result<Self, ParamsError> {
        IntertwinerParams::new(r.n, r.a, r.c)
    }
}

impl From<IntertwinerParams> for RawParams {
    fn from(p: IntertwinerParams) -> RawParams {
        RawParams {
            n: p.n,
            a: p.a,
            c: p.c,
        }
    }
}

impl IntertwinerParams {
    /// Validates dimensions and exact antisymmetry of `c`.
    pub fn new(n: usize, a: Vec<f64>, c: Vec<Vec<f64>>) -> Result<Self, ParamsError> {
        if n == 0 {
            return Err(ParamsError::ZeroDimension);
        }
        if a.len() != n {
            return Err(ParamsError::DimensionMismatch {
                n,
                what: "a",
                len: a.len(),
            });
        }
        if c.len() != n {
            return Err(ParamsError::DimensionMismatch {
                n,
                what: "c",
                len: c.len(),
            });
        }
        for row in &c {
            if row.len() != n {
                return Err(ParamsError::DimensionMismatch {
                    n,
                    what: "a row of c",
                    len: row.len(),
                });
            }
        }
        if a.iter().chain(c.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(ParamsError::NonFinite);
        }
        for j in 0..n {
            for k in j..n {
                // exact check: inputs are literals
                if c[j][k] + c[k][j] != 0.0 {
                    return Err(ParamsError::NotAntisymmetric {
                        j,
                        k,
                        cjk: c[j][k],
                        ckj: c[k][j],
                    });
                }
            }
        }
        Ok(IntertwinerParams { n, a, c })
    }

    /// Builds the matrix from its upper triangle, `upper[(j,k)]` for `j<k`.
    pub fn from_upper(n: usize, a: Vec<f64>, upper: &[((usize, usize), f64)]) -> Result<Self, ParamsError> {
        let mut c = vec![vec![0.0; n]; n];
        for &((j, k), v) in upper {
            if j >= n || k >= n {
                return Err(ParamsError::DimensionMismatch {
                    n,
                    what: "c index",
                    len: j.max(k) + 1,
                });
            }
            // + 0.0 turns -0.0 into 0.0 so serialized output stays clean
            c[j][k] = v + 0.0;
            c[k][j] = -v + 0.0;
        }
        IntertwinerParams::new(n, a, c)
    }

    /// Plane case with `c12 = c`.
    pub fn two_d(a1: f64, a2: f64, c: f64) -> Self {
        IntertwinerParams::from_upper(2, vec![a1, a2], &[((0, 1), c)]).expect("valid 2D params")
    }

    /// Space case from the rotation vector: `(c1, c2, c3) = (c23, c31, c12)`,
    /// so that `L = a + r × c`.
    pub fn three_d(a: [f64; 3], cvec: [f64; 3]) -> Self {
        IntertwinerParams::from_upper(
            3,
            a.to_vec(),
            &[((0, 1), cvec[2]), ((0, 2), -cvec[1]), ((1, 2), cvec[0])],
        )
        .expect("valid 3D params")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn c(&self) -> &[Vec<f64>] {
        &self.c
    }

    pub fn c_at(&self, j: usize, k: usize) -> f64 {
        self.c[j][k]
    }

    /// `(c23, c31, c12)` for n = 3.
    pub fn c_vector(&self) -> Option<[f64; 3]> {
        (self.n == 3).then(|| [self.c[1][2], self.c[2][0], self.c[0][1]])
    }

    pub fn is_pure_translation(&self) -> bool {
        self.c.iter().flatten().all(|v| *v == 0.0)
    }

    /// `L_j(x) = a_j + Σ_k c_jk x_k`.
    pub fn vector_field(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|j| self.a[j] + (0..self.n).map(|k| self.c[j][k] * x[k]).sum::<f64>())
            .collect()
    }

    /// Component `L_j` as an expression in `x1..xn`.
    pub fn component_expr(&self, j: usize) -> Expr {
        let names = cartesian_names(self.n);
        let mut e = Expr::constant(self.a[j]);
        for (k, name) in names.iter().enumerate() {
            let ck = self.c[j][k];
            if ck != 0.0 {
                e = e.add(&Expr::var(name.as_str()).scale(ck));
            }
        }
        e
    }

    /// `L² = Σ L_j²` as an expression.
    pub fn length_squared_expr(&self) -> Expr {
        (0..self.n).fold(Expr::constant(0.0), |acc, j| {
            acc.add(&self.component_expr(j).powi(2))
        })
    }

    /// Components as exact polynomials.
    pub fn component_polys(&self) -> Vec<Poly> {
        (0..self.n)
            .map(|j| {
                let mut p = Poly::constant(self.n, self.a[j]);
                for k in 0..self.n {
                    p = p.add(&Poly::coordinate(self.n, k).scale(self.c[j][k]));
                }
                p
            })
            .collect()
    }

    /// `(L·∇φ)(x)`, with the exact gradient of `φ` when it has one.
    pub fn apply_ld(&self, phi: &ScalarField, x: &[f64], step: f64) -> Result<f64, FieldError> {
        phi.directional(&self.vector_field(x), x, step)
    }

    /// Random parameters with entries in [-1, 1].
    pub fn random<R: Rng>(n: usize, rng: &mut R) -> Self {
        let a = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut upper = Vec::new();
        for j in 0..n {
            for k in j + 1..n {
                upper.push(((j, k), rng.gen_range(-1.0..1.0)));
            }
        }
        IntertwinerParams::from_upper(n, a, &upper).expect("random params are valid")
    }
}

/// A generator of e(n) realised as a first-order differential operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    /// `T_j = ∂_j`
    T(usize),
    /// `L_jk = x_k ∂_j − x_j ∂_k`
    L(usize, usize),
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::T(j) => write!(f, "T{}", j + 1),
            Generator::L(j, k) => write!(f, "L{}{}", j + 1, k + 1),
        }
    }
}

impl Generator {
    pub fn apply(&self, p: &Poly) -> Poly {
        match *self {
            Generator::T(j) => p.derivative(j),
            Generator::L(j, k) => p
                .derivative(j)
                .mul_coordinate(k)
                .sub(&p.derivative(k).mul_coordinate(j)),
        }
    }

    /// All `n(n+1)/2` generators: translations then rotations with `j<k`.
    pub fn basis(n: usize) -> Vec<Generator> {
        let mut out: Vec<Generator> = (0..n).map(Generator::T).collect();
        for j in 0..n {
            for k in j + 1..n {
                out.push(Generator::L(j, k));
            }
        }
        out
    }
}

fn delta(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

/// Structure constants: `[A, B]` as a linear combination of generators.
pub fn commutator_rhs(a: Generator, b: Generator) -> Vec<(f64, Generator)> {
    use Generator::{L, T};
    match (a, b) {
        (T(_), T(_)) => vec![],
        (T(j), L(k, m)) => vec![(delta(j, m), T(k)), (-delta(j, k), T(m))],
        (L(..), T(_)) => commutator_rhs(b, a)
            .into_iter()
            .map(|(s, g)| (-s, g))
            .collect(),
        (L(j, k), L(l, m)) => vec![
            (delta(j, m), L(l, k)),
            (-delta(j, l), L(m, k)),
            (delta(k, l), L(m, j)),
            (-delta(k, m), L(l, j)),
        ],
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CommutatorEntry {
    pub a: String,
    pub b: String,
    pub max_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CommutatorReport {
    pub n: usize,
    pub entries: Vec<CommutatorEntry>,
    pub max_residual: f64,
    pub test_functions: usize,
    pub points_per_function: usize,
}

/// Checks every commutator of the e(n) basis against its structure constants
/// on random cubic polynomials, evaluated at random points in [-2, 2]^n.
pub fn commutator_table(n: usize, seed: u64) -> CommutatorReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let funcs: Vec<Poly> = (0..3).map(|_| Poly::random(n, 3, &mut rng)).collect();
    let points: Vec<Vec<f64>> = (0..5)
        .map(|_| (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect())
        .collect();
    let basis = Generator::basis(n);
    let mut entries = Vec::new();
    let mut worst = 0.0f64;
    for (i, &ga) in basis.iter().enumerate() {
        for &gb in &basis[i + 1..] {
            let mut res = 0.0f64;
            for f in &funcs {
                let lhs = ga.apply(&gb.apply(f)).sub(&gb.apply(&ga.apply(f)));
                let rhs = commutator_rhs(ga, gb)
                    .into_iter()
                    .fold(Poly::zero(n), |acc, (s, g)| acc.add(&g.apply(f).scale(s)));
                let diff = lhs.sub(&rhs);
                for p in &points {
                    res = res.max(diff.eval(p).abs());
                }
            }
            worst = worst.max(res);
            entries.push(CommutatorEntry {
                a: ga.to_string(),
                b: gb.to_string(),
                max_residual: res,
            });
        }
    }
    CommutatorReport {
        n,
        entries,
        max_residual: worst,
        test_functions: funcs.len(),
        points_per_function: points.len(),
    }
}

/// `[∇², v·∇]φ` for a polynomial vector field `v`, computed exactly.
/// Returns the largest coefficient of the resulting polynomial.
pub fn laplacian_commutator(field: &[Poly], phi: &Poly) -> f64 {
    let apply = |f: &Poly| -> Poly {
        field
            .iter()
            .enumerate()
            .fold(Poly::zero(phi.nvars()), |acc, (j, vj)| {
                acc.add(&vj.mul(&f.derivative(j)))
            })
    };
    apply(phi)
        .laplacian()
        .sub(&apply(&phi.laplacian()))
        .max_abs_coeff()
}

/// `[∇², L_d]φ` for the intertwiner's vector field; vanishes identically.
pub fn laplacian_commutes(p: &IntertwinerParams, phi: &Poly) -> f64 {
    laplacian_commutator(&p.component_polys(), phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn make_params_examples() {
        assert!(IntertwinerParams::new(2, vec![1.0, 0.0], vec![vec![0.0, 1.0], vec![-1.0, 0.0]]).is_ok());
        let bad = IntertwinerParams::new(
            3,
            vec![0.0; 3],
            vec![vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0; 3]],
        );
        assert!(matches!(bad, Err(ParamsError::NotAntisymmetric { j: 0, k: 1, .. })));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p5 = IntertwinerParams::random(5, &mut rng);
        assert!(IntertwinerParams::new(5, vec![0.0; 5], p5.c().to_vec()).is_ok());
        assert!(matches!(
            IntertwinerParams::new(2, vec![1.0], vec![vec![0.0; 2]; 2]),
            Err(ParamsError::DimensionMismatch { .. })
        ));
        let diag = IntertwinerParams::new(2, vec![0.0; 2], vec![vec![1.0, 0.0], vec![0.0, 0.0]]);
        assert!(diag.is_err());
    }

    #[test]
    fn vector_field_examples() {
        let (a1, a2, c) = (0.3, -1.2, 0.7);
        let p = IntertwinerParams::two_d(a1, a2, c);
        let (x, y) = (1.5, -0.4);
        assert_eq!(p.vector_field(&[x, y]), vec![a1 + c * y, a2 - c * x]);

        let q = IntertwinerParams::three_d([0.0; 3], [0.0, 0.0, 1.0]);
        assert_eq!(q.vector_field(&[1.0, 0.0, 0.0]), vec![0.0, -1.0, 0.0]);

        let t = IntertwinerParams::new(3, vec![1.0, 2.0, 3.0], vec![vec![0.0; 3]; 3]).unwrap();
        assert_eq!(t.vector_field(&[5.0, -1.0, 9.0]), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn three_d_field_is_a_plus_r_cross_c() {
        let a = [0.2, -0.5, 1.1];
        let cv = [0.4, 1.3, -0.7];
        let p = IntertwinerParams::three_d(a, cv);
        assert_eq!(p.c_vector(), Some(cv));
        let r = [0.9, -1.7, 0.25];
        let rc = crate::linalg::cross(&r, &cv);
        let l = p.vector_field(&r);
        for j in 0..3 {
            assert!((l[j] - (a[j] + rc[j])).abs() < 1e-15);
        }
    }

    #[test]
    fn apply_ld_examples() {
        let p = IntertwinerParams::two_d(0.4, 1.0, 1.3);
        let x1 = ScalarField::from_expr(&parse("x1", &["x1", "x2"]).unwrap(), &["x1", "x2"]).unwrap();
        let pt = [0.3, -0.8];
        assert_eq!(p.apply_ld(&x1, &pt, 1e-5).unwrap(), p.vector_field(&pt)[0]);

        // κ² is invariant along L
        let kappa2 = p.length_squared_expr();
        let f = ScalarField::from_expr(&kappa2, &["x1", "x2"]).unwrap();
        assert!(p.apply_ld(&f, &pt, 1e-5).unwrap().abs() < 1e-14);

        // β = r·c is invariant along L in 3D
        let q = IntertwinerParams::three_d([1.0, -1.0, 0.0], [1.0, 1.0, 2.0]);
        let beta = parse("x1 + x2 + 2*x3", &["x1", "x2", "x3"]).unwrap();
        let bf = ScalarField::from_expr(&beta, &["x1", "x2", "x3"]).unwrap();
        assert!(q.apply_ld(&bf, &[0.3, 0.1, -2.0], 1e-5).unwrap().abs() < 1e-14);

        // finite-difference path agrees with the exact hook
        let plain = ScalarField::new(2, |x| Ok(x[0] * x[0] * x[1]));
        let exact = 2.0 * pt[0] * pt[1] * p.vector_field(&pt)[0] + pt[0] * pt[0] * p.vector_field(&pt)[1];
        assert!((p.apply_ld(&plain, &pt, 1e-3).unwrap() - exact).abs() < 1e-10);
    }

    #[test]
    fn derivative_of_components_is_transposed_c() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 2..=5 {
            let p = IntertwinerParams::random(n, &mut rng);
            let names = cartesian_names(n);
            for k in 0..n {
                let lk = p.component_expr(k);
                for (j, name) in names.iter().enumerate() {
                    assert_eq!(lk.differentiate(name).as_const(), Some(p.c_at(k, j)));
                }
            }
        }
    }

    #[test]
    fn translation_rotation_commutators() {
        // [T1, L12] f = −∂2 f
        let rhs = commutator_rhs(Generator::T(0), Generator::L(0, 1));
        let nonzero: Vec<_> = rhs.into_iter().filter(|(s, _)| *s != 0.0).collect();
        assert_eq!(nonzero, vec![(-1.0, Generator::T(1))]);
        assert!(commutator_rhs(Generator::T(0), Generator::T(1)).is_empty());
    }

    #[test]
    fn commutator_table_small() {
        for n in 1..=5 {
            let r = commutator_table(n, 42);
            assert_eq!(r.entries.len(), {
                let g = n * (n + 1) / 2;
                g * (g - 1) / 2
            });
            assert!(r.max_residual <= 1e-10, "n={n}: {}", r.max_residual);
        }
    }

    #[test]
    fn laplacian_commutes_examples() {
        let phi = Poly::monomial(1.0, &[2, 1]);
        let p = IntertwinerParams::two_d(0.5, -2.0, 1.5);
        assert_eq!(laplacian_commutes(&p, &phi), 0.0);
        let t = IntertwinerParams::two_d(0.5, -2.0, 0.0);
        assert_eq!(laplacian_commutes(&t, &phi), 0.0);

        // L1 += x1² breaks the commutation
        let mut field = p.component_polys();
        field[0] = field[0].add(&Poly::monomial(1.0, &[2, 0]));
        assert!(laplacian_commutator(&field, &phi) > 0.1);
    }

    #[test]
    fn params_json_round_trip() {
        let p = IntertwinerParams::three_d([1.0, 0.0, 0.0], [0.0, 0.0, 1.0]);
        let s = serde_json::to_string(&p).unwrap();
        let back: IntertwinerParams = serde_json::from_str(&s).unwrap();
        assert_eq!(p, back);
        let bad = r#"{"n":2,"a":[0,0],"c":[[0,1],[1,0]]}"#;
        assert!(serde_json::from_str::<IntertwinerParams>(bad).is_err());
    }
}
