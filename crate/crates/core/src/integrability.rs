//! Frobenius integrability conditions for the intertwiner coefficients.
//!
//! Integrability of `2∂_j L0 = P L_j` requires `L_j c_kl + L_k c_lj + L_l c_jk = 0`
//! identically in `x`. Splitting into the constant part and the part linear in
//! `x` gives `a_[j c_kl] = 0` and `c_m[j c_kl] = 0`; the latter is the set of
//! 4×4 Pfaffians of `c`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::euclid::IntertwinerParams;
use crate::field::{FieldError, ScalarField};
use crate::linalg;

/// Scalar constraints count as satisfied when `|value|` is at most this.
pub const CONSTRAINT_TOL: f64 = 1e-12;
/// Relative tolerance for numeric rank decisions.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct ConstraintValue {
    pub value: f64,
    pub satisfied: bool,
}

impl ConstraintValue {
    fn new(value: f64) -> Self {
        ConstraintValue {
            value,
            satisfied: value.abs() <= CONSTRAINT_TOL,
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ConstraintReport {
    pub n: usize,
    pub constraints: BTreeMap<String, ConstraintValue>,
    pub all_satisfied: bool,
    /// Parameter count left after the constraints, as counted in the analysis.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub free_parameters: Option<usize>,
    /// Rank of the 4×4 matrix of `c_(j)` rows (n = 4 only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    /// Dimension of the solution set near the given point, from the rank of
    /// the constraint Jacobian.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub local_dimension: Option<usize>,
    pub notes: Vec<String>,
}

impl ConstraintReport {
    fn new(n: usize) -> Self {
        ConstraintReport {
            n,
            constraints: BTreeMap::new(),
            all_satisfied: true,
            free_parameters: None,
            rank: None,
            local_dimension: None,
            notes: Vec::new(),
        }
    }

    fn push(&mut self, id: String, value: f64) {
        let v = ConstraintValue::new(value);
        self.all_satisfied &= v.satisfied;
        self.constraints.insert(id, v);
    }

    pub fn failed(&self) -> Vec<&str> {
        self.constraints
            .iter()
            .filter(|(_, v)| !v.satisfied)
            .map(|(k, _)| k.as_str())
            .collect()
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum IntegrabilityError {
    #[error("operation requires n = {expected}, got n = {got}")]
    WrongDimension { expected: usize, got: usize },
    #[error("c violates the quadratic condition (value {value:e}); run check_n4 for details")]
    QuadraticViolated { value: f64 },
    #[error("the n = 5 analysis covers a = 0 only; nonzero translations are unsupported")]
    TranslationsUnsupported,
    #[error("preset row must be in 1..=10, got {0}")]
    InvalidRow(usize),
}

/// `a_j c_kl + a_k c_lj + a_l c_jk`.
pub fn translation_triple(p: &IntertwinerParams, j: usize, k: usize, l: usize) -> f64 {
    let (a, c) = (p.a(), p.c());
    a[j] * c[k][l] + a[k] * c[l][j] + a[l] * c[j][k]
}

/// `c_mj c_kl + c_mk c_lj + c_ml c_jk`, the coefficient of `x_m`.
pub fn rotation_triple(c: &[Vec<f64>], m: usize, j: usize, k: usize, l: usize) -> f64 {
    c[m][j] * c[k][l] + c[m][k] * c[l][j] + c[m][l] * c[j][k]
}

/// Pfaffian of the 4×4 principal submatrix on indices `i<j<k<l`.
pub fn pfaffian4(c: &[Vec<f64>], i: usize, j: usize, k: usize, l: usize) -> f64 {
    c[i][j] * c[k][l] - c[i][k] * c[j][l] + c[i][l] * c[j][k]
}

fn triples(n: usize) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for j in 0..n {
        for k in j + 1..n {
            for l in k + 1..n {
                out.push((j, k, l));
            }
        }
    }
    out
}

fn quads(n: usize) -> Vec<[usize; 4]> {
    let mut out = Vec::new();
    for t in triples(n) {
        for m in t.2 + 1..n {
            out.push([t.0, t.1, t.2, m]);
        }
    }
    out
}

/// Pointwise value of `L_j c_kl + L_k c_lj + L_l c_jk` (must vanish identically).
pub fn linear_dependence_residual(p: &IntertwinerParams, x: &[f64]) -> f64 {
    let l = p.vector_field(x);
    let c = p.c();
    triples(p.n())
        .into_iter()
        .map(|(j, k, m)| (l[j] * c[k][m] + l[k] * c[m][j] + l[m] * c[j][k]).abs())
        .fold(0.0, f64::max)
}

/// Evaluates the coefficient identities for any `n`.
///
/// One constraint per index triple (translations) and one per 4-subset
/// (rotations, the Pfaffians; all `c_m[j c_kl]` with `m` outside the triple
/// reduce to these up to sign).
pub fn check_pfaffian_conditions(p: &IntertwinerParams) -> ConstraintReport {
    let n = p.n();
    let mut r = ConstraintReport::new(n);
    if n < 3 {
        r.notes
            .push("Γ∧dΓ is a 3-form and vanishes identically for n < 3; no conditions".into());
        r.free_parameters = Some(n + n * (n - 1) / 2);
        return r;
    }
    for (j, k, l) in triples(n) {
        r.push(
            format!("a[{},{},{}]", j + 1, k + 1, l + 1),
            translation_triple(p, j, k, l),
        );
    }
    for q in quads(n) {
        r.push(
            format!("c[{},{},{},{}]", q[0] + 1, q[1] + 1, q[2] + 1, q[3] + 1),
            pfaffian4(p.c(), q[0], q[1], q[2], q[3]),
        );
    }
    if n == 3 {
        r.notes.push("n = 3: the single condition is a·c = 0".into());
        r.free_parameters = Some(5);
    }
    r
}

/// The vectors `c_(1..4)` whose dot products with `a` are the n = 4
/// translation conditions.
pub fn n4_vectors(c: &[Vec<f64>]) -> [[f64; 4]; 4] {
    let g = |j: usize, k: usize| c[j - 1][k - 1];
    [
        [0.0, g(3, 4), -g(2, 4), g(2, 3)],
        [g(3, 4), 0.0, g(4, 1), -g(3, 1)],
        [g(2, 4), g(4, 1), 0.0, g(1, 2)],
        [g(2, 3), g(3, 1), g(1, 2), 0.0],
    ]
}

/// `c12 c34 + c13 c42 + c14 c23`.
pub fn n4_quadratic(c: &[Vec<f64>]) -> f64 {
    c[0][1] * c[2][3] + c[0][2] * c[3][1] + c[0][3] * c[1][2]
}

fn require_n(p: &IntertwinerParams, n: usize) -> Result<(), IntegrabilityError> {
    if p.n() != n {
        return Err(IntegrabilityError::WrongDimension {
            expected: n,
            got: p.n(),
        });
    }
    Ok(())
}

pub fn check_n4(p: &IntertwinerParams) -> Result<ConstraintReport, IntegrabilityError> {
    require_n(p, 4)?;
    let mut r = ConstraintReport::new(4);
    let q = n4_quadratic(p.c());
    r.push("quadratic".into(), q);
    let vecs = n4_vectors(p.c());
    for (j, v) in vecs.iter().enumerate() {
        r.push(format!("a·c({})", j + 1), linalg::dot(p.a(), v));
    }
    let m: linalg::Matrix = vecs.iter().map(|v| v.to_vec()).collect();
    let rank = linalg::rank(&m, RANK_TOL);
    r.rank = Some(rank);
    if r.constraints["quadratic"].satisfied {
        let nullity = 4 - rank;
        r.free_parameters = Some(5 + nullity);
    }
    r.notes.push(
        "the alternative route of fixing coordinates to constants is not implemented".into(),
    );
    Ok(r)
}

/// Admissible translations for a given n = 4 rotation part.
#[derive(Debug, Clone, Serialize)]
pub struct TranslationBasis {
    pub dimension: usize,
    pub basis: Vec<Vec<f64>>,
    pub max_residual: f64,
    pub note: Option<String>,
}

/// Orthonormal basis of `{a : a·c_(j) = 0 for all j}`.
pub fn solve_n4_translations(c: &[Vec<f64>]) -> Result<TranslationBasis, IntegrabilityError> {
    if c.len() != 4 {
        return Err(IntegrabilityError::WrongDimension {
            expected: 4,
            got: c.len(),
        });
    }
    let q = n4_quadratic(c);
    if q.abs() > CONSTRAINT_TOL {
        return Err(IntegrabilityError::QuadraticViolated { value: q });
    }
    let vecs = n4_vectors(c);
    let m: linalg::Matrix = vecs.iter().map(|v| v.to_vec()).collect();
    let basis = linalg::nullspace(&m, 4, RANK_TOL);
    let max_residual = basis
        .iter()
        .flat_map(|b| vecs.iter().map(move |v| linalg::dot(b, v).abs()))
        .fold(0.0, f64::max);
    let note = c
        .iter()
        .flatten()
        .all(|v| *v == 0.0)
        .then(|| "c = 0: no constraints on a".to_string());
    Ok(TranslationBasis {
        dimension: basis.len(),
        basis,
        max_residual,
        note,
    })
}

/// Upper-triangle index pairs in row order.
fn upper_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for j in 0..n {
        for k in j + 1..n {
            out.push((j, k));
        }
    }
    out
}

/// Checks the five 4×4 Pfaffians of a 5×5 rotation matrix (with `a = 0`).
///
/// `free_parameters` is `10 − 5` when all hold, counting the five relations
/// as independent. `local_dimension` is the dimension of the solution set near
/// `c` computed from the rank of the constraint Jacobian; on the nonzero part
/// of the variety it is 7, because only three of the five relations are
/// locally independent.
pub fn check_n5(p: &IntertwinerParams) -> Result<ConstraintReport, IntegrabilityError> {
    require_n(p, 5)?;
    if p.a().iter().any(|v| *v != 0.0) {
        return Err(IntegrabilityError::TranslationsUnsupported);
    }
    let mut r = check_pfaffian_conditions(p);
    let qs = quads(5);
    if r.all_satisfied {
        r.free_parameters = Some(10 - qs.len());
    }
    // Jacobian of the Pfaffians with respect to the upper-triangle entries.
    let pairs = upper_pairs(5);
    let c0 = p.c().to_vec();
    let mut jac = vec![vec![0.0; pairs.len()]; qs.len()];
    for (col, &(j, k)) in pairs.iter().enumerate() {
        // Pfaffians are bilinear, so a unit central difference is exact.
        let mut cp = c0.clone();
        cp[j][k] += 1.0;
        cp[k][j] -= 1.0;
        let mut cm = c0.clone();
        cm[j][k] -= 1.0;
        cm[k][j] += 1.0;
        for (row, q) in qs.iter().enumerate() {
            jac[row][col] = 0.5
                * (pfaffian4(&cp, q[0], q[1], q[2], q[3]) - pfaffian4(&cm, q[0], q[1], q[2], q[3]));
        }
    }
    let rank = linalg::rank(&jac, RANK_TOL);
    r.local_dimension = Some(pairs.len() - rank);
    r.notes.push(format!(
        "constraint Jacobian has rank {rank} at this c; local solution dimension {}",
        pairs.len() - rank
    ));
    Ok(r)
}

/// Which ratio of `L` components serves as the separating variable in 3D.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EtaVariant {
    /// `η = L1/L2`, polynomial `p`
    Eta,
    /// `η2 = L1/L3`, polynomial `p2`
    Eta2,
    /// `η3 = L2/L3`, polynomial `p3`
    Eta3,
}

impl EtaVariant {
    /// 0-based `(i, j)` with `η = L_i / L_j`.
    pub fn pair(self) -> (usize, usize) {
        match self {
            EtaVariant::Eta => (0, 1),
            EtaVariant::Eta2 => (0, 2),
            EtaVariant::Eta3 => (1, 2),
        }
    }

    pub fn polynomial_name(self) -> &'static str {
        match self {
            EtaVariant::Eta => "p",
            EtaVariant::Eta2 => "p2",
            EtaVariant::Eta3 => "p3",
        }
    }

    /// 0-based index into `(c1, c2, c3)` of the component that must not vanish.
    pub fn required_component(self) -> usize {
        match self {
            EtaVariant::Eta => 2,
            EtaVariant::Eta2 => 1,
            EtaVariant::Eta3 => 0,
        }
    }
}

/// One row of the n = 3 preset table.
#[derive(Debug, Clone, Serialize)]
pub struct Preset {
    pub row: usize,
    pub constraints: &'static str,
    pub params: IntertwinerParams,
    pub eta: EtaVariant,
    /// `β` in terms of `x, y, z` and the parameters `a1..a3, c1..c3`.
    pub beta: &'static str,
    /// `2γ` in the same variables.
    pub two_gamma: &'static str,
}

const GENERIC_TWO_GAMMA: &str = "2*(x*(a2*c3 - a3*c2) + y*(a3*c1 - a1*c3) + z*(a1*c2 - a2*c1)) + (c1*x + c2*y + c3*z)^2 - (c1^2 + c2^2 + c3^2)*(x^2 + y^2 + z^2)";
const GENERIC_BETA: &str = "c1*x + c2*y + c3*z";

/// Parameter presets for n = 3, rows numbered 1..=10 top to bottom.
///
/// Each row fixes some components of `a` and `c`; the remaining ones carry
/// representative values that satisfy the row's constraint.
pub fn preset_table1(row: usize) -> Result<Preset, IntegrabilityError> {
    type Row = (&'static str, [f64; 3], [f64; 3], EtaVariant, &'static str, &'static str);
    let (constraints, a, c, eta, beta, two_gamma): Row = match row {
        1 => ("a1=0; a2c2+a3c3=0", [0.0, 2.0, -1.0], [0.5, 1.0, 2.0], EtaVariant::Eta, GENERIC_BETA, GENERIC_TWO_GAMMA),
        2 => ("a2=0; a1c1+a3c3=0", [2.0, 0.0, -0.5], [0.5, 1.0, 2.0], EtaVariant::Eta, GENERIC_BETA, GENERIC_TWO_GAMMA),
        3 => ("a3=0; a1c1+a2c2=0", [2.0, -1.0, 0.0], [0.5, 1.0, 2.0], EtaVariant::Eta, GENERIC_BETA, GENERIC_TWO_GAMMA),
        4 => (
            "a1=a2=0; c3=0",
            [0.0, 0.0, 1.5],
            [0.5, 1.0, 0.0],
            EtaVariant::Eta2,
            "c1*x + c2*y",
            "2*a3*(c1*y - c2*x) + (c1*x + c2*y)^2 - (c1^2 + c2^2)*(x^2 + y^2 + z^2)",
        ),
        5 => (
            "a1=a3=0; c2=0",
            [0.0, 1.5, 0.0],
            [0.5, 0.0, 2.0],
            EtaVariant::Eta,
            "c1*x + c3*z",
            "2*a2*(c3*x - c1*z) + (c1*x + c3*z)^2 - (c1^2 + c3^2)*(x^2 + y^2 + z^2)",
        ),
        6 => (
            "a2=a3=0; c1=0",
            [1.5, 0.0, 0.0],
            [0.0, 1.0, 2.0],
            EtaVariant::Eta,
            "c2*y + c3*z",
            "2*a1*(c2*z - c3*y) + (c2*y + c3*z)^2 - (c2^2 + c3^2)*(x^2 + y^2 + z^2)",
        ),
        7 => (
            "a1=0; c2=c3=0",
            [0.0, 1.0, 1.5],
            [2.0, 0.0, 0.0],
            EtaVariant::Eta3,
            "c1*x",
            "2*c1*(a3*y - a2*z) - c1^2*(y^2 + z^2)",
        ),
        8 => (
            "a2=0; c1=c3=0",
            [1.0, 0.0, 1.5],
            [0.0, 2.0, 0.0],
            EtaVariant::Eta2,
            "c2*y",
            "2*c2*(a1*z - a3*x) - c2^2*(x^2 + z^2)",
        ),
        9 => (
            "a3=0; c1=c2=0",
            [1.0, 1.5, 0.0],
            [0.0, 0.0, 2.0],
            EtaVariant::Eta,
            "c3*z",
            "2*c3*(a2*x - a1*y) - c3^2*(x^2 + y^2)",
        ),
        10 => (
            "a1=a2=a3=0",
            [0.0, 0.0, 0.0],
            [0.5, 1.0, 2.0],
            EtaVariant::Eta,
            GENERIC_BETA,
            "(c1*x + c2*y + c3*z)^2 - (c1^2 + c2^2 + c3^2)*(x^2 + y^2 + z^2)",
        ),
        _ => return Err(IntegrabilityError::InvalidRow(row)),
    };
    Ok(Preset {
        row,
        constraints,
        params: IntertwinerParams::three_d(a, c),
        eta,
        beta,
        two_gamma,
    })
}

/// `max_{j<k} |K_jk P + 2 c_jk P|` with `K_jk = L_j ∂_k − L_k ∂_j`, relative
/// to `max(|P|·|c|, |∇P|·|L|)`.
pub fn curl_condition_residual(
    p: &IntertwinerParams,
    pfield: &ScalarField,
    x: &[f64],
    step: f64,
) -> Result<f64, FieldError> {
    let l = p.vector_field(x);
    let g = pfield.gradient(x, step)?;
    let pv = pfield.eval(x)?;
    let n = p.n();
    let cmax = p.c().iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = (pv.abs() * cmax).max(linalg::norm(&g) * linalg::norm(&l)).max(1e-300);
    let mut worst = 0.0f64;
    for j in 0..n {
        for k in j + 1..n {
            let kp = l[j] * g[k] - l[k] * g[j];
            worst = worst.max((kp + 2.0 * p.c_at(j, k) * pv).abs());
        }
    }
    Ok(worst / scale)
}
