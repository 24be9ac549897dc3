//! Real-valued fields on R^n with optional singular loci and exact gradients.

use std::fmt;
use std::sync::Arc;

use crate::expr::{CompiledExpr, Expr, ExprError};

/// Width of the band around a singular locus inside which evaluation is refused.
pub const GUARD_BAND: f64 = 1e-6;

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum FieldError {
    #[error("point {point:?} lies on or near a singular locus ({locus})")]
    Singular { point: Vec<f64>, locus: String },
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("non-finite value at {point:?}")]
    NonFinite { point: Vec<f64> },
    #[error("expected a point of dimension {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

type ValueFn = dyn Fn(&[f64]) -> Result<f64, FieldError> + Send + Sync;
type GradFn = dyn Fn(&[f64]) -> Result<Vec<f64>, FieldError> + Send + Sync;
type SingularFn = dyn Fn(&[f64]) -> Option<String> + Send + Sync;

/// A scalar field on R^n.
///
/// Cloning is cheap; the closures are shared.
#[derive(Clone)]
pub struct ScalarField {
    dim: usize,
    value: Arc<ValueFn>,
    gradient: Option<Arc<GradFn>>,
    singular: Option<Arc<SingularFn>>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("dim", &self.dim)
            .field("exact_gradient", &self.gradient.is_some())
            .field("guarded", &self.singular.is_some())
            .finish()
    }
}

/// A denominator-like expression whose zero set is singular, with a label.
#[derive(Debug, Clone)]
pub struct Guard {
    pub expr: Expr,
    pub label: String,
}

impl Guard {
    pub fn new(expr: Expr, label: impl Into<String>) -> Guard {
        Guard {
            expr,
            label: label.into(),
        }
    }
}

impl ScalarField {
    pub fn new<F>(dim: usize, value: F) -> ScalarField
    where
        F: Fn(&[f64]) -> Result<f64, FieldError> + Send + Sync + 'static,
    {
        ScalarField {
            dim,
            value: Arc::new(value),
            gradient: None,
            singular: None,
        }
    }

    pub fn constant(dim: usize, v: f64) -> ScalarField {
        ScalarField::new(dim, move |_| Ok(v)).with_gradient(move |_| Ok(vec![0.0; dim]))
    }

    /// Attaches an exact gradient hook, used in place of finite differences.
    pub fn with_gradient<G>(mut self, grad: G) -> ScalarField
    where
        G: Fn(&[f64]) -> Result<Vec<f64>, FieldError> + Send + Sync + 'static,
    {
        self.gradient = Some(Arc::new(grad));
        self
    }

    /// Attaches a singularity predicate returning a description of the locus hit.
    pub fn with_singular<S>(mut self, pred: S) -> ScalarField
    where
        S: Fn(&[f64]) -> Option<String> + Send + Sync + 'static,
    {
        self.singular = Some(Arc::new(pred));
        self
    }

    /// Builds a field from an expression over `vars` (one per coordinate).
    /// The exact gradient comes from symbolic differentiation.
    pub fn from_expr(expr: &Expr, vars: &[&str]) -> Result<ScalarField, ExprError> {
        ScalarField::from_expr_guarded(expr, vars, &[])
    }

    /// Like [`ScalarField::from_expr`], refusing points where any guard
    /// expression is within [`GUARD_BAND`] of zero.
    pub fn from_expr_guarded(
        expr: &Expr,
        vars: &[&str],
        guards: &[Guard],
    ) -> Result<ScalarField, ExprError> {
        let dim = vars.len();
        let value = expr.compile(vars)?;
        let grads: Vec<CompiledExpr> = vars
            .iter()
            .map(|v| expr.differentiate(v).compile(vars))
            .collect::<Result<_, _>>()?;
        let compiled_guards: Vec<(CompiledExpr, String)> = guards
            .iter()
            .map(|g| Ok((g.expr.compile(vars)?, g.label.clone())))
            .collect::<Result<_, ExprError>>()?;
        let check = Arc::new(move |p: &[f64]| -> Option<String> {
            for (g, label) in &compiled_guards {
                match g.eval(p) {
                    Ok(v) if v.abs() > GUARD_BAND => {}
                    _ => return Some(label.clone()),
                }
            }
            None
        });
        let check_v = check.clone();
        let check_g = check.clone();
        let field = ScalarField::new(dim, move |p| {
            if let Some(locus) = check_v(p) {
                return Err(FieldError::Singular {
                    point: p.to_vec(),
                    locus,
                });
            }
            Ok(value.eval(p)?)
        })
        .with_gradient(move |p| {
            if let Some(locus) = check_g(p) {
                return Err(FieldError::Singular {
                    point: p.to_vec(),
                    locus,
                });
            }
            grads.iter().map(|g| Ok(g.eval(p)?)).collect()
        });
        Ok(field.with_singular(move |p| check(p)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_exact_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    /// Description of the singular locus containing `point`, if any.
    pub fn singular_at(&self, point: &[f64]) -> Option<String> {
        self.singular.as_ref().and_then(|s| s(point))
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64, FieldError> {
        if point.len() != self.dim {
            return Err(FieldError::Dimension {
                expected: self.dim,
                got: point.len(),
            });
        }
        if let Some(locus) = self.singular_at(point) {
            return Err(FieldError::Singular {
                point: point.to_vec(),
                locus,
            });
        }
        let v = (self.value)(point)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(FieldError::NonFinite {
                point: point.to_vec(),
            })
        }
    }

    /// Gradient from the exact hook when present, otherwise Richardson
    /// extrapolated central differences with steps `step` and `step/2`.
    pub fn gradient(&self, point: &[f64], step: f64) -> Result<Vec<f64>, FieldError> {
        if let Some(g) = &self.gradient {
            return g(point);
        }
        self.fd_gradient(point, step)
    }

    pub fn fd_gradient(&self, point: &[f64], step: f64) -> Result<Vec<f64>, FieldError> {
        let mut out = Vec::with_capacity(self.dim);
        let mut q = point.to_vec();
        for j in 0..self.dim {
            let mut central = |h: f64| -> Result<f64, FieldError> {
                q[j] = point[j] + h;
                let fp = self.eval(&q)?;
                q[j] = point[j] - h;
                let fm = self.eval(&q)?;
                q[j] = point[j];
                Ok((fp - fm) / (2.0 * h))
            };
            let d1 = central(step)?;
            let d2 = central(step / 2.0)?;
            out.push((4.0 * d2 - d1) / 3.0);
        }
        Ok(out)
    }

    /// Directional derivative `v·∇φ`.
    pub fn directional(&self, v: &[f64], point: &[f64], step: f64) -> Result<f64, FieldError> {
        let g = self.gradient(point, step)?;
        Ok(g.iter().zip(v).map(|(a, b)| a * b).sum())
    }

    /// Second-order central difference Laplacian.
    pub fn laplacian(&self, point: &[f64], step: f64) -> Result<f64, FieldError> {
        let f0 = self.eval(point)?;
        let mut q = point.to_vec();
        let mut acc = 0.0;
        for j in 0..self.dim {
            q[j] = point[j] + step;
            let fp = self.eval(&q)?;
            q[j] = point[j] - step;
            let fm = self.eval(&q)?;
            q[j] = point[j];
            acc += (fp - 2.0 * f0 + fm) / (step * step);
        }
        Ok(acc)
    }

    /// Pointwise sum; singular where either operand is.
    pub fn add(&self, other: &ScalarField) -> ScalarField {
        let (a, b) = (self.clone(), other.clone());
        ScalarField::new(self.dim, move |p| Ok(a.eval(p)? + b.eval(p)?))
    }

    pub fn sub(&self, other: &ScalarField) -> ScalarField {
        let (a, b) = (self.clone(), other.clone());
        ScalarField::new(self.dim, move |p| Ok(a.eval(p)? - b.eval(p)?))
    }

    pub fn scale(&self, k: f64) -> ScalarField {
        let a = self.clone();
        ScalarField::new(self.dim, move |p| Ok(k * a.eval(p)?))
    }
}

/// Cartesian coordinate names: `x1..xn`.
pub fn cartesian_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}
