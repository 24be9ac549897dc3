//! Exact multivariate polynomials with real coefficients.
//!
//! Used as test functions for the generator algebra: differentiation and
//! multiplication by a coordinate are exact, so commutator identities can be
//! checked without discretisation error.

use std::collections::BTreeMap;

use rand::Rng;

/// Sparse polynomial in `n` variables keyed by exponent vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    n: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl Poly {
    pub fn zero(n: usize) -> Poly {
        Poly {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, v: f64) -> Poly {
        let mut p = Poly::zero(n);
        p.add_term(vec![0; n], v);
        p
    }

    /// The coordinate `x_k` (0-based).
    pub fn coordinate(n: usize, k: usize) -> Poly {
        let mut e = vec![0; n];
        e[k] = 1;
        let mut p = Poly::zero(n);
        p.add_term(e, 1.0);
        p
    }

    pub fn monomial(coeff: f64, exps: &[u32]) -> Poly {
        let mut p = Poly::zero(exps.len());
        p.add_term(exps.to_vec(), coeff);
        p
    }

    /// Random dense polynomial of total degree ≤ `degree`, coefficients in [-1, 1].
    pub fn random<R: Rng>(n: usize, degree: u32, rng: &mut R) -> Poly {
        let mut p = Poly::zero(n);
        for e in exponents_up_to(n, degree) {
            p.add_term(e, rng.gen_range(-1.0..1.0));
        }
        p
    }

    fn add_term(&mut self, e: Vec<u32>, c: f64) {
        if c == 0.0 {
            return;
        }
        let slot = self.terms.entry(e).or_insert(0.0);
        *slot += c;
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn derivative(&self, k: usize) -> Poly {
        let mut out = Poly::zero(self.n);
        for (e, c) in &self.terms {
            if e[k] > 0 {
                let mut e2 = e.clone();
                e2[k] -= 1;
                out.add_term(e2, c * e[k] as f64);
            }
        }
        out
    }

    pub fn mul_coordinate(&self, k: usize) -> Poly {
        let mut out = Poly::zero(self.n);
        for (e, c) in &self.terms {
            let mut e2 = e.clone();
            e2[k] += 1;
            out.add_term(e2, *c);
        }
        out
    }

    pub fn scale(&self, k: f64) -> Poly {
        let mut out = Poly::zero(self.n);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c * k);
        }
        out
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero(self.n);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1 * c2);
            }
        }
        out
    }

    pub fn laplacian(&self) -> Poly {
        (0..self.n).fold(Poly::zero(self.n), |acc, k| {
            acc.add(&self.derivative(k).derivative(k))
        })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                c * e
                    .iter()
                    .zip(x)
                    .map(|(&k, &xi)| xi.powi(k as i32))
                    .product::<f64>()
            })
            .sum()
    }

    /// Largest absolute coefficient; zero for the zero polynomial.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// All exponent vectors in `n` variables with total degree ≤ `degree`.
pub fn exponents_up_to(n: usize, degree: u32) -> Vec<Vec<u32>> {
    fn rec(n: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(n, left - k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, degree, &mut Vec::with_capacity(n), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_and_product() {
        // x^2 y
        let p = Poly::monomial(1.0, &[2, 1]);
        assert_eq!(p.derivative(0), Poly::monomial(2.0, &[1, 1]));
        assert_eq!(p.derivative(1), Poly::monomial(1.0, &[2, 0]));
        assert_eq!(p.mul_coordinate(1), Poly::monomial(1.0, &[2, 2]));
        assert_eq!(p.laplacian(), Poly::monomial(2.0, &[0, 1]));
        assert_eq!(p.eval(&[3.0, 2.0]), 18.0);
    }

    #[test]
    fn monomial_count() {
        // C(n + d, d)
        assert_eq!(exponents_up_to(3, 3).len(), 20);
        assert_eq!(exponents_up_to(5, 4).len(), 126);
    }

    #[test]
    fn cancellation_leaves_zero() {
        let p = Poly::monomial(1.5, &[1, 0]);
        assert_eq!(p.sub(&p).max_abs_coeff(), 0.0);
        assert_eq!(p.mul(&Poly::constant(2, 2.0)), Poly::monomial(3.0, &[1, 0]));
    }
}
