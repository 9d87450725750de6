//! Dense-enough multivariate polynomials backed by a coefficient map.
//!
//! These carry the rational prefactors of symbolic test functions, where
//! exactness of derivatives matters more than speed.

use std::collections::BTreeMap;

use crate::multi_index::MultiIndex;

/// A polynomial Σ c_β x^β in `dim` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    pub dim: usize,
    pub coeffs: BTreeMap<MultiIndex, f64>,
}

impl Poly {
    pub fn zero(dim: usize) -> Self {
        Poly {
            dim,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        let mut p = Poly::zero(dim);
        if c != 0.0 {
            p.coeffs.insert(MultiIndex::zero(dim), c);
        }
        p
    }

    pub fn one(dim: usize) -> Self {
        Poly::constant(dim, 1.0)
    }

    /// The coordinate projection x_j.
    pub fn coordinate(dim: usize, j: usize) -> Self {
        let mut p = Poly::zero(dim);
        p.coeffs.insert(MultiIndex::unit(dim, j), 1.0);
        p
    }

    /// |x|² = Σ x_j².
    pub fn norm_squared(dim: usize) -> Self {
        let mut p = Poly::zero(dim);
        for j in 0..dim {
            let mut c = vec![0usize; dim];
            c[j] = 2;
            p.coeffs.insert(MultiIndex::new(c), 1.0);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.values().all(|&c| c == 0.0)
    }

    pub fn set(&mut self, beta: MultiIndex, c: f64) {
        if c == 0.0 {
            self.coeffs.remove(&beta);
        } else {
            self.coeffs.insert(beta, c);
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let origin = vec![0.0; self.dim];
        self.coeffs
            .iter()
            .map(|(b, &c)| c * b.monomial(x, &origin))
            .sum()
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (b, &c) in &other.coeffs {
            let e = out.coeffs.entry(b.clone()).or_insert(0.0);
            *e += c;
        }
        out.prune();
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Poly {
        let mut out = self.clone();
        for c in out.coeffs.values_mut() {
            *c *= s;
        }
        out.prune();
        out
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero(self.dim);
        for (a, &ca) in &self.coeffs {
            for (b, &cb) in &other.coeffs {
                let e = out.coeffs.entry(a.add(b)).or_insert(0.0);
                *e += ca * cb;
            }
        }
        out.prune();
        out
    }

    /// ∂/∂x_j.
    pub fn diff(&self, j: usize) -> Poly {
        let mut out = Poly::zero(self.dim);
        let ej = MultiIndex::unit(self.dim, j);
        for (b, &c) in &self.coeffs {
            if let Some(down) = b.checked_sub(&ej) {
                let e = out.coeffs.entry(down).or_insert(0.0);
                *e += c * b.0[j] as f64;
            }
        }
        out.prune();
        out
    }

    /// Substitute x ↦ (x − a)/s, producing a polynomial in the new frame's
    /// absolute coordinates; used when re-anchoring rational factors.
    pub fn compose_affine(&self, a: &[f64], s: f64) -> Poly {
        // Build (x_j - a_j)/s as polynomials and expand monomials.
        let mut out = Poly::zero(self.dim);
        for (b, &c) in &self.coeffs {
            let mut term = Poly::constant(self.dim, c);
            for j in 0..self.dim {
                let lin = Poly::coordinate(self.dim, j)
                    .add(&Poly::constant(self.dim, -a[j]))
                    .scale(1.0 / s);
                for _ in 0..b.0[j] {
                    term = term.mul(&lin);
                }
            }
            out = out.add(&term);
        }
        out
    }

    pub fn degree(&self) -> i64 {
        self.coeffs
            .keys()
            .map(|b| b.order() as i64)
            .max()
            .unwrap_or(-1)
    }

    fn prune(&mut self) {
        self.coeffs.retain(|_, c| *c != 0.0);
    }
}
