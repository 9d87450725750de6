//! Polynomial k-jets anchored at a basepoint.
//!
//! A jet of degree k stores coefficients c_β = D^βP(a) for |β| ≤ k and
//! evaluates as P(x) = Σ_β c_β (x−a)^β / β!. Degree −1 is the zero
//! polynomial by convention, so order (−1, 1) classifications are expressible.

use std::collections::BTreeMap;

use crate::error::Result;
use crate::field::SampledField;
use crate::grid::Grid;
use crate::multi_index::MultiIndex;

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub basepoint: Vec<f64>,
    /// Polynomial degree bound; −1 means the zero polynomial.
    pub degree: i64,
    /// coeffs[β] = D^βP(basepoint); absent entries are zero.
    pub coeffs: BTreeMap<MultiIndex, f64>,
}

impl Jet {
    /// The zero polynomial (degree −1).
    pub fn zero(basepoint: Vec<f64>) -> Self {
        Jet {
            basepoint,
            degree: -1,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn constant(basepoint: Vec<f64>, c: f64) -> Self {
        let n = basepoint.len();
        let mut coeffs = BTreeMap::new();
        coeffs.insert(MultiIndex::zero(n), c);
        Jet {
            basepoint,
            degree: 0,
            coeffs,
        }
    }

    pub fn new(basepoint: Vec<f64>, degree: i64, coeffs: BTreeMap<MultiIndex, f64>) -> Self {
        debug_assert!(coeffs.keys().all(|b| (b.order() as i64) <= degree));
        Jet {
            basepoint,
            degree,
            coeffs,
        }
    }

    pub fn dim(&self) -> usize {
        self.basepoint.len()
    }

    pub fn is_zero(&self) -> bool {
        self.degree < 0 || self.coeffs.values().all(|&c| c == 0.0)
    }

    pub fn coeff(&self, beta: &MultiIndex) -> f64 {
        self.coeffs.get(beta).copied().unwrap_or(0.0)
    }

    /// P(x) = Σ_β c_β (x−a)^β / β!.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.coeffs
            .iter()
            .map(|(b, &c)| c * b.monomial(x, &self.basepoint) / b.factorial())
            .sum()
    }

    /// D^β P as a jet of degree max(k − |β|, −1); basepoint preserved.
    pub fn differentiate(&self, beta: &MultiIndex) -> Jet {
        let degree = (self.degree - beta.order() as i64).max(-1);
        let mut coeffs = BTreeMap::new();
        if degree >= 0 {
            for (g, &c) in &self.coeffs {
                if let Some(down) = g.checked_sub(beta) {
                    if c != 0.0 {
                        coeffs.insert(down, c);
                    }
                }
            }
        }
        Jet {
            basepoint: self.basepoint.clone(),
            degree,
            coeffs,
        }
    }

    pub fn add(&self, other: &Jet) -> Jet {
        debug_assert_eq!(self.basepoint, other.basepoint);
        let mut coeffs = self.coeffs.clone();
        for (b, &c) in &other.coeffs {
            *coeffs.entry(b.clone()).or_insert(0.0) += c;
        }
        Jet {
            basepoint: self.basepoint.clone(),
            degree: self.degree.max(other.degree),
            coeffs,
        }
    }

    pub fn scale(&self, c: f64) -> Jet {
        Jet {
            basepoint: self.basepoint.clone(),
            degree: self.degree,
            coeffs: self
                .coeffs
                .iter()
                .map(|(b, &v)| (b.clone(), c * v))
                .collect(),
        }
    }

    /// Sample the polynomial over a grid.
    pub fn to_field(&self, grid: &Grid) -> Result<SampledField> {
        SampledField::from_fn(grid.clone(), |x| self.eval(x))
    }
}
