//! Distributions as finite sums of weak derivatives of sampled fields plus
//! weighted derivatives of Dirac masses.
//!
//! Data stays un-differentiated: a term (β, f) means D^βf in the weak sense,
//! and pairing moves all derivatives onto the (symbolic) test function:
//!
//! ```text
//! T(θ) = Σ_β (−1)^{|β|} ∫ f_β · D^βθ  +  Σ_atoms w · (−1)^{|γ|} (D^γθ)(loc).
//! ```

use crate::error::{JetscopeError, Result};
use crate::field::SampledField;
use crate::grid::{Ball, Grid};
use crate::jet::Jet;
use crate::multi_index::MultiIndex;
use crate::testfn::TestFunction;

/// A weighted derivative of a Dirac mass at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub location: Vec<f64>,
    pub weight: f64,
    pub derivative: MultiIndex,
}

#[derive(Debug, Clone)]
pub struct DistributionRep {
    pub grid: Grid,
    /// Each term (β, f) contributes D^βf.
    pub terms: Vec<(MultiIndex, SampledField)>,
    pub atoms: Vec<Atom>,
}

impl DistributionRep {
    pub fn from_field(f: SampledField) -> Self {
        let grid = f.grid.clone();
        let beta = MultiIndex::zero(grid.dim);
        DistributionRep {
            grid,
            terms: vec![(beta, f)],
            atoms: Vec::new(),
        }
    }

    pub fn from_term(beta: MultiIndex, f: SampledField) -> Self {
        let grid = f.grid.clone();
        DistributionRep {
            grid,
            terms: vec![(beta, f)],
            atoms: Vec::new(),
        }
    }

    pub fn from_atom(grid: Grid, atom: Atom) -> Self {
        DistributionRep {
            grid,
            terms: Vec::new(),
            atoms: vec![atom],
        }
    }

    pub fn dim(&self) -> usize {
        self.grid.dim
    }

    /// The weak partial derivative D_j T: every tag gains one order; data is
    /// untouched.
    pub fn derivative(&self, axis: usize) -> DistributionRep {
        let e = MultiIndex::unit(self.grid.dim, axis);
        DistributionRep {
            grid: self.grid.clone(),
            terms: self
                .terms
                .iter()
                .map(|(b, f)| (b.add(&e), f.clone()))
                .collect(),
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    location: a.location.clone(),
                    weight: a.weight,
                    derivative: a.derivative.add(&e),
                })
                .collect(),
        }
    }

    pub fn add(&self, other: &DistributionRep) -> DistributionRep {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().cloned());
        DistributionRep {
            grid: self.grid.clone(),
            terms,
            atoms,
        }
    }

    pub fn scale(&self, c: f64) -> DistributionRep {
        DistributionRep {
            grid: self.grid.clone(),
            terms: self
                .terms
                .iter()
                .map(|(b, f)| (b.clone(), f.scale(c)))
                .collect(),
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    location: a.location.clone(),
                    weight: c * a.weight,
                    derivative: a.derivative.clone(),
                })
                .collect(),
        }
    }

    /// Subtract a polynomial jet (realized as an order-zero field term).
    pub fn sub_jet(&self, p: &Jet) -> Result<DistributionRep> {
        if p.is_zero() {
            return Ok(self.clone());
        }
        let field = p.to_field(&self.grid)?.scale(-1.0);
        Ok(self.add(&DistributionRep::from_field(field)))
    }

    /// T(θ), with all derivatives moved onto the symbolic test function.
    ///
    /// The support of θ must lie inside `region` and inside the grid box.
    /// Summation order is fixed (flat node order) so results are independent
    /// of scheduling.
    pub fn pair(&self, theta: &TestFunction, region: &Ball) -> Result<f64> {
        let support = theta.support();
        if !support.inside(region) {
            return Err(JetscopeError::SupportViolation(format!(
                "support B({:?}, {}) not inside region B({:?}, {})",
                support.center, support.radius, region.center, region.radius
            )));
        }
        if !self.grid.contains_ball(&support) {
            return Err(JetscopeError::SupportViolation(
                "test function support exceeds the grid box".into(),
            ));
        }
        let mut total = 0.0;
        for (beta, f) in &self.terms {
            let sign = if beta.order() % 2 == 0 { 1.0 } else { -1.0 };
            let dtheta = theta.derivative(beta);
            let mut sum = 0.0;
            for flat in 0..self.grid.node_count() {
                let x = self.grid.point_flat(flat);
                if !support.contains(&x) {
                    continue;
                }
                let t = dtheta.eval(&x);
                if t != 0.0 {
                    sum += self.grid.weight_flat(flat) * f.values[flat] * t;
                }
            }
            total += sign * sum;
        }
        for atom in &self.atoms {
            let sign = if atom.derivative.order() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            let dtheta = theta.derivative(&atom.derivative);
            total += sign * atom.weight * dtheta.eval(&atom.location);
        }
        Ok(total)
    }
}
