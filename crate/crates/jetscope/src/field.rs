//! Sampled scalar fields on a grid, with finite-difference derivatives.

use crate::error::{JetscopeError, Result};
use crate::grid::Grid;
use crate::multi_index::MultiIndex;

/// A scalar field sampled at every grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl SampledField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(JetscopeError::InvalidInput(format!(
                "value count {} does not match node count {}",
                values.len(),
                grid.node_count()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(JetscopeError::InvalidInput(
                "field contains non-finite values".into(),
            ));
        }
        Ok(SampledField { grid, values })
    }

    /// Sample a closure at every node.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..grid.node_count())
            .map(|i| f(&grid.point_flat(i)))
            .collect();
        SampledField::new(grid, values)
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        let n = grid.node_count();
        SampledField {
            grid,
            values: vec![c; n],
        }
    }

    pub fn scale(&self, c: f64) -> SampledField {
        SampledField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn add(&self, other: &SampledField) -> SampledField {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        SampledField {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(other.values.iter())
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &SampledField) -> SampledField {
        self.add(&other.scale(-1.0))
    }

    /// First derivative along one axis: central differences of order 4 in the
    /// interior, one-sided order 2 at the boundary.
    pub fn partial(&self, axis: usize) -> SampledField {
        let g = &self.grid;
        let h = g.spacing(axis);
        let n_axis = g.nodes(axis);
        let mut out = vec![0.0; self.values.len()];
        let get = |idx: &mut Vec<usize>, i: usize| -> f64 {
            idx[axis] = i;
            self.values[g.flat(idx)]
        };
        for flat in 0..self.values.len() {
            let mut idx = g.unflat(flat);
            let i = idx[axis];
            let d = if i >= 2 && i + 2 < n_axis {
                (get(&mut idx, i - 2) - 8.0 * get(&mut idx, i - 1) + 8.0 * get(&mut idx, i + 1)
                    - get(&mut idx, i + 2))
                    / (12.0 * h)
            } else if i == 0 {
                (-3.0 * get(&mut idx, 0) + 4.0 * get(&mut idx, 1) - get(&mut idx, 2)) / (2.0 * h)
            } else if i == n_axis - 1 {
                (3.0 * get(&mut idx, i) - 4.0 * get(&mut idx, i - 1) + get(&mut idx, i - 2))
                    / (2.0 * h)
            } else {
                // one node from the edge: plain central, order 2
                (get(&mut idx, i + 1) - get(&mut idx, i - 1)) / (2.0 * h)
            };
            out[flat] = d;
        }
        SampledField {
            grid: g.clone(),
            values: out,
        }
    }

    /// D^β by iterated first differences.
    pub fn derivative(&self, beta: &MultiIndex) -> SampledField {
        let mut out = self.clone();
        for (axis, &b) in beta.0.iter().enumerate() {
            for _ in 0..b {
                out = out.partial(axis);
            }
        }
        out
    }

    /// Multilinear interpolation at a physical point inside the box.
    pub fn value_at(&self, x: &[f64]) -> Result<f64> {
        let g = &self.grid;
        if !g.contains_point(x) {
            return Err(JetscopeError::InvalidInput(format!(
                "point {x:?} outside grid box"
            )));
        }
        let mut base = vec![0usize; g.dim];
        let mut frac = vec![0.0; g.dim];
        for j in 0..g.dim {
            let t = ((x[j] - g.min[j]) / g.spacing(j)).clamp(0.0, g.cells[j] as f64);
            let b = (t.floor() as usize).min(g.cells[j] - 1);
            base[j] = b;
            frac[j] = t - b as f64;
        }
        match g.dim {
            1 => {
                let v0 = self.values[g.flat(&[base[0]])];
                let v1 = self.values[g.flat(&[base[0] + 1])];
                Ok(v0 + frac[0] * (v1 - v0))
            }
            2 => {
                let v00 = self.values[g.flat(&[base[0], base[1]])];
                let v01 = self.values[g.flat(&[base[0], base[1] + 1])];
                let v10 = self.values[g.flat(&[base[0] + 1, base[1]])];
                let v11 = self.values[g.flat(&[base[0] + 1, base[1] + 1])];
                let a = v00 + frac[1] * (v01 - v00);
                let b = v10 + frac[1] * (v11 - v10);
                Ok(a + frac[0] * (b - a))
            }
            _ => unreachable!(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_of_cubic_is_exact_inside() {
        // order-4 central differences differentiate x³ exactly
        let g = Grid::symmetric(1, 1.0, 64).unwrap();
        let f = SampledField::from_fn(g.clone(), |x| x[0].powi(3)).unwrap();
        let df = f.partial(0);
        for i in 2..g.node_count() - 2 {
            let x = g.point_flat(i)[0];
            assert!(
                (df.values[i] - 3.0 * x * x).abs() < 1e-12,
                "x={x} got {}",
                df.values[i]
            );
        }
    }

    #[test]
    fn derivative_converges_order_four() {
        let mut errs = Vec::new();
        for cells in [64usize, 128] {
            let g = Grid::symmetric(1, 1.0, cells).unwrap();
            let f = SampledField::from_fn(g.clone(), |x| (3.0 * x[0]).sin()).unwrap();
            let df = f.partial(0);
            let mut e: f64 = 0.0;
            for i in 2..g.node_count() - 2 {
                let x = g.point_flat(i)[0];
                e = e.max((df.values[i] - 3.0 * (3.0 * x).cos()).abs());
            }
            errs.push(e);
        }
        let order = (errs[0] / errs[1]).log2();
        assert!(order > 3.5, "observed order {order}");
    }

    #[test]
    fn mixed_derivative_2d() {
        let g = Grid::symmetric(2, 1.0, 32).unwrap();
        let f = SampledField::from_fn(g.clone(), |x| x[0] * x[0] * x[1]).unwrap();
        let dxy = f.derivative(&MultiIndex::new(vec![1, 1]));
        // interior node check: ∂²(x²y)/∂x∂y = 2x
        let idx = [16usize, 16];
        let x = g.point(&idx);
        assert!((dxy.values[g.flat(&idx)] - 2.0 * x[0]).abs() < 1e-10);
    }

    #[test]
    fn interpolation_reproduces_linear() {
        let g = Grid::symmetric(2, 1.0, 16).unwrap();
        let f = SampledField::from_fn(g.clone(), |x| 2.0 * x[0] - x[1] + 0.5).unwrap();
        for p in [[0.13, -0.77], [0.0, 0.0], [-0.95, 0.5]] {
            let v = f.value_at(&p).unwrap();
            assert!((v - (2.0 * p[0] - p[1] + 0.5)).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_nan() {
        let g = Grid::symmetric(1, 1.0, 8).unwrap();
        let mut vals = vec![0.0; g.node_count()];
        vals[3] = f64::NAN;
        assert!(SampledField::new(g, vals).is_err());
    }
}
