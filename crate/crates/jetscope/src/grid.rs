//! Uniform tensor grids on axis-aligned boxes, n ∈ {1, 2}, and ball regions.
//!
//! Node counts per axis are a power of two plus one (cells a power of two),
//! so dyadic rescaling lands exactly on sub-grids. Quadrature is composite
//! trapezoid; ball regions are realized as node masks with unmodified
//! weights, accepting an order-1 error at the curved boundary.

use crate::error::{JetscopeError, Result};

/// A closed or open ball B(center, radius).
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
    pub closed: bool,
}

impl Ball {
    pub fn closed(center: Vec<f64>, radius: f64) -> Self {
        assert!(radius > 0.0, "ball radius must be positive");
        Ball {
            center,
            radius,
            closed: true,
        }
    }

    pub fn open(center: Vec<f64>, radius: f64) -> Self {
        assert!(radius > 0.0, "ball radius must be positive");
        Ball {
            center,
            radius,
            closed: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let d2: f64 = x
            .iter()
            .zip(self.center.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let r2 = self.radius * self.radius;
        if self.closed {
            d2 <= r2 * (1.0 + 1e-12)
        } else {
            d2 < r2
        }
    }

    /// Whether this ball lies inside the other one.
    pub fn inside(&self, other: &Ball) -> bool {
        let d: f64 = self
            .center
            .iter()
            .zip(other.center.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        d + self.radius <= other.radius * (1.0 + 1e-12)
    }
}

/// Uniform tensor grid over an axis-aligned box.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub dim: usize,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    /// Cells per axis; nodes per axis = cells + 1.
    pub cells: Vec<usize>,
}

impl Grid {
    pub fn new(min: Vec<f64>, max: Vec<f64>, cells: Vec<usize>) -> Result<Self> {
        let dim = min.len();
        if dim == 0 || dim > 2 {
            return Err(JetscopeError::InvalidInput(format!(
                "grid dimension must be 1 or 2, got {dim}"
            )));
        }
        if max.len() != dim || cells.len() != dim {
            return Err(JetscopeError::InvalidInput(
                "grid min/max/cells length mismatch".into(),
            ));
        }
        for j in 0..dim {
            if !(max[j] > min[j]) {
                return Err(JetscopeError::InvalidInput(format!(
                    "grid box degenerate on axis {j}"
                )));
            }
            if cells[j] < 8 || !cells[j].is_power_of_two() {
                return Err(JetscopeError::InvalidInput(format!(
                    "cells per axis must be a power of two ≥ 8, got {}",
                    cells[j]
                )));
            }
        }
        Ok(Grid {
            dim,
            min,
            max,
            cells,
        })
    }

    /// Symmetric box (−half, half)^n with the same cell count on every axis.
    pub fn symmetric(dim: usize, half: f64, cells: usize) -> Result<Self> {
        Grid::new(vec![-half; dim], vec![half; dim], vec![cells; dim])
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.max[axis] - self.min[axis]) / self.cells[axis] as f64
    }

    pub fn nodes(&self, axis: usize) -> usize {
        self.cells[axis] + 1
    }

    pub fn node_count(&self) -> usize {
        (0..self.dim).map(|j| self.nodes(j)).product()
    }

    /// Flat index from per-axis indices (row-major, axis 0 slowest).
    pub fn flat(&self, idx: &[usize]) -> usize {
        match self.dim {
            1 => idx[0],
            2 => idx[0] * self.nodes(1) + idx[1],
            _ => unreachable!(),
        }
    }

    /// Per-axis indices from a flat index.
    pub fn unflat(&self, flat: usize) -> Vec<usize> {
        match self.dim {
            1 => vec![flat],
            2 => {
                let ny = self.nodes(1);
                vec![flat / ny, flat % ny]
            }
            _ => unreachable!(),
        }
    }

    /// Physical coordinates of a node.
    pub fn point(&self, idx: &[usize]) -> Vec<f64> {
        (0..self.dim)
            .map(|j| self.min[j] + idx[j] as f64 * self.spacing(j))
            .collect()
    }

    pub fn point_flat(&self, flat: usize) -> Vec<f64> {
        self.point(&self.unflat(flat))
    }

    /// Composite trapezoid weight of a node (product of per-axis weights).
    pub fn weight(&self, idx: &[usize]) -> f64 {
        let mut w = 1.0;
        for j in 0..self.dim {
            let edge = idx[j] == 0 || idx[j] == self.cells[j];
            w *= self.spacing(j) * if edge { 0.5 } else { 1.0 };
        }
        w
    }

    pub fn weight_flat(&self, flat: usize) -> f64 {
        self.weight(&self.unflat(flat))
    }

    /// Node-in-ball indicator over the flat node ordering.
    pub fn mask(&self, ball: &Ball) -> Vec<bool> {
        (0..self.node_count())
            .map(|f| ball.contains(&self.point_flat(f)))
            .collect()
    }

    /// Whether the closed ball lies inside the grid box.
    pub fn contains_ball(&self, ball: &Ball) -> bool {
        (0..self.dim).all(|j| {
            ball.center[j] - ball.radius >= self.min[j] - 1e-12
                && ball.center[j] + ball.radius <= self.max[j] + 1e-12
        })
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        (0..self.dim).all(|j| x[j] >= self.min[j] - 1e-12 && x[j] <= self.max[j] + 1e-12)
    }

    /// Nearest node (flat index) to a physical point.
    pub fn nearest_node(&self, x: &[f64]) -> usize {
        let idx: Vec<usize> = (0..self.dim)
            .map(|j| {
                let t = (x[j] - self.min[j]) / self.spacing(j);
                (t.round().max(0.0) as usize).min(self.cells[j])
            })
            .collect();
        self.flat(&idx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_and_counts() {
        let g = Grid::symmetric(1, 1.0, 16).unwrap();
        assert_eq!(g.node_count(), 17);
        assert!((g.spacing(0) - 0.125).abs() < 1e-15);
        let g2 = Grid::symmetric(2, 1.0, 8).unwrap();
        assert_eq!(g2.node_count(), 81);
    }

    #[test]
    fn flat_roundtrip() {
        let g = Grid::symmetric(2, 1.0, 8).unwrap();
        for f in 0..g.node_count() {
            assert_eq!(g.flat(&g.unflat(f)), f);
        }
    }

    #[test]
    fn trapezoid_integrates_linear_exactly() {
        // ∫_{-1}^{1} (x + 2) dx = 4
        let g = Grid::symmetric(1, 1.0, 32).unwrap();
        let total: f64 = (0..g.node_count())
            .map(|f| {
                let x = g.point_flat(f)[0];
                g.weight_flat(f) * (x + 2.0)
            })
            .sum();
        assert!((total - 4.0).abs() < 1e-13);
    }

    #[test]
    fn trapezoid_2d_constant() {
        // ∫∫_{(-1,1)²} 1 = 4
        let g = Grid::symmetric(2, 1.0, 16).unwrap();
        let total: f64 = (0..g.node_count()).map(|f| g.weight_flat(f)).sum();
        assert!((total - 4.0).abs() < 1e-13);
    }

    #[test]
    fn ball_mask_counts() {
        let g = Grid::symmetric(1, 1.0, 16).unwrap();
        let mask = g.mask(&Ball::closed(vec![0.0], 0.5));
        let count = mask.iter().filter(|&&m| m).count();
        // nodes at -0.5, -0.4375, ..., 0.5 → 9 nodes
        assert_eq!(count, 9);
    }

    #[test]
    fn rejects_bad_cells() {
        assert!(Grid::symmetric(1, 1.0, 12).is_err());
        assert!(Grid::symmetric(1, 1.0, 4).is_err());
    }

    #[test]
    fn ball_containment() {
        let g = Grid::symmetric(1, 1.0, 16).unwrap();
        assert!(g.contains_ball(&Ball::closed(vec![0.25], 0.5)));
        assert!(!g.contains_ball(&Ball::closed(vec![0.75], 0.5)));
    }
}
