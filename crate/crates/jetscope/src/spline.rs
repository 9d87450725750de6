//! Zero-boundary tensor-product cubic B-spline test spaces.
//!
//! These are the finite-dimensional ansatz spaces for the optimization route
//! of the negative-order dual norm: every member vanishes (with two
//! continuous derivatives) outside the region, and derivatives up to order 3
//! are exact piecewise polynomials.

use crate::grid::{Ball, Grid};
use crate::multi_index::MultiIndex;

/// The cardinal cubic B-spline on (−2, 2), unit integral scaling omitted.
pub fn bspline3(t: f64) -> f64 {
    let a = t.abs();
    if a >= 2.0 {
        0.0
    } else if a >= 1.0 {
        let s = 2.0 - a;
        s * s * s / 6.0
    } else {
        2.0 / 3.0 - a * a + a * a * a / 2.0
    }
}

/// d-th derivative of the cardinal cubic B-spline, 0 ≤ d ≤ 3.
pub fn bspline3_deriv(t: f64, d: usize) -> f64 {
    match d {
        0 => bspline3(t),
        1 => {
            let a = t.abs();
            let sign = if t < 0.0 { -1.0 } else { 1.0 };
            if a >= 2.0 {
                0.0
            } else if a >= 1.0 {
                let s = 2.0 - a;
                sign * (-s * s / 2.0)
            } else {
                sign * (-2.0 * a + 1.5 * a * a)
            }
        }
        2 => {
            let a = t.abs();
            if a >= 2.0 {
                0.0
            } else if a >= 1.0 {
                2.0 - a
            } else {
                -2.0 + 3.0 * a
            }
        }
        3 => {
            let a = t.abs();
            let sign = if t < 0.0 { -1.0 } else { 1.0 };
            if a >= 2.0 {
                0.0
            } else if a >= 1.0 {
                -sign
            } else {
                3.0 * sign
            }
        }
        _ => panic!("cubic spline has no derivative of order {d}"),
    }
}

/// Tensor-product basis {Π_j B((x_j − c_j)/spacing)} with all supports
/// strictly inside a target ball.
#[derive(Debug, Clone)]
pub struct SplineBasis {
    pub dim: usize,
    pub spacing: f64,
    /// Lower corner of the knot lattice (= lower corner of the ball's box).
    pub lo: Vec<f64>,
    /// Knot intervals per axis.
    pub intervals: usize,
    /// Basis-function centers, in a fixed deterministic order.
    pub centers: Vec<Vec<f64>>,
    /// Per-axis knot index of each center (center = lo + index · spacing).
    pub lattice: Vec<Vec<usize>>,
}

impl SplineBasis {
    /// Build the largest zero-boundary basis for `ball`, respecting a total
    /// dimension cap. Knot spacing is the grid spacing times 2^coarsen
    /// (coarsened further if the cap demands), so spacings nest dyadically
    /// and extrapolation over two levels is meaningful.
    pub fn for_ball(ball: &Ball, grid: &Grid, cap: usize, coarsen: u32) -> SplineBasis {
        let dim = ball.dim();
        // per-axis count ≈ cap^(1/dim)
        let per_axis_cap = match dim {
            1 => cap,
            _ => (cap as f64).sqrt().floor() as usize,
        };
        let h = (0..dim).map(|j| grid.spacing(j)).fold(f64::MIN, f64::max);
        let mut spacing = h * (1u64 << coarsen) as f64;
        loop {
            let intervals = (2.0 * ball.radius / spacing).floor() as usize;
            if intervals.saturating_sub(3) <= per_axis_cap {
                break;
            }
            spacing *= 2.0;
        }
        let half = ball.radius;
        let k = (2.0 * half / spacing).floor() as usize;
        let mut centers = Vec::new();
        let mut lattice = Vec::new();
        let lo: Vec<f64> = (0..dim).map(|j| ball.center[j] - half).collect();
        if k >= 4 {
            let mut idx = vec![2usize; dim];
            // iterate the tensor lattice of admissible per-axis knots 2..=k−2
            'outer: loop {
                let c: Vec<f64> = (0..dim).map(|j| lo[j] + idx[j] as f64 * spacing).collect();
                // support box corners must lie inside the ball
                let inside = corners(&c, 2.0 * spacing).all(|p| ball.contains(&p));
                if inside {
                    centers.push(c);
                    lattice.push(idx.clone());
                }
                // odometer increment
                for j in (0..dim).rev() {
                    idx[j] += 1;
                    if idx[j] + 2 <= k {
                        continue 'outer;
                    }
                    idx[j] = 2;
                    if j == 0 {
                        break 'outer;
                    }
                }
            }
        }
        SplineBasis {
            dim,
            spacing,
            lo,
            intervals: k,
            centers,
            lattice,
        }
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// D^β of basis member m at x (exact).
    pub fn eval_deriv(&self, m: usize, beta: &MultiIndex, x: &[f64]) -> f64 {
        let c = &self.centers[m];
        let mut v = 1.0;
        for j in 0..self.dim {
            let t = (x[j] - c[j]) / self.spacing;
            v *= bspline3_deriv(t, beta.0[j]) / self.spacing.powi(beta.0[j] as i32);
        }
        v
    }

    /// Half-width of each member's support box.
    pub fn support_halfwidth(&self) -> f64 {
        2.0 * self.spacing
    }
}

/// Corner points of the box c ± halfwidth.
fn corners(c: &[f64], halfwidth: f64) -> impl Iterator<Item = Vec<f64>> + '_ {
    let dim = c.len();
    (0..(1usize << dim)).map(move |bits| {
        (0..dim)
            .map(|j| {
                if bits >> j & 1 == 1 {
                    c[j] + halfwidth
                } else {
                    c[j] - halfwidth
                }
            })
            .collect()
    })
}
