//! Small dense solves and banded Cholesky for the grid operators.
//!
//! Everything at desk scale fits a direct banded factorization: the largest
//! system (256² nodes, 2D Laplacian) has bandwidth ≈ one grid row and
//! factors in a few seconds. Dense elimination covers the small Gram and
//! normal-equation systems from jet fitting.

use crate::error::{JetscopeError, Result};

/// Solve A x = b by Gaussian elimination with partial pivoting.
/// Also returns a cheap condition estimate (max/min pivot magnitude).
pub fn solve_dense(a: &[Vec<f64>], b: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().map(|row| row.clone()).collect();
    let mut rhs = b.to_vec();
    let mut max_piv: f64 = 0.0;
    let mut min_piv = f64::INFINITY;
    for col in 0..n {
        let (pivot_row, pivot) = (col..n)
            .map(|r| (r, m[r][col].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        if pivot == 0.0 {
            return Err(JetscopeError::SingularSystem(format!(
                "zero pivot at column {col}"
            )));
        }
        max_piv = max_piv.max(pivot);
        min_piv = min_piv.min(pivot);
        m.swap(col, pivot_row);
        rhs.swap(col, pivot_row);
        for r in col + 1..n {
            let factor = m[r][col] / m[col][col];
            if factor != 0.0 {
                for c in col..n {
                    m[r][c] -= factor * m[col][c];
                }
                rhs[r] -= factor * rhs[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut s = rhs[r];
        for c in r + 1..n {
            s -= m[r][c] * x[c];
        }
        x[r] = s / m[r][r];
    }
    Ok((x, max_piv / min_piv))
}

/// Symmetric positive definite band matrix, upper triangle stored by rows:
/// `data[i * (bw + 1) + d]` holds A[i, i+d] for 0 ≤ d ≤ bw.
#[derive(Debug, Clone)]
pub struct BandedSpd {
    pub n: usize,
    pub bw: usize,
    pub data: Vec<f64>,
}

impl BandedSpd {
    pub fn zeros(n: usize, bw: usize) -> Self {
        BandedSpd {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    /// Add v to A[i, j] (and by symmetry A[j, i]); requires |i − j| ≤ bw.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        let d = hi - lo;
        assert!(
            d <= self.bw,
            "entry ({i},{j}) outside bandwidth {}",
            self.bw
        );
        self.data[lo * (self.bw + 1) + d] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        let d = hi - lo;
        if d > self.bw {
            0.0
        } else {
            self.data[lo * (self.bw + 1) + d]
        }
    }

    /// y = A x.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let dmax = self.bw.min(self.n - 1 - i);
            y[i] += self.data[i * (self.bw + 1)] * x[i];
            for d in 1..=dmax {
                let a = self.data[i * (self.bw + 1) + d];
                if a != 0.0 {
                    y[i] += a * x[i + d];
                    y[i + d] += a * x[i];
                }
            }
        }
        y
    }

    /// Max absolute row sum, for backward-error scaling.
    pub fn norm_inf(&self) -> f64 {
        let mut rows = vec![0.0f64; self.n];
        for i in 0..self.n {
            let dmax = self.bw.min(self.n - 1 - i);
            rows[i] += self.data[i * (self.bw + 1)].abs();
            for d in 1..=dmax {
                let a = self.data[i * (self.bw + 1) + d].abs();
                rows[i] += a;
                rows[i + d] += a;
            }
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    /// Banded Cholesky A = L Lᵀ; fails on non-positive pivots.
    pub fn cholesky(&self) -> Result<BandedChol> {
        let n = self.n;
        let bw = self.bw;
        // l[i * (bw+1) + d] holds L[i, i−d]
        let mut l = vec![0.0; n * (bw + 1)];
        for j in 0..n {
            let mut s = self.get(j, j);
            let kmin = j.saturating_sub(bw);
            for k in kmin..j {
                let v = l[j * (bw + 1) + (j - k)];
                s -= v * v;
            }
            if s <= 0.0 || !s.is_finite() {
                return Err(JetscopeError::SingularSystem(format!(
                    "non-positive pivot {s:.3e} at row {j}"
                )));
            }
            let ljj = s.sqrt();
            l[j * (bw + 1)] = ljj;
            let imax = (j + bw).min(n - 1);
            for i in j + 1..=imax {
                let mut s = self.get(i, j);
                let kmin = i.saturating_sub(bw).max(j.saturating_sub(bw));
                for k in kmin..j {
                    s -= l[i * (bw + 1) + (i - k)] * l[j * (bw + 1) + (j - k)];
                }
                l[i * (bw + 1) + (i - j)] = s / ljj;
            }
        }
        Ok(BandedChol { n, bw, l })
    }
}

/// Lower-triangular band factor from [`BandedSpd::cholesky`].
#[derive(Debug, Clone)]
pub struct BandedChol {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandedChol {
    /// Solve A x = b given A = L Lᵀ.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let bw = self.bw;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = b[i];
            let kmin = i.saturating_sub(bw);
            for k in kmin..i {
                s -= self.l[i * (bw + 1) + (i - k)] * y[k];
            }
            y[i] = s / self.l[i * (bw + 1)];
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = y[i];
            let kmax = (i + bw).min(n - 1);
            for k in i + 1..=kmax {
                s -= self.l[k * (bw + 1) + (k - i)] * x[k];
            }
            x[i] = s / self.l[i * (bw + 1)];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_solve_3x3() {
        let a = vec![
            vec![4.0, 1.0, 0.0],
            vec![1.0, 3.0, -1.0],
            vec![0.0, -1.0, 2.0],
        ];
        let x_true = [1.0, -2.0, 0.5];
        let b: Vec<f64> = (0..3)
            .map(|i| (0..3).map(|j| a[i][j] * x_true[j]).sum())
            .collect();
        let (x, cond) = solve_dense(&a, &b).unwrap();
        for i in 0..3 {
            assert!((x[i] - x_true[i]).abs() < 1e-13);
        }
        assert!(cond >= 1.0);
    }

    #[test]
    fn dense_singular_detected() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(solve_dense(&a, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn banded_cholesky_tridiagonal() {
        // standard 1D Laplacian system: known solution
        let n = 64;
        let mut a = BandedSpd::zeros(n, 1);
        for i in 0..n {
            a.add(i, i, 2.0);
            if i + 1 < n {
                a.add(i, i + 1, -1.0);
            }
        }
        let x_true: Vec<f64> = (0..n).map(|i| ((i as f64) * 0.1).sin()).collect();
        let b = a.apply(&x_true);
        let x = a.cholesky().unwrap().solve(&b);
        for i in 0..n {
            assert!((x[i] - x_true[i]).abs() < 1e-10, "i={i}");
        }
    }

    #[test]
    fn banded_wide_band_matches_dense() {
        let n = 12;
        let bw = 4;
        let mut a = BandedSpd::zeros(n, bw);
        // diagonally dominant random-ish SPD fill
        for i in 0..n {
            a.add(i, i, 10.0 + i as f64);
            for d in 1..=bw.min(n - 1 - i) {
                a.add(i, i + d, 1.0 / (1.0 + (i + d) as f64));
            }
        }
        let dense: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| a.get(i, j)).collect())
            .collect();
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).cos()).collect();
        let xb = a.cholesky().unwrap().solve(&b);
        let (xd, _) = solve_dense(&dense, &b).unwrap();
        for i in 0..n {
            assert!((xb[i] - xd[i]).abs() < 1e-11);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut a = BandedSpd::zeros(3, 1);
        a.add(0, 0, 1.0);
        a.add(1, 1, -1.0);
        a.add(2, 2, 1.0);
        assert!(a.cholesky().is_err());
    }
}
