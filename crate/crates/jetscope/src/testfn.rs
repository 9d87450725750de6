//! Symbolic bump test functions with exact derivatives of every order.
//!
//! A test function is stored as
//!
//! ```text
//! θ(x) = N(y) / w(y)^m · exp(-1/w(y)),   y = (x - c)/ρ,   w = 1 - |y|²,
//! ```
//!
//! supported in the closed ball B(c, ρ). Differentiating keeps the form:
//!
//! ```text
//! ∂_{y_j} [N w^{-m} e^{-1/w}] = [N_j w² + 2m y_j N w - 2 y_j N] w^{-m-2} e^{-1/w},
//! ```
//!
//! so the denominator stays a pure power of w and the numerator degree grows
//! by two per derivative. Blow-up rescaling θ(r⁻¹(x−a)) is a frame change and
//! never touches the rational data.

use crate::error::{JetscopeError, Result};
use crate::grid::Ball;
use crate::multi_index::MultiIndex;
use crate::poly::Poly;

#[derive(Debug, Clone)]
pub struct TestFunction {
    pub dim: usize,
    /// Support ball center in physical coordinates.
    pub center: Vec<f64>,
    /// Support ball radius in physical coordinates.
    pub radius: f64,
    /// Numerator polynomial in the reference coordinate y.
    pub num: Poly,
    /// Denominator exponent: den = w^den_pow.
    pub den_pow: usize,
}

impl TestFunction {
    /// The standard profile Φ(x) = exp(−1/(1−|x|²)) on |x| < 1.
    pub fn standard_bump(dim: usize) -> Self {
        TestFunction {
            dim,
            center: vec![0.0; dim],
            radius: 1.0,
            num: Poly::one(dim),
            den_pow: 0,
        }
    }

    /// Bump supported on B(center, radius): Φ((x−center)/radius).
    pub fn bump_in(center: Vec<f64>, radius: f64) -> Self {
        let dim = center.len();
        TestFunction {
            dim,
            center,
            radius,
            num: Poly::one(dim),
            den_pow: 0,
        }
    }

    pub fn support(&self) -> Ball {
        Ball::closed(self.center.clone(), self.radius)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut norm2 = 0.0;
        let mut y = vec![0.0; self.dim];
        for j in 0..self.dim {
            y[j] = (x[j] - self.center[j]) / self.radius;
            norm2 += y[j] * y[j];
        }
        let w = 1.0 - norm2;
        if w <= 0.0 {
            return 0.0;
        }
        let e = (-1.0 / w).exp();
        if e == 0.0 {
            return 0.0;
        }
        self.num.eval(&y) * e / w.powi(self.den_pow as i32)
    }

    /// Exact partial derivative ∂/∂x_j, closed under the representation.
    pub fn partial(&self, j: usize) -> TestFunction {
        let y_j = Poly::coordinate(self.dim, j);
        let w = Poly::constant(self.dim, 1.0).sub(&Poly::norm_squared(self.dim));
        let m = self.den_pow as f64;
        let num = self
            .num
            .diff(j)
            .mul(&w)
            .mul(&w)
            .add(&y_j.mul(&self.num).mul(&w).scale(2.0 * m))
            .sub(&y_j.mul(&self.num).scale(2.0))
            .scale(1.0 / self.radius);
        TestFunction {
            dim: self.dim,
            center: self.center.clone(),
            radius: self.radius,
            num,
            den_pow: self.den_pow + 2,
        }
    }

    /// D^β θ by iterating [`partial`].
    pub fn derivative(&self, beta: &MultiIndex) -> TestFunction {
        let mut out = self.clone();
        for (j, &b) in beta.0.iter().enumerate() {
            for _ in 0..b {
                out = out.partial(j);
            }
        }
        out
    }

    /// Pointwise product with the ambient coordinate X_j(x) = x_j.
    pub fn coordinate_multiply(&self, j: usize) -> Result<TestFunction> {
        if j >= self.dim {
            return Err(JetscopeError::InvalidInput(format!(
                "axis {j} out of range for dimension {}",
                self.dim
            )));
        }
        // x_j = center_j + radius · y_j
        let factor = Poly::constant(self.dim, self.center[j])
            .add(&Poly::coordinate(self.dim, j).scale(self.radius));
        Ok(TestFunction {
            dim: self.dim,
            center: self.center.clone(),
            radius: self.radius,
            num: self.num.mul(&factor),
            den_pow: self.den_pow,
        })
    }

    /// The blow-up substitution x ↦ θ(r⁻¹(x − a)): a pure frame change.
    pub fn rescaled(&self, a: &[f64], r: f64) -> TestFunction {
        let center = (0..self.dim).map(|j| a[j] + r * self.center[j]).collect();
        TestFunction {
            dim: self.dim,
            center,
            radius: r * self.radius,
            num: self.num.clone(),
            den_pow: self.den_pow,
        }
    }

    pub fn scale(&self, c: f64) -> TestFunction {
        TestFunction {
            dim: self.dim,
            center: self.center.clone(),
            radius: self.radius,
            num: self.num.scale(c),
            den_pow: self.den_pow,
        }
    }
}
