//! Built-in demo signals, so analyses and verification suites run without
//! external data. Each generator samples a closed-form profile with a known
//! pointwise order at the origin: |x| is (0,1), x|x| is (1,1), the jump is
//! (−1,1), the Weierstrass-type sum Σ 2^{−βm} cos(2^m π x) has Hölder
//! exponent β, and the smooth and bump profiles are of every order up to
//! the classifier cap.

use std::str::FromStr;

use crate::error::{JetscopeError, Result};
use crate::field::SampledField;
use crate::grid::Grid;
use crate::testfn::TestFunction;

#[derive(Debug, Clone, PartialEq)]
pub enum DemoSignal {
    AbsX,
    XAbsX,
    Heaviside,
    Weierstrass { beta: f64, m_max: u32 },
    Smooth,
    Bump,
}

impl FromStr for DemoSignal {
    type Err = JetscopeError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "absx" => return Ok(DemoSignal::AbsX),
            "xabsx" => return Ok(DemoSignal::XAbsX),
            "heaviside" => return Ok(DemoSignal::Heaviside),
            "smooth" => return Ok(DemoSignal::Smooth),
            "bump" => return Ok(DemoSignal::Bump),
            _ => {}
        }
        if let Some(args) = s
            .strip_prefix("weierstrass(")
            .and_then(|t| t.strip_suffix(')'))
        {
            let parts: Vec<&str> = args.split(',').map(str::trim).collect();
            if parts.len() == 2 {
                let beta: f64 = parts[0].parse().map_err(|_| bad_signal(s))?;
                let m_max: u32 = parts[1].parse().map_err(|_| bad_signal(s))?;
                if beta > 0.0 {
                    return Ok(DemoSignal::Weierstrass { beta, m_max });
                }
            }
        }
        Err(bad_signal(s))
    }
}

fn bad_signal(s: &str) -> JetscopeError {
    JetscopeError::InvalidInput(format!(
        "unknown demo signal '{s}'; expected absx, xabsx, heaviside, \
         weierstrass(beta,m_max), smooth, or bump"
    ))
}

impl DemoSignal {
    /// The profile value at a point; non-radial signals read the first
    /// coordinate.
    pub fn value(&self, x: &[f64], grid: &Grid) -> f64 {
        let t = x[0];
        match self {
            DemoSignal::AbsX => t.abs(),
            DemoSignal::XAbsX => t * t.abs(),
            DemoSignal::Heaviside => {
                if t > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            DemoSignal::Weierstrass { beta, m_max } => (0..=*m_max)
                .map(|m| {
                    let freq = f64::powi(2.0, m as i32);
                    freq.powf(-beta) * (freq * std::f64::consts::PI * t).cos()
                })
                .sum(),
            DemoSignal::Smooth => (2.0 * t + 0.5).sin(),
            DemoSignal::Bump => {
                let half = (0..grid.dim)
                    .map(|j| (grid.max[j] - grid.min[j]) / 2.0)
                    .fold(f64::INFINITY, f64::min);
                let center: Vec<f64> = (0..grid.dim)
                    .map(|j| (grid.max[j] + grid.min[j]) / 2.0)
                    .collect();
                TestFunction::bump_in(center, 0.7 * half).eval(x)
            }
        }
    }

    pub fn sample(&self, grid: &Grid) -> Result<SampledField> {
        SampledField::from_fn(grid.clone(), |x| self.value(x, grid))
    }
}
