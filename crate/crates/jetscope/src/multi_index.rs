//! Multi-indices and the enumeration of Ξ(n, k).

use std::fmt;

/// A multi-index β = (β₁, …, βₙ) of nonnegative integers, n ≤ 2 in practice
/// but the type supports any dimension.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn new(components: Vec<usize>) -> Self {
        MultiIndex(components)
    }

    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    /// The unit multi-index e_j (1 in axis `j`, zero elsewhere).
    pub fn unit(n: usize, j: usize) -> Self {
        let mut c = vec![0; n];
        c[j] = 1;
        MultiIndex(c)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// |β| = Σ βⱼ.
    pub fn order(&self) -> usize {
        self.0.iter().sum()
    }

    /// β! = Π βⱼ!.
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&b| factorial(b)).product()
    }

    /// Multinomial weight k!/β! with k = |β|, used in the symmetric-tensor
    /// inner-product norm ‖D^kθ‖² = Σ_{β∈Ξ(n,k)} (k!/β!) (D^βθ)².
    pub fn multinomial_weight(&self) -> f64 {
        factorial(self.order()) / self.factorial()
    }

    /// (x − a)^β componentwise.
    pub fn monomial(&self, x: &[f64], a: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x.iter().zip(a.iter()))
            .map(|(&b, (&xi, &ai))| (xi - ai).powi(b as i32))
            .product()
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    /// Componentwise subtraction; `None` when any component would go negative.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, b) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{b}")?;
        }
        write!(f, ")")
    }
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// All multi-indices of exact order `k` in dimension `n`, in graded
/// lexicographic order (first component decreasing first).
pub fn enumerate_multiindices(n: usize, k: usize) -> Vec<MultiIndex> {
    assert!(n >= 1, "dimension must be positive");
    let mut out = Vec::new();
    let mut current = vec![0usize; n];
    fill(&mut out, &mut current, 0, k);
    out
}

fn fill(out: &mut Vec<MultiIndex>, current: &mut Vec<usize>, axis: usize, remaining: usize) {
    if axis + 1 == current.len() {
        current[axis] = remaining;
        out.push(MultiIndex(current.clone()));
        current[axis] = 0;
        return;
    }
    for v in (0..=remaining).rev() {
        current[axis] = v;
        fill(out, current, axis + 1, remaining - v);
    }
    current[axis] = 0;
}

/// All multi-indices of order ≤ `k` (graded, then lexicographic within a grade).
/// `k = -1` yields the empty list (the zero polynomial's basis).
pub fn enumerate_upto(n: usize, k: i64) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    if k < 0 {
        return out;
    }
    for grade in 0..=(k as usize) {
        out.extend(enumerate_multiindices(n, grade));
    }
    out
}
