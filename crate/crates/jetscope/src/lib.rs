//! Pointwise differentials of distributions on grids.
//!
//! `jetscope` measures how regular a distribution T is at a single point a,
//! in the ν_{i,p} sense: it rescales T around a (the blow-up T^{a,r}),
//! subtracts best-fitting polynomial k-jets, measures what is left in
//! negative-order Sobolev moduli, and reads the (k, α) differentiability
//! order off the decay of those residuals across a dyadic ladder of scales.
//!
//! The crate also carries the supporting machinery this analysis rests on —
//! Poincaré-type inequalities with constructive polynomials, a zero-boundary
//! poly-Laplacian solver that converts negative norms into Hilbert norms at
//! p = 2, the deformation identity tying blow-ups at different scales
//! together, and the Whitney cover / partition-of-unity gluing used in the
//! almost-everywhere upgrade — each with numerical verifiers.

pub mod classify;
pub mod demo;
pub mod distribution;
pub mod error;
pub mod field;
pub mod grid;
pub mod io;
pub mod jet;
pub mod jets;
pub mod linalg;
pub mod multi_index;
pub mod norms;
pub mod pde;
pub mod poly;
pub mod quad;
pub mod report;
pub mod rescale;
pub mod spline;
pub mod testfn;
pub mod whitney;

pub use error::{JetscopeError, Result};

// Compile and run the guide's code snippets as doc-tests so the book can
// never drift from the library.
#[cfg(doctest)]
mod book_snippets {
    #[doc = include_str!("../../../book/src/quickstart.md")]
    mod quickstart {}
    #[doc = include_str!("../../../book/src/orders.md")]
    mod orders {}
    #[doc = include_str!("../../../book/src/norms.md")]
    mod norms {}
    #[doc = include_str!("../../../book/src/rescale.md")]
    mod rescale {}
    #[doc = include_str!("../../../book/src/pde.md")]
    mod pde {}
    #[doc = include_str!("../../../book/src/whitney.md")]
    mod whitney {}
}
