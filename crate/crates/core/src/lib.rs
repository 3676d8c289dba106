//! A finite-resolution laboratory for cancellative sparse domination.
//!
//! The crate models the filtered probability space `[0,1)` at a finite
//! dyadic depth, with conditional expectations, conditional percentiles
//! (medians at ratio 1/2), Doob and percentile maximal functions,
//! martingale transforms, square functions and Haar shifts. On top of the
//! operators it builds sparse families of sets in both the adapted
//! (filtration) and flat (witness) representations, implements the
//! extraction algorithms that produce them, and audits every domination
//! inequality pointwise with explicit constants.
//!
//! All constructions keep cube averages of dyadic-rational inputs exact in
//! `f64`, so equality-style audits are bit-for-bit rather than tolerance
//! based wherever the underlying identity is exact.

pub mod biparam;
pub mod counterexample;
pub mod error;
pub mod extract;
pub mod grid;
pub mod haar;
pub mod io;
pub mod martingale;
pub mod percentile;
pub mod report;
pub mod sparse;
pub mod transform;
pub mod weights;

pub use error::{Error, Result};
pub use grid::{Cube, DyadicGrid, GridFunction, StoppingTime};
pub use report::DominationReport;
