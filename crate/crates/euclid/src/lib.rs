//! Discretized one-dimensional Calderón–Zygmund bench: exact-quadrature
//! principal-value kernels, smooth grand maximal functions over finite bump
//! dictionaries, Whitney and smooth Calderón–Zygmund decompositions, the
//! sparse extraction pipeline and the weighted Hilbert sharpness
//! experiment.

pub mod bumps;
pub mod cutoff;
pub mod czdecomp;
pub mod error;
pub mod experiments;
pub mod kernel;
pub mod line;
pub mod maximal;
pub mod pipeline;
pub mod sharp;

pub use error::{Error, Result};
pub use kernel::{hilbert_transform, CZKernelSpec, KernelKind};
pub use line::{CellRange, LineFunction, LineGrid};
