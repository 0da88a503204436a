//! Anisotropic nonlocal operators whose jump kernel is a sum of
//! one-dimensional fractional kernels with a different order per axis.
//!
//! The crate covers the geometry of anisotropic rectangles, kernel families
//! and their structural checks, grid discretization of the operator, energy
//! forms, a Dirichlet solver, regularity diagnostics and a Monte Carlo
//! simulator for the associated jump process.

pub mod energy;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod harness;
pub mod kernels;
pub mod numerics;
pub mod operator;
pub mod solver;
pub mod spectral;
pub mod stable_mc;
mod tails;

pub use error::{Error, Result};
pub use geometry::{AnisoRect, AnisotropyIndices, BoxRegion, ScaleMap};
pub use grid::{ExteriorBox, ExteriorPolicy, GridFunction, TensorGrid};
pub use kernels::{Coefficient, KernelFamily, KernelQuery};

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
