//! Truncated Fourier expansions of Siegel and Jacobi theta series of even
//! unimodular lattices, the degree-lowering operators acting on them, and
//! numerical evaluation on the Siegel-Jacobi space.

pub mod config;
mod enumerate;
pub mod error;
pub mod expansion;
pub mod lattice;
pub mod matrix;
pub mod numeric;
pub mod operators;
pub mod schottky;
pub mod theta;

pub use config::{Limits, RunConfig};
pub use error::{Error, Result};
pub use expansion::{Coeff, HalfIntegralMatrix, JacobiExpansion, JacobiIndex, JacobiKey, SiegelExpansion};
pub use lattice::{catalog_lattice, direct_sum, Catalog, EvenLattice, NormProfile};
pub use matrix::IntMatrix;
