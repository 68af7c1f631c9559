//! Finite-dimensional von Neumann categories.
//!
//! The crate models the premonoidal dagger category `Hilb_H` for a fixed
//! finite-dimensional `H`, computes commutants and double commutants of
//! arrow sets over a finite object universe, builds discrete crossed
//! products, and checks Einstein causality for toy nets on a 1+1 lattice.

pub mod causal;
pub mod commutant;
pub mod crossed;
pub mod error;
pub mod hilb;
pub mod linalg;
pub mod report;
pub mod scenario;

pub use error::{Error, Result};
