//! Landscape-function localization on lattice Schrödinger operators.
//!
//! Builds the discrete operator on a torus or box grid, solves for the
//! landscape `u`, computes Agmon distances from the effective potential
//! `1/u`, partitions the wells and compares the low spectrum against the
//! spectra of the localized problems.

pub mod agmon;
pub mod eigensolve;
pub mod ensemble;
pub mod error;
pub mod grid;
pub mod instance;
pub mod landscape;
pub mod linalg;
pub mod operator;
pub mod output;
pub mod rng;
pub mod verify;
pub mod wells;

pub use error::{Error, Result};
