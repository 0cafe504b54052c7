//! Spectra of Ruelle transfer operators on one-sided topological Markov
//! shifts, computed through finite-rank approximations on locally constant
//! subspaces, with dynamical zeta functions, trace-formula verification and
//! the quantitative operator bounds that certify them.

pub mod diagnostics;
pub mod error;
pub mod potential;
pub mod shift;
pub mod transfer;
pub mod zeta;

pub use error::{Error, Result};
