//! Atomic approximation of Wardrop equilibria in nonatomic parallel routing games.

pub mod aas;
pub mod analysis;
pub mod equilibrium;
pub mod error;
pub mod game;
pub mod quadrature;
pub mod sets;
pub mod vecops;

pub use error::{Error, Result};
