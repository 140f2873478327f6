//! Finite-volume numerics for translation-invariant states on spin chains:
//! mean entropy, pressure and the variational principle, lower-deviation
//! projections and typical projections with their equipartition bounds.
//!
//! Every local algebra is a block-diagonal matrix algebra equipped with a
//! tracial reference state `τ`. The chain models in [`model`] realize local
//! algebras `A_n` as full matrix algebras over `n + w − 1` sites, where `w`
//! is the window width of an interval algebra.

pub mod algebra;
pub mod entropy;
pub mod error;
pub mod model;
pub mod pressure;
pub mod states;
pub mod typicality;

pub use error::{Error, Result};
