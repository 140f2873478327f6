//! Block-diagonal finite-dimensional operator algebras: elements, traces,
//! spectral calculus and site embeddings.

pub mod block;
pub mod element;
pub mod random;
pub mod sites;
pub mod spectral;

pub use block::Block;
pub use element::{BlockAlgebra, BlockElement, HermitianElement, Projection, PROJECTION_TOL, SYMMETRY_TOL};
pub use sites::{embed, kron_all, partial_trace, reduce, site_count, tensor_power};
pub use spectral::{
    eigendecompose, matrix_exp, matrix_log, spectral_projection, support_projection, BlockEigen, EigenDecomposition,
    Eigenbasis, Interval, Selection, Spectrum, LOG_FLOOR, SPECTRAL_EPS,
};
