//! Noncommutative matrix functions through linear pencils and Schur complements.
//!
//! The crate builds matrix-valued functions `F(X_1, ..., X_k)` of tuples of
//! Hermitian matrices, certifies their order properties numerically, and
//! produces explicit pencil/Schur-complement representations that can be
//! evaluated on Hermitian and on sectorial (complex) inputs.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cert;
pub mod cli;
pub mod error;
pub mod freefun;
pub mod matcore;
pub mod pencil;
pub mod represent;
pub mod schur;

pub use error::{Error, Result};
pub use matcore::{GenMat, HermMat, MatTuple, Tolerances, C64};
