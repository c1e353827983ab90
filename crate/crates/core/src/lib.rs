//! Green's functions, optimal Hardy weights and Rellich weights of
//! divergence-form operators `L = ∇* a ∇` on finite boxes of `Z^d`, with
//! independent oracles and Monte Carlo tools for random coefficient fields.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ensemble;
pub mod error;
pub mod field_io;
pub mod fourier;
pub mod green;
pub mod hardy;
pub mod lattice;
pub mod report;
pub mod rng;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
