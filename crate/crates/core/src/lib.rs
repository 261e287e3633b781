//! Von Neumann spectral invariants of periodic simplicial complexes and closed-form
//! hyperbolic models: Whitney Laplacians, heat traces and theta functions, gap-shifted
//! decay exponents, regularized zeta functions, determinants and torsion.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bloch;
pub mod complex;
pub mod error;
pub mod hyperbolic;
pub mod lab;
pub mod quadrature;
pub mod special;
pub mod spectral;
pub mod whitney;
pub mod zeta;

pub use error::{Error, Result};
