//! Numerical construction and verification of bifurcating Schiffer domains.

// `!(x < tol)` is used on purpose: a NaN must take the failure branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod field_discretization;
pub mod linear_analysis;
pub mod branch_continuation;
pub mod cylinder_model;
pub mod specfun;
pub mod sphere_branch;
pub mod sphere_spectral;

pub use error::{Error, Result};
pub use exec::Execution;
