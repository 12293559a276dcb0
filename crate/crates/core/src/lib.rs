//! Hermitian-square certificates and trace-positivity probes for quadratic
//! elements of the free group algebra.
//!
//! Elements are represented exactly in [`group_algebra`]; positivity is
//! tested numerically by evaluating normalized traces on tuples of unitary
//! matrices ([`positivity`]), certified by Hermitian squares
//! ([`certificates`]), and correlation matrices are realized by unitary
//! tuples through a Pauli chain ([`clifford`]).

pub mod certificates;
pub mod clifford;
pub mod error;
pub mod group_algebra;
pub mod io;
pub mod linalg;
pub mod positivity;
pub mod random;
pub mod selftest;
pub mod tolerances;

pub use error::{Error, Result};
pub use nalgebra;
pub use num_complex;
pub use tolerances::Tolerances;

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 0xC0FFEE;
