//! Regime identification and reconstruction for the cubic-quintic
//! Ginzburg-Landau equation from a handful of point sensors.
//!
//! The pipeline has two halves. Offline, each parameter regime is simulated
//! ([`cqgle`]), its snapshots are compressed into a truncated POD basis
//! ([`pod`]) and the bases are concatenated into an overcomplete
//! [`library::ModalLibrary`]. Online, a few noisy point measurements
//! ([`sensing`]) are explained by a sparse combination of library columns
//! ([`sparse`]); the block carrying the most weight names the regime
//! ([`classify`]), and a Galerkin model on that block's modes evolves the
//! state forward ([`rom`]). [`harness`] wires these into the switching and
//! Monte-Carlo experiments.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt;

use serde::{Deserialize, Serialize};

pub mod classify;
pub mod cqgle;
pub mod error;
pub mod harness;
pub mod library;
pub mod linalg;
pub mod pod;
pub mod rom;
pub mod sensing;
pub mod sparse;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Label of a bifurcation regime (the `j` in β_j).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RegimeId(pub u32);

impl fmt::Display for RegimeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub type CMatrix = nalgebra::DMatrix<Complex64>;
pub type CVector = nalgebra::DVector<Complex64>;
