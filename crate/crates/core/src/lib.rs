#![no_std]
#![cfg_attr(test, allow(unused_imports))]
//! Concave penalized least squares: penalties, design diagnostics, solvers,
//! synthetic instances and executable checks of the error and sparsity bounds.

extern crate alloc;

pub mod design;
pub mod error;
pub mod linalg;
pub mod lp;
pub mod penalty;
pub mod simulate;
pub mod solvers;
pub mod verify;

pub use design::{DesignMatrix, SupportSet};
pub use error::{Error, Result};
pub use penalty::{DerivSide, Family, Penalty, PenaltyConfig};
