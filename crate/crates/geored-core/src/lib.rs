//! Exact symbolic machinery for k-contact and k-symplectic geometry on coordinate charts.
//!
//! Everything upstream of the numerical integrators works over exact rationals: expressions are
//! kept in a rational-function normal form, pointwise linear algebra is fraction-free, and subspace
//! comparisons are decided by exact ranks.

#![cfg_attr(not(test), no_std)]
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod dynamics;
pub mod error;
pub mod exterior;
pub mod lie;
pub mod linalg;
pub mod reduction;
pub mod report;
pub mod sampling;
pub mod structures;
pub mod symbolic;

pub use error::{Error, Result};
pub use symbolic::{Chart, Expr, Point, Q};
