//! Radially symmetric compressible Navier-Stokes flow with density-dependent
//! (BD-type) viscosities, solved in Lagrangian mass coordinates.

// Negated comparisons reject NaN along with out-of-range values; stencils
// index several arrays at once.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod commands;
pub mod continuation;
pub mod diagnostics;
pub mod error;
pub mod geometry;
pub mod initial_data;
pub mod io;
pub mod regime;
pub mod solver;

pub use error::{Error, Result};
