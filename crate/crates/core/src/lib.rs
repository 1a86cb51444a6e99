//! Exact workbench for the reduction chain Gap-3SAT → Gap-2SAT →
//! bounded-minima CVP → gap-SIVP, with brute-force l_p lattice solvers that
//! certify each promise on small instances.

pub mod cli;
pub mod error;
pub mod exactmath;
pub mod gapsat;
pub mod lattice;
pub mod reductions;
pub mod satcore;
pub mod solvers;
pub mod verify;

pub use error::{Error, Result};
