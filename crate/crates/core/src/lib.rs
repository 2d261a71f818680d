//! Numerical calculus on Carnot groups, a finite-difference solver for
//! capacitary condenser problems, and starshapedness checks for the level
//! sets of the resulting potentials.

pub mod algebra;
pub mod calculus;
pub mod cli;
pub mod config;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod io;
pub mod poly;
pub mod solver;

pub use algebra::{Algebra, AlgebraSpec, AlgebraVector, GroupPoint};
pub use error::{Error, Result};
