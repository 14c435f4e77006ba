//! Numerical back ends: a log-barrier Newton method for composite convex
//! programs, an exact transportation LP and the Hungarian method.

pub mod barrier;
pub mod hungarian;
pub mod mincost;

pub use barrier::{minimize, ConvexProgram, Equality, Solution, SolverOptions, Term};
