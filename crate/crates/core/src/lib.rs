//! Calculus of variations on unbounded time scales.
//!
//! A [`TimeScale`] is a finite union of closed intervals and point sets
//! ending in a ray or an arithmetic progression. On top of it the crate
//! provides delta derivatives and integrals, improper integrals with limit
//! classification, and an infinite-horizon variational toolkit: residuals of
//! the Euler-Lagrange equation, the transversality lim-inf, weak-maximality
//! comparisons, a truncated direct solver and a candidate verifier.

pub mod calculus;
pub mod error;
pub mod expr;
pub mod problem_file;
pub mod problems;
pub mod timescale;
pub mod variational;

pub use calculus::{GridFunction, LimitConfig, LimitEstimate, LimitKind};
pub use error::{Error, Result};
pub use problem_file::ProblemFile;
pub use timescale::{PointClass, SampleGrid, Segment, TimeScale};
pub use variational::{Lagrangian, Path, Problem, Trajectory};
