//! Dual fractional operator `∂_t^α + (-Δ)^s`: evaluators, a space-time
//! solver and checks of qualitative properties of its solutions.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod descriptor;
pub mod error;
pub mod field;
pub mod frac_space;
pub mod frac_time;
pub mod grid;
pub mod params;
pub mod principles;
pub mod quad;
pub mod report;
pub mod solver;

pub use descriptor::{Family, FunctionDescriptor, SpaceTimeDescriptor, TailClass};
pub use error::{Error, Result};
pub use field::{antisymmetric_difference, growth_check, reflect_point, Extension, Exterior, HistoryField};
pub use grid::{DomainKind, SpaceGrid};
pub use params::FracParams;
pub use report::{ExperimentReport, Verdict};
pub use solver::{run_ivp, Problem, ReactionSpec, SolveConfig, Trajectory};
