//! Simulation kernels for immigration forests, Lamperti-transformed branching
//! processes, square-root SDEs, excursion-type paths and their local times.
//!
//! Everything here is `no_std` (with `alloc`) and pure: every random operation
//! takes an explicit RNG handle. Parallel replicate drivers, file formats and
//! the command line live in the `gsforest` crate.

#![no_std]
// Negated comparisons are how parameter checks reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod excursion;
pub mod forest;
pub mod func;
pub mod lamperti;
pub mod law;
pub mod levy;
pub mod localtime;
pub mod path;
pub mod quad;
pub mod rng;
pub mod sde;
pub mod stats;

pub use error::{Error, Result};
pub use forest::{CousinHeightProcesses, HeightProfile, OffspringSequence};
pub use func::FunctionSpec;
pub use lamperti::CoupledZC;
pub use law::CountLaw;
pub use levy::MechanismSpec;
pub use localtime::LocalTimeProfile;
pub use path::{Interp, KnotPath, SampledPath, Segment, Trajectory};
pub use stats::McSummary;
