//! Batch Monte Carlo experiments, file formats and the command-line front end
//! for `gsforest-core`.

pub mod experiments;
pub mod io;
pub mod mc;
