//! IO, threading and the command line for the `spcdm-core` solver.
//!
//! * [`svmlight`]: dataset reader and writer.
//! * [`parallel`]: a rayon step executor and [`parallel::solve`].
//! * [`report`]: JSON run reports (`schema: 1`) and CSV traces.
//! * [`bench`]: updates-to-target sweeps over τ.
//! * [`cli`]: the `spcdm` binary.

pub mod bench;
pub mod cli;
pub mod error;
pub mod parallel;
pub mod report;
pub mod svmlight;

pub use error::{Error, Result};
pub use spcdm_core;
