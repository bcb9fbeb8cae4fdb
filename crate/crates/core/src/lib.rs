//! Smoothed parallel coordinate descent (SPCDM) for nonsmooth, Nesterov-separable
//! convex losses.
//!
//! The crate is `no_std` and only needs `alloc`. It covers:
//!
//! * [`problem`]: sparse data in paired row/column layouts, row sparsity degree `ω`,
//!   synthetic instances and the stacked L-infinity system.
//! * [`sampling`]: replayable τ-nice subsets and the hypergeometric quantities that
//!   drive the ESO stepsize factors.
//! * [`eso`]: dual/primal norm weights `v` and `w*`, the three `β′` formulas,
//!   subspace Lipschitz constants and a small-scale operator norm oracle.
//! * [`smoothing`]: the smoothed L-infinity, L1 (Huber) and log-exponential losses
//!   with residuals maintained under single-coordinate updates.
//! * [`solver`]: the parallel proximal coordinate loop and iteration-bound
//!   calculators.
//!
//! IO, command line handling and thread pools live in the `spcdm` crate.

#![no_std]
#![deny(unsafe_code)]
// `!(x > 0.0)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod eso;
pub mod error;
pub mod problem;
pub mod sampling;
pub mod smoothing;
pub mod solver;

pub use error::{Error, Result};
pub use eso::{BetaFormula, DualWeights, EsoParams, NormKind, PrimalWeights};
pub use problem::{ProblemData, RowSparsityProfile, SparseVec};
pub use sampling::{Sampler, SamplingSpec};
pub use smoothing::{LossKind, SmoothState, SmoothedLoss};
pub use solver::{Regularizer, RunStats, SolverConfig, StepExecutor};
