//! Thread-pool executor for the step phase.

use rayon::prelude::*;
use spcdm_core::solver::{self, RunStats, SerialExecutor, StepExecutor};
use spcdm_core::{Regularizer, SmoothedLoss, SolverConfig};

use crate::error::Result;

/// Blocks smaller than this are computed inline; fanning out a handful of
/// O(nnz(column)) reads costs more than it saves.
pub const MIN_PARALLEL_BLOCK: usize = 64;

pub struct RayonExecutor {
    pool: rayon::ThreadPool,
}

impl RayonExecutor {
    pub fn new(workers: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()?;
        Ok(RayonExecutor { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl StepExecutor for RayonExecutor {
    fn compute_steps(&self, block: &[usize], step: &(dyn Fn(usize) -> f64 + Sync), out: &mut [f64]) {
        if block.len() < MIN_PARALLEL_BLOCK || self.workers() == 1 {
            return SerialExecutor.compute_steps(block, step, out);
        }
        self.pool.install(|| {
            out.par_iter_mut()
                .zip(block.par_iter())
                .with_min_len(16)
                .for_each(|(o, &i)| *o = step(i));
        });
    }
}

/// [`solver::run`] with `cfg.workers` threads.
pub fn solve(
    loss: &SmoothedLoss,
    reg: &Regularizer,
    cfg: &SolverConfig,
    x0: Option<Vec<f64>>,
) -> Result<RunStats> {
    if cfg.workers <= 1 {
        return Ok(solver::run(loss, reg, cfg, x0, &SerialExecutor)?);
    }
    let exec = RayonExecutor::new(cfg.workers)?;
    Ok(solver::run(loss, reg, cfg, x0, &exec)?)
}
