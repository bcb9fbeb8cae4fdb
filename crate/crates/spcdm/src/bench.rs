//! Updates-to-target across several τ with a shared seed.

use std::io::Write;
use std::time::Instant;

use serde::Serialize;
use spcdm_core::{Regularizer, SmoothedLoss, SolverConfig};

use crate::error::Result;
use crate::parallel;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub tau: usize,
    pub epochs: usize,
    pub updates: u64,
    pub wall_time: f64,
    pub final_value: f64,
    #[serde(skip)]
    pub reached_target: bool,
}

/// One run per τ, all other settings taken from `base`.
pub fn run(
    loss: &SmoothedLoss,
    reg: &Regularizer,
    base: &SolverConfig,
    taus: &[usize],
) -> Result<Vec<BenchRow>> {
    taus.iter()
        .map(|&tau| {
            let cfg = SolverConfig { tau, ..base.clone() };
            let start = Instant::now();
            let stats = parallel::solve(loss, reg, &cfg, None)?;
            let wall_time = start.elapsed().as_secs_f64();
            Ok(BenchRow {
                tau,
                epochs: stats.epochs_run,
                updates: stats.coordinate_updates,
                wall_time,
                final_value: stats.trace.last().map_or(f64::NAN, |p| p.smoothed),
                reached_target: stats.reached_target,
            })
        })
        .collect()
}

/// `tau,epochs,updates,wall_time,final_value`
pub fn write_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
