//! JSON run reports and CSV traces.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use spcdm_core::solver::{RunStats, TracePoint};

use crate::error::Result;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: u32,
    pub app: String,
    pub epochs_run: usize,
    pub iterations: u64,
    pub coordinate_updates: u64,
    pub recomputes: u64,
    pub reached_target: bool,
    pub wall_time_secs: f64,
    pub objective_trace: Vec<TraceRow>,
    pub final_x: XSummary,
    pub eso: EsoEcho,
    pub config: ConfigEcho,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub epoch: usize,
    /// Smoothed objective `F_μ`.
    pub smoothed: f64,
    /// Nonsmooth objective `F`.
    pub nonsmooth: f64,
}

impl From<&TracePoint> for TraceRow {
    fn from(p: &TracePoint) -> Self {
        TraceRow {
            epoch: p.epoch,
            smoothed: p.smoothed,
            nonsmooth: p.nonsmooth,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XSummary {
    pub norm: f64,
    pub nnz: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsoEcho {
    pub formula: String,
    pub beta_prime: f64,
    pub sigma: f64,
    pub mu: f64,
    pub beta: f64,
    pub omega: usize,
    pub n_active: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub dataset: Option<String>,
    pub tau: usize,
    pub seed: u64,
    pub mu: f64,
    pub eps: Option<f64>,
    pub lower_bound: Option<f64>,
    pub target: Option<f64>,
    pub beta: String,
    pub regularizer: String,
    pub max_epochs: usize,
    pub trace_every: usize,
    pub workers: usize,
}

impl RunReport {
    pub fn new(
        app: &str,
        stats: &RunStats,
        wall_time_secs: f64,
        omega: usize,
        n_active: usize,
        config: ConfigEcho,
    ) -> Self {
        let norm = stats.x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nnz = stats.x.iter().filter(|v| **v != 0.0).count();
        RunReport {
            schema: SCHEMA,
            app: app.to_string(),
            epochs_run: stats.epochs_run,
            iterations: stats.iterations,
            coordinate_updates: stats.coordinate_updates,
            recomputes: stats.recomputes,
            reached_target: stats.reached_target,
            wall_time_secs,
            objective_trace: stats.trace.iter().map(TraceRow::from).collect(),
            final_x: XSummary { norm, nnz },
            eso: EsoEcho {
                formula: stats.eso.formula.name().to_string(),
                beta_prime: stats.eso.beta_prime,
                sigma: stats.eso.sigma,
                mu: stats.eso.mu,
                beta: stats.eso.beta,
                omega,
                n_active,
            },
            config,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }
}

/// `epoch,smoothed,nonsmooth` with a header row.
pub fn write_trace<W: Write>(trace: &[TraceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in trace {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
