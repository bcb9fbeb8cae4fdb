//! Smoothed parallel coordinate descent.
//!
//! Each iteration draws a τ-nice block `S`, computes every step `h_i`,
//! `i ∈ S`, against the same frozen state, then applies the steps one by one
//! in ascending `i`. Step computation is delegated to a [`StepExecutor`] so the
//! std crate can fan it out over threads; since every step only reads the
//! frozen state, the result does not depend on the executor.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::eso::{self, BetaFormula, EsoParams, NormKind};
use crate::error::{Error, Result};
use crate::sampling::{Sampler, SamplingSpec};
use crate::smoothing::{SmoothState, SmoothedLoss};

/// Separable regularizer `Ψ(x) = Σ Ψ_i(x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Regularizer {
    None,
    /// `λ |t|`
    L1(f64),
    /// Indicator of `[lo_i, hi_i]`. A single-element vector applies to every
    /// coordinate.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// `(δ/2) w*_i t²`
    Ridge(f64),
}

impl Regularizer {
    pub fn boxed(lo: f64, hi: f64) -> Self {
        Regularizer::Box {
            lo: vec![lo],
            hi: vec![hi],
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match self {
            Regularizer::None => Ok(()),
            Regularizer::L1(l) if !(*l >= 0.0 && l.is_finite()) => {
                bad(format!("l1 weight must be nonnegative, got {l}"))
            }
            Regularizer::Ridge(d) if !(*d >= 0.0 && d.is_finite()) => {
                bad(format!("ridge weight must be nonnegative, got {d}"))
            }
            Regularizer::Box { lo, hi } => {
                for len in [lo.len(), hi.len()] {
                    if len != 1 && len != n {
                        return bad(format!("box bounds need length 1 or {n}, got {len}"));
                    }
                }
                for i in 0..n {
                    let (l, h) = self.bounds(i);
                    if l.is_nan() || h.is_nan() || l > h {
                        return bad(format!("box bounds [{l}, {h}] empty at coordinate {i}"));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn bounds(&self, i: usize) -> (f64, f64) {
        match self {
            Regularizer::Box { lo, hi } => (
                lo[if lo.len() == 1 { 0 } else { i }],
                hi[if hi.len() == 1 { 0 } else { i }],
            ),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Strong convexity modulus of `Ψ` with respect to `‖·‖_{w*}`.
    pub fn strong_convexity(&self) -> f64 {
        match self {
            Regularizer::Ridge(d) => *d,
            _ => 0.0,
        }
    }

    /// `Ψ(x)`; `w` is only read by the ridge term.
    pub fn value(&self, x: &[f64], w: &[f64]) -> f64 {
        match self {
            Regularizer::None => 0.0,
            Regularizer::L1(l) => l * x.iter().map(|v| v.abs()).sum::<f64>(),
            Regularizer::Ridge(d) => 0.5 * d * x.iter().zip(w).map(|(x, w)| w * x * x).sum::<f64>(),
            Regularizer::Box { .. } => {
                let inside = x.iter().enumerate().all(|(i, &v)| {
                    let (l, h) = self.bounds(i);
                    l <= v && v <= h
                });
                if inside {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Nearest point of `dom Ψ`.
    pub fn project(&self, x: &mut [f64]) {
        if let Regularizer::Box { .. } = self {
            for (i, v) in x.iter_mut().enumerate() {
                let (l, h) = self.bounds(i);
                *v = v.clamp(l, h);
            }
        }
    }

    /// `argmin_t g t + (β w / 2) t² + Ψ_i(x_i + t)`.
    pub fn prox_step(&self, i: usize, grad: f64, x: f64, beta: f64, w: f64) -> f64 {
        let bw = beta * w;
        match self {
            Regularizer::None => -grad / bw,
            Regularizer::L1(l) => soft_threshold(x - grad / bw, l / bw) - x,
            Regularizer::Box { .. } => {
                let (lo, hi) = self.bounds(i);
                (x - grad / bw).clamp(lo, hi) - x
            }
            Regularizer::Ridge(d) => -(grad + d * w * x) / ((beta + d) * w),
        }
    }
}

fn soft_threshold(t: f64, k: f64) -> f64 {
    if t > k {
        t - k
    } else if t < -k {
        t + k
    } else {
        0.0
    }
}

/// When to stop early. Checked at every trace point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    /// `F_μ(x) ≤ value`
    Smoothed(f64),
    /// `F(x) − lower_bound ≤ eps`, with `F` the nonsmooth objective.
    Accuracy { eps: f64, lower_bound: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub tau: usize,
    pub seed: u64,
    pub beta_formula: BetaFormula,
    pub max_epochs: usize,
    pub target: Option<Target>,
    /// Epochs between objective evaluations.
    pub trace_every: usize,
    /// Threads for the step phase; read by executors, not by [`run`].
    pub workers: usize,
}

impl SolverConfig {
    pub fn new(tau: usize, seed: u64) -> Self {
        SolverConfig {
            tau,
            seed,
            beta_formula: BetaFormula::Beta2,
            max_epochs: 100,
            target: None,
            trace_every: 1,
            workers: 1,
        }
    }

    /// Default β′ formula for the loss's dual norm.
    pub fn for_loss(loss: &SmoothedLoss, tau: usize, seed: u64) -> Self {
        let p = loss.dual_weights().p;
        SolverConfig {
            beta_formula: BetaFormula::default_for(p),
            ..Self::new(tau, seed)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub epoch: usize,
    /// `F_μ(x) = f_μ(x) + Ψ(x)`
    pub smoothed: f64,
    /// `F(x) = f(x) + Ψ(x)`
    pub nonsmooth: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunStats {
    pub epochs_run: usize,
    pub iterations: u64,
    pub coordinate_updates: u64,
    pub recomputes: u64,
    pub reached_target: bool,
    pub eso: EsoParams,
    pub trace: Vec<TracePoint>,
    pub x: Vec<f64>,
}

/// Computes `out[k] = step(block[k])` for every `k`.
pub trait StepExecutor {
    fn compute_steps(&self, block: &[usize], step: &(dyn Fn(usize) -> f64 + Sync), out: &mut [f64]);
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SerialExecutor;

impl StepExecutor for SerialExecutor {
    fn compute_steps(&self, block: &[usize], step: &(dyn Fn(usize) -> f64 + Sync), out: &mut [f64]) {
        for (o, &i) in out.iter_mut().zip(block) {
            *o = step(i);
        }
    }
}

/// Runs the method from `x0` (zero if `None`; projected onto `dom Ψ`).
///
/// An epoch is `⌈n_active/τ⌉` iterations, so roughly `n_active` coordinate
/// updates; columns without nonzeros are never sampled. The state is rebuilt
/// from scratch every `n_active` updates, whenever the normalizer drifts out
/// of range, and at each trace point.
pub fn run(
    loss: &SmoothedLoss,
    reg: &Regularizer,
    cfg: &SolverConfig,
    x0: Option<Vec<f64>>,
    exec: &dyn StepExecutor,
) -> Result<RunStats> {
    let pd = loss.problem();
    let n = pd.n();
    reg.validate(n)?;
    if cfg.trace_every == 0 {
        return Err(Error::InvalidParameter("trace_every must be at least 1".into()));
    }
    if let Some(Target::Accuracy { eps, .. }) = cfg.target {
        if !(eps > 0.0) {
            return Err(Error::InvalidParameter(format!("accuracy must be positive, got {eps}")));
        }
    }
    let active = pd.active_columns();
    let n_active = active.len().max(1);
    if cfg.tau == 0 || cfg.tau > n_active {
        return Err(Error::InvalidParameter(format!(
            "tau = {} must lie in 1..={n_active} (active columns)",
            cfg.tau
        )));
    }
    let eso = loss.eso(cfg.tau, cfg.beta_formula)?;
    let w = eso::primal_weights(pd, loss.dual_weights()).w;

    let mut x = x0.unwrap_or_else(|| vec![0.0; n]);
    if x.len() != n {
        return Err(Error::Dimension(format!("x0 has length {} but n = {n}", x.len())));
    }
    reg.project(&mut x);
    let mut st = loss.state(x);

    let mut stats = RunStats {
        epochs_run: 0,
        iterations: 0,
        coordinate_updates: 0,
        recomputes: 0,
        reached_target: false,
        eso,
        trace: Vec::new(),
        x: Vec::new(),
    };
    let point = trace_point(&st, reg, &w, 0)?;
    stats.trace.push(point);
    stats.reached_target = hit(cfg.target, &point);
    if stats.reached_target || active.is_empty() {
        stats.x = st.x().to_vec();
        return Ok(stats);
    }

    let sampler_spec = SamplingSpec::tau_nice(active.len(), cfg.tau, cfg.seed)?;
    let mut sampler = Sampler::new(sampler_spec);
    let iters_per_epoch = active.len().div_ceil(cfg.tau) as u64;
    let mut picks = Vec::with_capacity(cfg.tau);
    let mut block = Vec::with_capacity(cfg.tau);
    let mut steps = vec![0.0; cfg.tau];
    let beta = eso.beta;

    for epoch in 1..=cfg.max_epochs {
        for _ in 0..iters_per_epoch {
            sampler.draw_into(stats.iterations, &mut picks);
            block.clear();
            // `active` is sorted, so the block stays ascending
            block.extend(picks.iter().map(|&k| active[k]));
            {
                let frozen = &st;
                let step = |i: usize| {
                    reg.prox_step(i, frozen.partial_gradient(i), frozen.x()[i], beta, w[i])
                };
                exec.compute_steps(&block, &step, &mut steps);
            }
            for (&i, &h) in block.iter().zip(&steps) {
                if h != 0.0 {
                    st.apply_update(i, h);
                }
            }
            stats.iterations += 1;
            stats.coordinate_updates += block.len() as u64;
            if st.needs_recompute(active.len()) {
                st.recompute();
                stats.recomputes += 1;
            }
        }
        stats.epochs_run = epoch;
        if epoch % cfg.trace_every == 0 || epoch == cfg.max_epochs {
            st.recompute();
            stats.recomputes += 1;
            let point = trace_point(&st, reg, &w, epoch)?;
            stats.trace.push(point);
            if hit(cfg.target, &point) {
                stats.reached_target = true;
                break;
            }
        }
    }
    stats.x = st.x().to_vec();
    Ok(stats)
}

fn trace_point(st: &SmoothState<'_>, reg: &Regularizer, w: &[f64], epoch: usize) -> Result<TracePoint> {
    let psi = reg.value(st.x(), w);
    let smoothed = st.value() + psi;
    let nonsmooth = st.loss().nonsmooth_value_at(st.x()) + psi;
    if !smoothed.is_finite() || !nonsmooth.is_finite() {
        return Err(Error::NonFinite { epoch });
    }
    Ok(TracePoint {
        epoch,
        smoothed,
        nonsmooth,
    })
}

fn hit(target: Option<Target>, p: &TracePoint) -> bool {
    match target {
        None => false,
        Some(Target::Smoothed(v)) => p.smoothed <= v,
        Some(Target::Accuracy { eps, lower_bound }) => p.nonsmooth - lower_bound <= eps,
    }
}

/// `μ = ε′/(2D)`: the smoothing that keeps the approximation error at `ε′/2`.
pub fn choose_mu(eps_prime: f64, d: f64) -> Result<f64> {
    if d <= 0.0 || !d.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "prox function range D = {d} leaves nothing to smooth against"
        )));
    }
    if !(eps_prime > 0.0 && eps_prime.is_finite()) {
        return Err(Error::InvalidParameter(format!("accuracy must be positive, got {eps_prime}")));
    }
    Ok(eps_prime / (2.0 * d))
}

/// Problem-dependent constants the complexity bounds need but cannot compute.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundCase {
    /// Strong convexity of `f_μ` and `Ψ` with respect to `‖·‖_{w*}`.
    StronglyConvex { sigma_f: f64, sigma_psi: f64 },
    /// Level-set diameter in `‖·‖_{w*}`.
    Convex { diameter: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    pub n: usize,
    pub tau: usize,
    pub omega: usize,
    pub beta_prime: f64,
    pub sigma: f64,
    /// Target accuracy: `ε` on `F_μ` for the smoothed bound, `ε′` on `F` for
    /// the nonsmooth one.
    pub eps: f64,
    pub rho: f64,
    /// `F_μ(x₀) − min F_μ` (smoothed) or `F(x₀) − min F` (nonsmooth).
    pub initial_gap: f64,
    pub case: BoundCase,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationBound {
    pub iterations: f64,
    pub warning: Option<String>,
}

impl BoundParams {
    fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.tau == 0 || self.tau > self.n {
            return bad(format!("tau must lie in 1..={}, got {}", self.n, self.tau));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return bad(format!("confidence level must lie in (0, 1), got {}", self.rho));
        }
        if !(self.eps > 0.0 && self.sigma > 0.0 && self.beta_prime > 0.0) {
            return bad("eps, sigma and beta' must be positive".into());
        }
        if !(self.initial_gap > self.eps) {
            return bad(format!(
                "accuracy {} must be below the initial gap {}",
                self.eps, self.initial_gap
            ));
        }
        if let BoundCase::StronglyConvex { sigma_f, sigma_psi } = self.case {
            if !(sigma_f >= 0.0 && sigma_psi >= 0.0 && sigma_f + sigma_psi > 0.0) {
                return bad("strong convexity constants must be nonnegative with a positive sum".into());
            }
        }
        Ok(())
    }

    fn convex_warning(&self) -> Option<String> {
        let b1 = eso::beta1(self.omega, self.tau);
        match self.case {
            BoundCase::Convex { .. } if self.beta_prime != b1 => Some(format!(
                "the convex-case bound assumes beta' = min(omega, tau) = {b1}, got {}",
                self.beta_prime
            )),
            _ => None,
        }
    }
}

/// Iterations after which `F_μ(x_k) − min F_μ ≤ ε` with probability `1 − ρ`.
pub fn iter_bound_smoothed(p: &BoundParams, mu: f64) -> Result<IterationBound> {
    p.check()?;
    if !(mu > 0.0) {
        return Err(Error::InvalidParameter(format!("mu must be positive, got {mu}")));
    }
    let (n, tau) = (p.n as f64, p.tau as f64);
    let log = libm::log(p.initial_gap / (p.eps * p.rho));
    let k = match p.case {
        BoundCase::StronglyConvex { sigma_f, sigma_psi } => {
            n / tau * (p.beta_prime / (mu * p.sigma) + sigma_psi) / (sigma_f + sigma_psi) * log
        }
        BoundCase::Convex { diameter } => {
            let beta = p.beta_prime / (p.sigma * mu);
            if p.eps >= 2.0 * n * beta / tau {
                return Err(Error::InvalidParameter(format!(
                    "convex-case bound needs eps < 2 n beta / tau = {}",
                    2.0 * n * beta / tau
                )));
            }
            n * p.beta_prime / tau * 2.0 * diameter * diameter / (mu * p.sigma * p.eps) * log
        }
    };
    Ok(IterationBound {
        iterations: libm::ceil(k),
        warning: p.convex_warning(),
    })
}

/// Iterations after which `F(x_k) − min F ≤ ε′` with probability `1 − ρ`,
/// running on `F_μ` with `μ = ε′/(2D)`.
pub fn iter_bound_nonsmooth(p: &BoundParams, d: f64) -> Result<IterationBound> {
    p.check()?;
    choose_mu(p.eps, d)?;
    let (n, tau, e) = (p.n as f64, p.tau as f64, p.eps);
    let log = libm::log((2.0 * p.initial_gap + e) / (e * p.rho));
    let k = match p.case {
        BoundCase::StronglyConvex { sigma_f, sigma_psi } => {
            n / tau * (2.0 * p.beta_prime * d / (p.sigma * e) + sigma_psi) / (sigma_f + sigma_psi)
                * log
        }
        BoundCase::Convex { diameter } => {
            let limit = 8.0 * n * d * p.beta_prime / (p.sigma * tau);
            if e * e >= limit {
                return Err(Error::InvalidParameter(format!(
                    "convex-case bound needs eps'^2 < 8 n D beta' / (sigma tau) = {limit}"
                )));
            }
            n * p.beta_prime / tau * 8.0 * d * diameter * diameter / (p.sigma * e * e) * log
        }
    };
    Ok(IterationBound {
        iterations: libm::ceil(k),
        warning: p.convex_warning(),
    })
}

/// β′ the default formula yields for the given dual norm.
pub fn default_beta_prime(p: NormKind, omega: usize, tau: usize, n: usize, m: usize) -> f64 {
    match BetaFormula::default_for(p) {
        BetaFormula::Beta3 => eso::beta3(omega, tau, n, m),
        _ => eso::beta2(omega, tau, n),
    }
}
