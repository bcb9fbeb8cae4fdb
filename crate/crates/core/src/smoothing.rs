//! Smoothed losses `f_μ(x) = max_{z∈Q} {⟨Ax − b, z⟩ − μ d(z)}` and the
//! incremental state used by coordinate updates.
//!
//! | kind       | Q              | d                     | closed form                          |
//! |------------|----------------|-----------------------|--------------------------------------|
//! | `Linf`     | simplex in ℝ²ᵐ | entropy + log 2m      | `μ log((1/2m) Σ exp(r_j/μ))`, stacked |
//! | `L1`       | `[−1, 1]ᵐ`     | `½ Σ v_j² z_j²`       | `Σ huber_{μ v_j²}(r_j)`              |
//! | `AdaBoost` | simplex in ℝᵐ  | entropy + log m, μ=1  | `log((1/m) Σ exp(b_j (Ax)_j))`       |
//!
//! The log-sum-exp variants keep `exp((r_j − f_ref)/μ)` per row together with
//! the running mean `S = (1/M) Σ_j exp((r_j − f_ref)/μ)`, so that
//! `f_μ = f_ref + μ log S` can be maintained with one pass over a column.

use alloc::vec;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicUsize, Ordering};

use crate::eso::{self, BetaFormula, DualWeights, EsoParams};
use crate::error::{Error, Result};
use crate::problem::ProblemData;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    /// `‖Ãx − b̃‖∞` through the stacked system `[Ã; −Ã]`.
    Linf,
    /// `‖Ax − b‖₁` smoothed into a weighted Huber sum.
    L1,
    /// Logarithm of the exponential loss.
    AdaBoost,
}

impl LossKind {
    pub fn name(&self) -> &'static str {
        match self {
            LossKind::Linf => "linf",
            LossKind::L1 => "l1",
            LossKind::AdaBoost => "adaboost",
        }
    }

    fn is_log_sum_exp(&self) -> bool {
        !matches!(self, LossKind::L1)
    }
}

/// A smoothed loss bound to its working matrix.
///
/// The working matrix is what `f_μ` is written against: the stacked
/// `[Ã; −Ã]` for `Linf`, rows scaled by `b_j` (and zero labels) for
/// `AdaBoost`, and the input itself for `L1`.
#[derive(Debug, Clone)]
pub struct SmoothedLoss {
    kind: LossKind,
    data: ProblemData,
    mu: f64,
    dual: DualWeights,
    /// Huber thresholds `μ v_j²` (L1 only).
    thresholds: Vec<f64>,
}

impl SmoothedLoss {
    /// Builds the working matrix for `kind` from the user-facing problem.
    /// `mu` is ignored for `AdaBoost`, which is fixed at `μ = 1`.
    pub fn new(kind: LossKind, pd: &ProblemData, mu: f64) -> Result<Self> {
        match kind {
            LossKind::Linf => Self::from_working(kind, pd.stack_linf(), mu),
            LossKind::L1 => Self::from_working(kind, pd.clone(), mu),
            LossKind::AdaBoost => {
                let data = pd.scale_rows(pd.b(), vec![0.0; pd.m()])?;
                Self::from_working(kind, data, 1.0)
            }
        }
    }

    /// Wraps an already prepared working matrix.
    pub fn from_working(kind: LossKind, data: ProblemData, mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!(
                "smoothing parameter must be positive, got {mu}"
            )));
        }
        if data.m() == 0 {
            return Err(Error::Dimension("loss needs at least one row".into()));
        }
        let dual = eso::dual_weights(&data, kind)?;
        let thresholds = match kind {
            LossKind::L1 => dual.v.iter().map(|v| mu * v * v).collect(),
            _ => Vec::new(),
        };
        Ok(SmoothedLoss {
            kind,
            data,
            mu,
            dual,
            thresholds,
        })
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn problem(&self) -> &ProblemData {
        &self.data
    }

    pub fn dual_weights(&self) -> &DualWeights {
        &self.dual
    }

    /// `(σ, D)` of the prox function.
    pub fn constants(&self) -> (f64, f64) {
        loss_constants(self.kind, &self.data)
    }

    /// ESO parameters for a τ-nice sampling over the active columns.
    pub fn eso(&self, tau: usize, formula: BetaFormula) -> Result<EsoParams> {
        let n_active = self.data.active_columns().len();
        let (sigma, _) = self.constants();
        EsoParams::new(
            formula,
            self.data.omega(),
            tau,
            n_active,
            self.data.m(),
            sigma,
            self.mu,
        )
    }

    /// `Ax − b` on the working matrix.
    pub fn residuals(&self, x: &[f64]) -> Vec<f64> {
        let mut r: Vec<f64> = self.data.b().iter().map(|b| -b).collect();
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                for (j, a) in self.data.col(i).iter() {
                    r[j] += a * xi;
                }
            }
        }
        r
    }

    /// `f_μ(x)` evaluated from scratch.
    pub fn value_at(&self, x: &[f64]) -> f64 {
        self.value_of_residuals(&self.residuals(x))
    }

    pub fn value_of_residuals(&self, r: &[f64]) -> f64 {
        if self.kind.is_log_sum_exp() {
            shifted_log_mean_exp(r, self.mu)
        } else {
            r.iter()
                .zip(&self.thresholds)
                .map(|(&r, &a)| huber(r, a))
                .sum()
        }
    }

    /// The nonsmooth loss `f(x)` that `f_μ` approximates.
    pub fn nonsmooth_value_at(&self, x: &[f64]) -> f64 {
        let r = self.residuals(x);
        if self.kind.is_log_sum_exp() {
            r.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        } else {
            r.iter().map(|v| v.abs()).sum()
        }
    }

    /// Maximizer `z` of the inner problem for residuals `r`.
    pub fn dual_point(&self, r: &[f64]) -> Vec<f64> {
        if self.kind.is_log_sum_exp() {
            let top = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = r.iter().map(|&v| libm::exp((v - top) / self.mu)).collect();
            let total: f64 = e.iter().sum();
            e.into_iter().map(|v| v / total).collect()
        } else {
            r.iter()
                .zip(&self.thresholds)
                .map(|(&r, &a)| (r / a).clamp(-1.0, 1.0))
                .collect()
        }
    }

    /// `∇f_μ(x) = Aᵀ z(x)`, computed from scratch.
    pub fn gradient_at(&self, x: &[f64]) -> Vec<f64> {
        let z = self.dual_point(&self.residuals(x));
        self.data.matvec_t(&z)
    }

    /// Fresh state at `x0` (residuals and accumulators built from scratch).
    pub fn state(&self, x0: Vec<f64>) -> SmoothState<'_> {
        assert_eq!(x0.len(), self.data.n(), "iterate length must equal n");
        let m = self.data.m();
        let mut st = SmoothState {
            loss: self,
            x: x0,
            r: vec![0.0; m],
            expo: if self.kind.is_log_sum_exp() { vec![0.0; m] } else { Vec::new() },
            f_ref: 0.0,
            lse_acc: 1.0,
            staleness: 0,
            reads: AtomicUsize::new(0),
        };
        st.recompute();
        st
    }
}

/// `(σ, D)`: strong convexity modulus and maximum of the prox function for the
/// working matrix of `kind`.
///
/// `D = log M` for the log-sum-exp variants (`M` = working rows, i.e. `2m` for
/// the stacked L-infinity system) and `½ Σ v_j²` for L1, which is the exact
/// maximum of `½ Σ v_j² z_j²` over the box.
pub fn loss_constants(kind: LossKind, working: &ProblemData) -> (f64, f64) {
    match kind {
        LossKind::Linf | LossKind::AdaBoost => (1.0, libm::log(working.m() as f64)),
        LossKind::L1 => {
            let d = (0..working.m())
                .map(|j| {
                    let v = working.row(j).sq_norm();
                    v * v
                })
                .sum::<f64>()
                * 0.5;
            (1.0, d)
        }
    }
}

/// `t²/2a` on `|t| ≤ a`, `|t| − a/2` beyond.
pub fn huber(t: f64, a: f64) -> f64 {
    let t = t.abs();
    if t <= a {
        t * t / (2.0 * a)
    } else {
        t - a / 2.0
    }
}

/// `μ log((1/M) Σ exp(r_j/μ))` with the maximum shifted out.
fn shifted_log_mean_exp(r: &[f64], mu: f64) -> f64 {
    let top = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = r.iter().map(|&v| libm::exp((v - top) / mu)).sum();
    top + mu * libm::log(sum / r.len() as f64)
}

/// Iterate, residuals and (for log-sum-exp losses) the running normalizer.
///
/// Single writer: [`SmoothState::apply_update`] needs `&mut self`, while
/// [`SmoothState::partial_gradient`] only reads and may run from many threads
/// against the same snapshot.
#[derive(Debug)]
pub struct SmoothState<'a> {
    loss: &'a SmoothedLoss,
    x: Vec<f64>,
    r: Vec<f64>,
    expo: Vec<f64>,
    f_ref: f64,
    lse_acc: f64,
    staleness: usize,
    reads: AtomicUsize,
}

impl<'a> SmoothState<'a> {
    pub fn loss(&self) -> &'a SmoothedLoss {
        self.loss
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn residuals(&self) -> &[f64] {
        &self.r
    }

    /// `S_x(h)`: one right after a recompute. Always one for L1.
    pub fn lse_acc(&self) -> f64 {
        self.lse_acc
    }

    /// Cached `f_μ` at the last recompute (log-sum-exp losses).
    pub fn f_ref(&self) -> f64 {
        self.f_ref
    }

    pub fn staleness(&self) -> usize {
        self.staleness
    }

    /// Matrix entries read by `partial_gradient` so far.
    pub fn entries_read(&self) -> usize {
        self.reads.load(Ordering::Relaxed)
    }

    /// `f_μ(x)` from the maintained state.
    pub fn value(&self) -> f64 {
        if self.loss.kind.is_log_sum_exp() {
            self.f_ref + self.loss.mu * libm::log(self.lse_acc)
        } else {
            self.loss.value_of_residuals(&self.r)
        }
    }

    /// `∇f_μ(x)` through a fresh dual point (reference path, O(nnz)).
    pub fn full_gradient(&self) -> Vec<f64> {
        let z = self.loss.dual_point(&self.r);
        self.loss.data.matvec_t(&z)
    }

    /// `⟨a_i, z⟩` with one pass over column `i`.
    pub fn partial_gradient(&self, i: usize) -> f64 {
        let col = self.loss.data.col(i);
        self.reads.fetch_add(col.nnz(), Ordering::Relaxed);
        if self.loss.kind.is_log_sum_exp() {
            let dot: f64 = col.iter().map(|(j, a)| a * self.expo[j]).sum();
            dot / (self.r.len() as f64 * self.lse_acc)
        } else {
            col.iter()
                .map(|(j, a)| a * (self.r[j] / self.loss.thresholds[j]).clamp(-1.0, 1.0))
                .sum()
        }
    }

    /// `x_i += h`, with residuals (and the normalizer) patched along column `i`
    /// in ascending row order.
    pub fn apply_update(&mut self, i: usize, h: f64) {
        self.x[i] += h;
        let col = self.loss.data.col(i);
        if self.loss.kind.is_log_sum_exp() {
            let mu = self.loss.mu;
            let mut delta = 0.0;
            for (j, a) in col.iter() {
                self.r[j] += a * h;
                let e = libm::exp((self.r[j] - self.f_ref) / mu);
                delta += e - self.expo[j];
                self.expo[j] = e;
            }
            self.lse_acc += delta / self.r.len() as f64;
        } else {
            for (j, a) in col.iter() {
                self.r[j] += a * h;
            }
        }
        self.staleness += 1;
    }

    /// Rebuilds residuals from `x` and re-anchors the normalizer at `S = 1`.
    pub fn recompute(&mut self) {
        self.r = self.loss.residuals(&self.x);
        if self.loss.kind.is_log_sum_exp() {
            let mu = self.loss.mu;
            self.f_ref = shifted_log_mean_exp(&self.r, mu);
            for (e, &r) in self.expo.iter_mut().zip(&self.r) {
                *e = libm::exp((r - self.f_ref) / mu);
            }
        }
        self.lse_acc = 1.0;
        self.staleness = 0;
    }

    /// Recompute policy: every `period` updates, or when the normalizer leaves
    /// `[1e-6, 1e6]` (or is no longer finite).
    pub fn needs_recompute(&self, period: usize) -> bool {
        self.staleness >= period
            || !self.lse_acc.is_finite()
            || !(1e-6..=1e6).contains(&self.lse_acc)
    }
}

pub mod check {
    //! Central finite differences against the from-scratch loss value.

    use alloc::vec::Vec;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::{LossKind, SmoothedLoss};
    use crate::error::Result;
    use crate::problem::ProblemData;

    pub const DEFAULT_STEP: f64 = 1e-6;
    pub const DEFAULT_TOLERANCE: f64 = 1e-5;

    /// `(f(x + s e_i) − f(x − s e_i)) / 2s` for every coordinate.
    pub fn finite_difference_gradient(loss: &SmoothedLoss, x: &[f64], step: f64) -> Vec<f64> {
        let mut probe = x.to_vec();
        (0..x.len())
            .map(|i| {
                probe[i] = x[i] + step;
                let up = loss.value_at(&probe);
                probe[i] = x[i] - step;
                let down = loss.value_at(&probe);
                probe[i] = x[i];
                (up - down) / (2.0 * step)
            })
            .collect()
    }

    /// `‖a − b‖₂ / max(‖a‖₂, ‖b‖₂)`, zero when both vanish.
    pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
        let diff = libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum());
        let scale = libm::sqrt(a.iter().map(|v| v * v).sum::<f64>())
            .max(libm::sqrt(b.iter().map(|v| v * v).sum::<f64>()));
        if scale == 0.0 {
            0.0
        } else {
            diff / scale
        }
    }

    /// A small random loss and point whose residuals sit at the smoothing
    /// scale, so that the curvature introduced by `μ` is actually probed.
    pub fn instance(kind: LossKind, mu: f64, seed: u64) -> Result<(SmoothedLoss, Vec<f64>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let (m, n) = (12, 8);
        let base = ProblemData::synthetic(m, n, 3, seed)?;
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let ax = base.matvec(&x);
        let pd = match kind {
            LossKind::L1 => {
                let b = (0..m)
                    .map(|j| {
                        let v = base.row(j).sq_norm();
                        ax[j] - mu * v * v * rng.gen_range(-2.0..2.0)
                    })
                    .collect();
                base.scale_rows(&alloc::vec![1.0; m], b)?
            }
            LossKind::Linf => {
                let b = ax.iter().map(|v| v - mu * rng.gen_range(-3.0..3.0)).collect();
                base.scale_rows(&alloc::vec![1.0; m], b)?
            }
            LossKind::AdaBoost => base,
        };
        Ok((SmoothedLoss::new(kind, &pd, mu)?, x))
    }

    #[derive(Debug, Clone, PartialEq)]
    pub struct GradcheckReport {
        pub instances: usize,
        pub max_rel_error: f64,
        /// Seed of the instance with the largest error.
        pub worst_seed: u64,
    }

    /// Runs `instances` random checks with seeds `seed, seed+1, …`.
    pub fn run(kind: LossKind, mu: f64, seed: u64, instances: usize) -> Result<GradcheckReport> {
        let mut report = GradcheckReport {
            instances,
            max_rel_error: 0.0,
            worst_seed: seed,
        };
        for k in 0..instances as u64 {
            let (loss, x) = instance(kind, mu, seed + k)?;
            let analytic = loss.state(x.clone()).full_gradient();
            let fd = finite_difference_gradient(&loss, &x, DEFAULT_STEP);
            let err = relative_error(&analytic, &fd);
            if !(err <= report.max_rel_error) {
                report.max_rel_error = err;
                report.worst_seed = seed + k;
            }
        }
        Ok(report)
    }
}
